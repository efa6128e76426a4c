#include "kliep/solvers.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace kliep {

namespace {

constexpr double kStepGrowth = 1.1;
constexpr int kLbfgsMemory = 10;
constexpr int kMaxLineSearch = 60;
constexpr double kArmijo = 1e-4;
constexpr double kValueNoise = 1e-12;
constexpr int kMaxStalled = 50;
constexpr double kMaxLogitStep = 10.0;

void apply_group_prox(Eigen::VectorXd& v, int b, double tau)
{
    const Eigen::Index blocks = v.size() / b;
    for (Eigen::Index t = 0; t < blocks; ++t) {
        auto seg = v.segment(t * b, b);
        const double nrm = seg.norm();
        if (nrm <= tau) {
            seg.setZero();
        } else {
            seg *= 1.0 - tau / nrm;
        }
    }
}

// log(sum_i w_i exp(e_i)) for weights w on the simplex, accurate for small e.
double lse_delta(const Eigen::VectorXd& w, const Eigen::VectorXd& e)
{
    const double m = e.maxCoeff();
    if (m <= 1.0) {
        const double r =
            (w.array() * e.array().unaryExpr([](double v) { return std::expm1(v); })).sum();
        if (r > -0.5) {
            return std::log1p(r);
        }
    }
    return m + std::log((w.array() * (e.array() - m).exp()).sum());
}

// sum_t ||to_t|| - ||from_t||, formed as a difference of squares per block.
double group_norm_delta(const Eigen::VectorXd& from, const Eigen::VectorXd& to, int b)
{
    double total = 0.0;
    for (Eigen::Index t = 0; t < from.size() / b; ++t) {
        const auto f = from.segment(t * b, b);
        const auto s = to.segment(t * b, b);
        const double denom = f.norm() + s.norm();
        if (denom > 0.0) {
            total += (s - f).dot(s + f) / denom;
        }
    }
    return total;
}

Eigen::VectorXd uniform_alpha(Eigen::Index n)
{
    return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

// xi at uniform alpha, equal to the block gradients of ell_KLIEP at theta = 0.
Eigen::VectorXd zero_residual(const FeatureCache& cache)
{
    const Eigen::Index n = cache.n_q();
    return cache.g() - cache.hq() * Eigen::VectorXd::Ones(n) / static_cast<double>(n);
}

Eigen::VectorXd warm_theta(const SolveConfig& cfg, const FeatureCache& cache)
{
    if (const auto* p = std::get_if<ParamVector>(&cfg.warm_start)) {
        if (p->dims() != cache.dims() || !(p->spec() == cache.spec())) {
            throw std::invalid_argument("warm start does not match problem layout");
        }
        return p->flat();
    }
    if (const auto* st = std::get_if<DualState>(&cfg.warm_start)) {
        if (cfg.lambda1 <= 0.0) {
            throw std::invalid_argument("dual warm start needs lambda1 > 0 on the primal route");
        }
        return recover_primal(*st, cfg.lambda1, cfg.lambda2).flat();
    }
    return Eigen::VectorXd::Zero(cache.num_params());
}

// Evaluation of the dual at logits z, alpha = softmax(z).
struct DualEval
{
    Eigen::VectorXd alpha;
    Eigen::VectorXd xi;
    Eigen::VectorXd theta;
    Eigen::VectorXd grad_z;
    double value = 0.0;
    double stationarity = 0.0;
};

DualEval evaluate_dual(const Eigen::VectorXd& z, const FeatureCache& cache, double lambda1,
                       double lambda2)
{
    DualEval ev;
    const double shift = z.maxCoeff();
    const double lse = shift + std::log((z.array() - shift).exp().sum());
    const Eigen::ArrayXd log_alpha = z.array() - lse;
    ev.alpha = log_alpha.exp().matrix();
    ev.xi = cache.g() - cache.hq() * ev.alpha;
    ev.theta = Eigen::VectorXd::Zero(ev.xi.size());

    const int b = cache.block_size();
    double hinge = 0.0;
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(cache.num_blocks()); ++t) {
        const auto seg = ev.xi.segment(t * b, b);
        const double nrm = seg.norm();
        if (nrm > lambda2) {
            const double h = nrm - lambda2;
            hinge += h * h;
            ev.theta.segment(t * b, b) = (h / (nrm * lambda1)) * seg;
        }
    }
    ev.value = (ev.alpha.array() * log_alpha).sum() + hinge / (2.0 * lambda1);

    // d/d alpha = log alpha + 1 - H^T theta(alpha); chain through the softmax.
    const Eigen::ArrayXd grad_alpha =
        log_alpha + 1.0 - (cache.hq().transpose() * ev.theta).array();
    const double mean = (ev.alpha.array() * grad_alpha).sum();
    ev.grad_z = (ev.alpha.array() * (grad_alpha - mean)).matrix();
    // The optimum is the unique fixed point alpha = softmax(H^T theta(alpha));
    // measure the distance to it in total variation.
    const Eigen::VectorXd s = cache.hq().transpose() * ev.theta;
    ev.stationarity = (ev.alpha - softmax(s)).lpNorm<1>();
    return ev;
}

} // namespace

std::string to_string(Route route)
{
    switch (route) {
        case Route::Auto: return "auto";
        case Route::Primal: return "primal";
        case Route::Dual: return "dual";
    }
    return "unknown";
}

Route parse_route(const std::string& name)
{
    if (name == "auto") return Route::Auto;
    if (name == "primal") return Route::Primal;
    if (name == "dual") return Route::Dual;
    throw std::invalid_argument("unknown route '" + name + "'");
}

DualState make_dual_state(const Eigen::VectorXd& alpha, const FeatureCache& cache)
{
    if (alpha.size() != cache.n_q()) {
        throw std::invalid_argument("alpha length must equal n_Q");
    }
    if ((alpha.array() < 0.0).any() || std::abs(alpha.sum() - 1.0) > 1e-12) {
        throw std::invalid_argument("alpha must lie on the probability simplex");
    }
    return DualState{cache.spec(), cache.dims(), alpha, cache.g() - cache.hq() * alpha};
}

void SolveConfig::validate(Route route) const
{
    if (lambda1 < 0.0 || lambda2 < 0.0) {
        throw std::invalid_argument("regularization weights must be >= 0");
    }
    if (route == Route::Dual && lambda1 <= 0.0) {
        throw std::invalid_argument("the dual route requires lambda1 > 0");
    }
    if (max_iters < 1) {
        throw std::invalid_argument("max_iters must be >= 1");
    }
    if (!(grad_tol > 0.0)) {
        throw std::invalid_argument("grad_tol must be > 0");
    }
    if (!(step_init > 0.0)) {
        throw std::invalid_argument("step_init must be > 0");
    }
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
        throw std::invalid_argument("backtrack_factor must lie in (0, 1)");
    }
}

Eigen::VectorXd group_prox(const Eigen::Ref<const Eigen::VectorXd>& v, double tau)
{
    if (tau < 0.0) {
        throw std::invalid_argument("group_prox threshold must be >= 0");
    }
    Eigen::VectorXd out = v;
    apply_group_prox(out, static_cast<int>(std::max<Eigen::Index>(v.size(), 1)), tau);
    return out;
}

double group_norm_sum(const Eigen::VectorXd& flat, int block_size)
{
    double total = 0.0;
    for (Eigen::Index t = 0; t < flat.size() / block_size; ++t) {
        total += flat.segment(t * block_size, block_size).norm();
    }
    return total;
}

double primal_objective(const Eigen::VectorXd& theta, const FeatureCache& cache, double lambda1,
                        double lambda2)
{
    return -cache.loglik(theta) + 0.5 * lambda1 * theta.squaredNorm() +
           lambda2 * group_norm_sum(theta, cache.block_size());
}

double zero_threshold(const FeatureCache& cache)
{
    const Eigen::VectorXd xi = zero_residual(cache);
    const int b = cache.block_size();
    double worst = 0.0;
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(cache.num_blocks()); ++t) {
        worst = std::max(worst, xi.segment(t * b, b).norm());
    }
    return worst;
}

FitResult solve_primal(const FeatureCache& cache, const SolveConfig& cfg)
{
    cfg.validate(Route::Primal);
    const int b = cache.block_size();
    const double l1 = cfg.lambda1;
    const double l2 = cfg.lambda2;
    const Eigen::VectorXd& g = cache.g();
    const Eigen::MatrixXd& hq = cache.hq();

    FitResult result{ParamVector(cache.spec(), cache.dims()), 0.0, 0, false, Route::Primal, 0.0, {}};

    Eigen::VectorXd x = warm_theta(cfg, cache);
    // theta = 0 is optimal iff every block gradient at zero is inside the l2 ball.
    if (x.isZero(0.0) && l2 >= zero_threshold(cache)) {
        result.objective_value = primal_objective(x, cache, l1, l2);
        result.objective_trace.push_back(result.objective_value);
        result.converged = true;
        return result;
    }

    // Objective differences are formed from score differences so that
    // decisions near the optimum are not lost to cancellation.
    auto smooth_delta = [&](const Eigen::VectorXd& from, const Eigen::VectorXd& w_from,
                            const Eigen::VectorXd& delta) {
        const Eigen::VectorXd e = hq.transpose() * delta;
        return -g.dot(delta) + lse_delta(w_from, e) + 0.5 * l1 * delta.dot(2.0 * from + delta);
    };

    Eigen::VectorXd x_prev = x;
    Eigen::VectorXd w_x = softmax(hq.transpose() * x);
    double trace_value = primal_objective(x, cache, l1, l2);
    result.objective_trace.push_back(trace_value);

    Eigen::VectorXd y = x;
    Eigen::VectorXd w_y = w_x;
    bool y_is_x = true;
    Eigen::VectorXd grad(x.size());
    Eigen::VectorXd z(x.size());
    double t = 1.0;
    double step = cfg.step_init;
    double stationarity = std::numeric_limits<double>::infinity();
    int iter = 0;

    for (; iter < cfg.max_iters; ++iter) {
        grad.noalias() = -g + hq * w_y;
        grad += l1 * y;
        step *= kStepGrowth;
        for (int ls = 0;; ++ls) {
            z = y - step * grad;
            apply_group_prox(z, b, step * l2);
            const Eigen::VectorXd diff = z - y;
            const double excess = smooth_delta(y, w_y, diff) - grad.dot(diff);
            if (excess <= diff.squaredNorm() / (2.0 * step) || ls >= kMaxLineSearch) {
                break;
            }
            step *= cfg.backtrack_factor;
        }
        stationarity = (y - z).norm() / step;

        const Eigen::VectorXd dx = z - x;
        const double delta_F = smooth_delta(x, w_x, dx) + l2 * group_norm_delta(x, z, b);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        if (delta_F <= 0.0) {
            x_prev = x;
            x = z;
            w_x = softmax(hq.transpose() * x);
            trace_value += delta_F;
            result.objective_trace.push_back(trace_value);
            y = x + ((t - 1.0) / t_next) * (x - x_prev);
            y_is_x = false;
            t = t_next;
        } else if (y_is_x) {
            // A proximal step from the best iterate does not decrease the
            // objective: nothing left to gain at this precision.
            ++iter;
            break;
        } else {
            // Objective went up: restart momentum from the best iterate.
            y = x;
            y_is_x = true;
            t = 1.0;
        }
        if (stationarity <= cfg.grad_tol) {
            ++iter;
            break;
        }
        if (y_is_x) {
            w_y = w_x;
        } else {
            w_y = softmax(hq.transpose() * y);
        }
    }

    result.theta.flat() = x;
    result.objective_value = primal_objective(x, cache, l1, l2);
    result.iterations = iter;
    result.stationarity = stationarity;
    result.converged = stationarity <= cfg.grad_tol;
    return result;
}

FitResult solve_primal(const SampleSet& xp, const SampleSet& xq, const BasisSpec& spec,
                       const SolveConfig& cfg)
{
    return solve_primal(FeatureCache(xp, xq, spec), cfg);
}

double dual_objective(const DualState& st, const FeatureCache& cache, double lambda1,
                      double lambda2)
{
    if (lambda1 <= 0.0) {
        throw std::invalid_argument("dual objective requires lambda1 > 0");
    }
    const int b = cache.block_size();
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < st.alpha.size(); ++i) {
        if (st.alpha(i) > 0.0) {
            entropy += st.alpha(i) * std::log(st.alpha(i));
        }
    }
    double hinge = 0.0;
    for (Eigen::Index t = 0; t < st.xi.size() / b; ++t) {
        const double h = std::max(0.0, st.xi.segment(t * b, b).norm() - lambda2);
        hinge += h * h;
    }
    return entropy + hinge / (2.0 * lambda1);
}

Eigen::VectorXd dual_gradient(const DualState& st, const FeatureCache& cache, double lambda1,
                              double lambda2)
{
    if (lambda1 <= 0.0) {
        throw std::invalid_argument("dual gradient requires lambda1 > 0");
    }
    if ((st.alpha.array() <= 0.0).any()) {
        throw std::invalid_argument("dual gradient requires alpha_i > 0");
    }
    const ParamVector theta = recover_primal(st, lambda1, lambda2);
    return (st.alpha.array().log() + 1.0).matrix() - cache.hq().transpose() * theta.flat();
}

ParamVector recover_primal(const DualState& st, double lambda1, double lambda2)
{
    if (lambda1 <= 0.0) {
        throw std::invalid_argument("primal recovery requires lambda1 > 0");
    }
    Eigen::VectorXd theta = st.xi;
    apply_group_prox(theta, st.spec.block_size(), lambda2);
    theta /= lambda1;
    return ParamVector(st.spec, st.d, std::move(theta));
}

DualFit solve_dual(const FeatureCache& cache, const SolveConfig& cfg)
{
    cfg.validate(Route::Dual);
    const double l1 = cfg.lambda1;
    const double l2 = cfg.lambda2;
    const Eigen::Index n = cache.n_q();

    if (l2 >= zero_threshold(cache)) {
        // Every hinge is inactive at the entropy minimizer, so uniform alpha is optimal.
        DualState st{cache.spec(), cache.dims(), uniform_alpha(n), zero_residual(cache)};
        ParamVector theta(cache.spec(), cache.dims());
        const double obj = primal_objective(theta.flat(), cache, l1, l2);
        const double dual = dual_objective(st, cache, l1, l2);
        return {std::move(st), FitResult{std::move(theta), obj, 0, true, Route::Dual, 0.0, {}},
                dual};
    }

    // At the optimum alpha = softmax(H^T theta), so primal warm starts map to logits.
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    if (const auto* st = std::get_if<DualState>(&cfg.warm_start)) {
        if (st->alpha.size() != n) {
            throw std::invalid_argument("warm start alpha length must equal n_Q");
        }
        z = st->alpha.array().max(std::numeric_limits<double>::min()).log().matrix();
    } else if (const auto* p = std::get_if<ParamVector>(&cfg.warm_start)) {
        if (p->dims() != cache.dims() || !(p->spec() == cache.spec())) {
            throw std::invalid_argument("warm start does not match problem layout");
        }
        z = cache.q_scores(p->flat());
    }

    DualEval cur = evaluate_dual(z, cache, l1, l2);
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;
    bool converged = cur.stationarity <= cfg.grad_tol;
    int iter = 0;
    int stalled = 0;

    while (!converged && iter < cfg.max_iters) {
        // Two-loop recursion with initial inverse Hessian gamma * diag(1 / alpha):
        // along z_i the entropy curvature scales like alpha_i, and a unit step
        // under this scaling is the fixed-point update z <- H^T theta(alpha).
        const Eigen::ArrayXd precond =
            cur.alpha.array().max(std::numeric_limits<double>::min()).inverse();
        Eigen::VectorXd q = cur.grad_z;
        std::vector<double> rho(memory.size());
        std::vector<double> a(memory.size());
        for (std::size_t j = memory.size(); j-- > 0;) {
            const auto& [s, yv] = memory[j];
            rho[j] = 1.0 / yv.dot(s);
            a[j] = rho[j] * s.dot(q);
            q -= a[j] * yv;
        }
        double gamma = cfg.step_init;
        if (!memory.empty()) {
            const auto& [s, yv] = memory.back();
            gamma = s.dot(yv) / (yv.array().square() * precond).sum();
        }
        q = (gamma * precond * q.array()).matrix();
        for (std::size_t j = 0; j < memory.size(); ++j) {
            const auto& [s, yv] = memory[j];
            const double beta = rho[j] * yv.dot(q);
            q += (a[j] - beta) * s;
        }
        // Clip per coordinate: a few negligible alpha_i can carry huge
        // preconditioned steps without saying anything about the others.
        Eigen::VectorXd dir = (-q).cwiseMax(-kMaxLogitStep).cwiseMin(kMaxLogitStep);
        double slope = cur.grad_z.dot(dir);
        if (!(slope < 0.0)) {
            memory.clear();
            dir = -(precond * cur.grad_z.array()).matrix();
            dir = dir.cwiseMax(-kMaxLogitStep).cwiseMin(kMaxLogitStep);
            slope = cur.grad_z.dot(dir);
        }

        double step = 1.0;
        DualEval next;
        bool accepted = false;
        bool exact_decrease = false;
        const double noise = kValueNoise * std::max(1.0, std::abs(cur.value));
        for (int ls = 0; ls < kMaxLineSearch; ++ls) {
            next = evaluate_dual(z + step * dir, cache, l1, l2);
            if (next.value <= cur.value + kArmijo * step * slope) {
                accepted = true;
                exact_decrease = next.value < cur.value;
                break;
            }
            // Approximate Armijo (Hager-Zhang): inside the rounding band of the
            // value, judge the step by its directional derivative instead.
            if (next.value <= cur.value + noise &&
                next.grad_z.dot(dir) <= (2.0 * kArmijo - 1.0) * slope) {
                accepted = true;
                break;
            }
            step *= cfg.backtrack_factor;
        }
        ++iter;
        if (!accepted) {
            break;
        }
        stalled = exact_decrease ? 0 : stalled + 1;
        if (stalled > kMaxStalled) {
            break;
        }

        Eigen::VectorXd s = step * dir;
        Eigen::VectorXd yv = next.grad_z - cur.grad_z;
        if (s.dot(yv) > 1e-16 * s.norm() * yv.norm()) {
            memory.emplace_back(std::move(s), std::move(yv));
            if (memory.size() > static_cast<std::size_t>(kLbfgsMemory)) {
                memory.pop_front();
            }
        } else {
            // The objective is not convex in z; drop stale curvature.
            memory.clear();
        }
        z += step * dir;
        cur = std::move(next);
        converged = cur.stationarity <= cfg.grad_tol;
    }

    DualState state{cache.spec(), cache.dims(), cur.alpha, cur.xi};
    ParamVector theta = recover_primal(state, l1, l2);
    const double obj = primal_objective(theta.flat(), cache, l1, l2);
    return {std::move(state),
            FitResult{std::move(theta), obj, iter, converged, Route::Dual, cur.stationarity, {}},
            cur.value};
}

DualFit solve_dual(const SampleSet& xp, const SampleSet& xq, const BasisSpec& spec,
                   const SolveConfig& cfg)
{
    return solve_dual(FeatureCache(xp, xq, spec), cfg);
}

Route choose_route(const FeatureCache& cache, double lambda1)
{
    return lambda1 > 0.0 && cache.num_params() > cache.n_q() ? Route::Dual : Route::Primal;
}

FitResult solve(const FeatureCache& cache, const SolveConfig& cfg, Route route)
{
    if (route == Route::Auto) {
        route = choose_route(cache, cfg.lambda1);
    }
    if (route == Route::Dual) {
        return solve_dual(cache, cfg).fit;
    }
    return solve_primal(cache, cfg);
}

} // namespace kliep
