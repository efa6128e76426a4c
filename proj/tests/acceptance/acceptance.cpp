// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset. Exits nonzero only if a criterion throws.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kliep/evaluation.hpp"

using namespace kliep;

namespace {

using Rng = std::mt19937_64;

struct Outcome
{
    bool pass = false;
    std::string detail;
};

struct Criterion
{
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

// Pinned tolerances.
constexpr double kGradRelTol = 1e-5;
constexpr double kFdStep = 1e-5;
constexpr double kDualThetaTol = 1e-4;
constexpr double kDualObjectiveTol = 1e-5;
constexpr double kSelfNormTol = 1e-10;
constexpr double kPrevalenceFactor = 3.0;
constexpr double kDiamondMargin = 0.1;
constexpr double kPearsonBound = 0.1;
constexpr int kNullRequired = 18;

// Tight solver settings for the exact-agreement criteria.
constexpr double kTightTol = 1e-9;
constexpr int kTightIters = 20000;

int uniform_int(Rng& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

SampleSet normal_samples(Rng& rng, Eigen::Index n, int d, double col0_scale = 1.0)
{
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            x(i, j) = z(rng) * (j == 0 ? col0_scale : 1.0);
        }
    }
    return SampleSet(std::move(x));
}

ParamVector normal_theta(Rng& rng, const BasisSpec& spec, int d, double scale)
{
    std::normal_distribution<double> z(0.0, scale);
    ParamVector theta(spec, d);
    for (Eigen::Index j = 0; j < theta.flat().size(); ++j) {
        theta.flat()(j) = z(rng);
    }
    return theta;
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double e = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, e);
    return buf;
}

double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (const double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

Outcome gradient_correctness()
{
    Rng rng(101);
    const BasisFamily families[] = {BasisFamily::Polynomial, BasisFamily::PowerNonparanormal};
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const BasisSpec spec{families[trial % 2], 2 + trial % 3};
        const int d = uniform_int(rng, 1, 6);
        const SampleSet xp = normal_samples(rng, uniform_int(rng, 2, 30), d);
        const SampleSet xq = normal_samples(rng, uniform_int(rng, 2, 30), d);
        const ParamVector theta = normal_theta(rng, spec, d, 0.05);
        const Eigen::VectorXd grad = kliep_gradient(theta, xp, xq);
        for (Eigen::Index j = 0; j < grad.size(); ++j) {
            ParamVector plus = theta;
            ParamVector minus = theta;
            plus.flat()(j) += kFdStep;
            minus.flat()(j) -= kFdStep;
            const double fd =
                (kliep_loglik(plus, xp, xq) - kliep_loglik(minus, xp, xq)) / (2.0 * kFdStep);
            worst = std::max(worst, std::abs(fd - grad(j)) / std::max(1.0, std::abs(grad(j))));
        }
    }
    return {worst <= kGradRelTol, fmt("worst relative error %.3g over 50 instances", worst)};
}

Outcome duality()
{
    Rng rng(102);
    const BasisSpec specs[] = {{BasisFamily::Polynomial, 2}, {BasisFamily::PowerNonparanormal, 2},
                               {BasisFamily::Polynomial, 3}, {BasisFamily::PowerNonparanormal, 3}};
    double worst_theta = 0.0;
    double worst_obj = 0.0;
    int unconverged = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const SampleSet xp = normal_samples(rng, 20, 5);
        const SampleSet xq = normal_samples(rng, 20, 5, 1.5);
        const FeatureCache cache(xp, xq, specs[trial % 4]);
        SolveConfig cfg;
        cfg.lambda1 = (trial / 2) % 2 == 0 ? 0.1 : 1.0;
        cfg.lambda2 = trial % 2 == 0 ? 0.01 : 0.1;
        cfg.grad_tol = kTightTol;
        cfg.max_iters = kTightIters;
        const FitResult primal = solve_primal(cache, cfg);
        const DualFit dual = solve_dual(cache, cfg);
        const ParamVector recovered = recover_primal(dual.state, cfg.lambda1, cfg.lambda2);
        unconverged += (primal.converged ? 0 : 1) + (dual.fit.converged ? 0 : 1);
        worst_theta = std::max(worst_theta,
                               (primal.theta.flat() - recovered.flat()).lpNorm<Eigen::Infinity>());
        const double dual_primal_obj =
            primal_objective(recovered.flat(), cache, cfg.lambda1, cfg.lambda2);
        worst_obj = std::max(worst_obj, std::abs(primal.objective_value - dual_primal_obj));
    }
    return {worst_theta <= kDualThetaTol && worst_obj <= kDualObjectiveTol,
            fmt("max |theta diff| %.3g, max |objective diff| %.3g, unconverged fits %.0f",
                worst_theta, worst_obj, unconverged)};
}

Outcome self_normalization()
{
    Rng rng(103);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const BasisSpec spec{trial % 2 == 0 ? BasisFamily::Polynomial : BasisFamily::PowerNonparanormal,
                             uniform_int(rng, 1, 4)};
        const int d = uniform_int(rng, 1, 6);
        const SampleSet xq = normal_samples(rng, uniform_int(rng, 1, 50), d);
        const ParamVector theta = normal_theta(rng, spec, d, trial < 50 ? 0.1 : 2.0);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < xq.size(); ++i) {
            sum += ratio(theta, xq.matrix().row(i), xq);
        }
        worst = std::max(worst, std::abs(sum / static_cast<double>(xq.size()) - 1.0));
    }
    return {worst <= kSelfNormTol, fmt("max |mean ratio - 1| %.3g over 100 draws", worst)};
}

Outcome gaussian_experiment()
{
    constexpr int d = 40;
    constexpr int seeds = 10;
    const auto grid = log_grid(1e-4, 1.0, 20);
    const double prevalence = 15.0 / 780.0;
    std::vector<double> auc50;
    std::vector<double> auc100;
    for (int s = 0; s < seeds; ++s) {
        const RngSeed seed{static_cast<std::uint64_t>(s)};
        const PrecisionPair pair = make_gaussian_pair(d, 0.25, 15, 0.1, derive_seed(seed, 0));
        const EdgeTruth truth{pair.changed_edges};
        for (const int n : {50, 100}) {
            const SampleSet xp = sample_gaussian_mn(pair.theta_p, n, derive_seed(seed, 1));
            const SampleSet xq = sample_gaussian_mn(pair.theta_q, n, derive_seed(seed, 2));
            const RegPath path =
                regularization_path(xp, xq, {BasisFamily::Gaussian, 1}, 0.0, grid);
            (n == 50 ? auc50 : auc100).push_back(path_pr_curve(path, d, truth).auc);
        }
    }
    const double m50 = mean(auc50);
    const double m100 = mean(auc100);
    const double floor = kPrevalenceFactor * prevalence;
    return {m100 >= m50 && m50 > floor && m100 > floor,
            fmt("mean AUC n=50 %.4f, n=100 %.4f, required > %.4f (3x prevalence)", m50, m100, floor)};
}

double max_abs_pearson(const SampleSet& x)
{
    const Eigen::MatrixXd c = x.matrix().rowwise() - x.matrix().colwise().mean();
    const Eigen::MatrixXd cov = c.transpose() * c;
    double worst = 0.0;
    for (Eigen::Index u = 0; u < cov.rows(); ++u) {
        for (Eigen::Index v = 0; v < u; ++v) {
            worst = std::max(worst, std::abs(cov(u, v)) / std::sqrt(cov(u, u) * cov(v, v)));
        }
    }
    return worst;
}

Outcome diamond_experiment()
{
    constexpr int d = 9;
    constexpr Eigen::Index n = 2000;
    constexpr int seeds = 5;
    const auto grid = log_grid(1e-4, 1.0, 20);
    std::vector<double> auc_poly;
    std::vector<double> auc_gauss;
    double rho = 0.0;
    for (int s = 0; s < seeds; ++s) {
        const RngSeed seed{static_cast<std::uint64_t>(s)};
        const DiamondPair pair = make_diamond_pair(d, 0.35, 0.15, derive_seed(seed, 0));
        const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d);
        const SampleSet xp = slice_sample(
            [&](const Eigen::VectorXd& x) { return diamond_log_density_unnorm(x, pair.p); }, x0, n,
            derive_seed(seed, 1));
        const SampleSet xq = slice_sample(
            [&](const Eigen::VectorXd& x) { return diamond_log_density_unnorm(x, pair.q); }, x0, n,
            derive_seed(seed, 2));
        rho = std::max({rho, max_abs_pearson(xp), max_abs_pearson(xq)});
        const EdgeTruth truth{pair.changed_edges};
        const RegPath poly = regularization_path(xp, xq, {BasisFamily::Polynomial, 4}, 0.0, grid);
        const RegPath gauss = regularization_path(xp, xq, {BasisFamily::Gaussian, 1}, 0.0, grid);
        auc_poly.push_back(path_pr_curve(poly, d, truth).auc);
        auc_gauss.push_back(path_pr_curve(gauss, d, truth).auc);
    }
    const double mp = mean(auc_poly);
    const double mg = mean(auc_gauss);
    return {mp - mg >= kDiamondMargin && rho < kPearsonBound,
            fmt("mean AUC polynomial k=4 %.4f vs quadratic cross terms %.4f (margin %.4f); "
                "max |rho| %.4f",
                mp, mg, mp - mg, rho)};
}

Outcome timing()
{
    constexpr int n = 150;
    const auto grid = log_grid(1e-4, 1.0, 20);
    std::vector<double> primal_s;
    std::vector<double> dual_s;
    std::ostringstream detail;
    for (const int d : {40, 60, 80}) {
        const RngSeed seed = derive_seed(RngSeed{0}, static_cast<std::uint64_t>(d));
        const PrecisionPair pair = make_gaussian_pair(d, 0.25, 15, 0.1, derive_seed(seed, 0));
        const SampleSet xp = sample_gaussian_mn(pair.theta_p, n, derive_seed(seed, 1));
        const SampleSet xq = sample_gaussian_mn(pair.theta_q, n, derive_seed(seed, 2));
        const FeatureCache cache(xp, xq, {BasisFamily::Gaussian, 1});
        for (const Route route : {Route::Primal, Route::Dual}) {
            PathOptions opts;
            opts.route = route;
            const auto start = std::chrono::steady_clock::now();
            const RegPath path = regularization_path(cache, 0.1, grid, opts);
            const double sec =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            (route == Route::Primal ? primal_s : dual_s).push_back(sec);
        }
        detail << "d=" << d << " primal " << fmt("%.2fs", primal_s.back()) << " dual "
               << fmt("%.2fs", dual_s.back()) << " ratio "
               << fmt("%.2f", primal_s.back() / dual_s.back()) << "; ";
    }
    const double r40 = primal_s[0] / dual_s[0];
    const double r60 = primal_s[1] / dual_s[1];
    const double r80 = primal_s[2] / dual_s[2];
    return {dual_s[2] <= primal_s[2] && r40 <= r60 && r60 <= r80, detail.str()};
}

Outcome sparsity_threshold()
{
    Rng rng(107);
    int failures = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const BasisSpec spec{trial % 3 == 0   ? BasisFamily::Polynomial
                             : trial % 3 == 1 ? BasisFamily::PowerNonparanormal
                                              : BasisFamily::Gaussian,
                             uniform_int(rng, 1, 4)};
        const int d = uniform_int(rng, 2, 6);
        const SampleSet xp = normal_samples(rng, uniform_int(rng, 5, 40), d);
        const SampleSet xq = normal_samples(rng, uniform_int(rng, 5, 40), d, 1.5);
        const FeatureCache cache(xp, xq, spec);
        const double thr = zero_threshold(cache);
        for (const double l2 : {thr, 1.5 * thr}) {
            SolveConfig cfg;
            cfg.lambda1 = 0.1;
            cfg.lambda2 = l2;
            const bool primal_zero = solve_primal(cache, cfg).theta.flat().isZero(0.0);
            const bool dual_zero =
                recover_primal(solve_dual(cache, cfg).state, cfg.lambda1, l2).flat().isZero(0.0);
            failures += (primal_zero ? 0 : 1) + (dual_zero ? 0 : 1);
        }
    }
    return {failures == 0, fmt("%.0f nonzero solutions in 80 fits (20 instances x 2 lambda2 x 2 routes)",
                               failures)};
}

Outcome permutation_null()
{
    constexpr int d = 10;
    constexpr int reps = 20;
    const auto grid = log_grid(1e-4, 1.0, 20);
    PathOptions opts;
    opts.solver.lambda1 = 0.1;
    int empty = 0;
    std::size_t detected = 0;
    for (int r = 0; r < reps; ++r) {
        const RngSeed seed{static_cast<std::uint64_t>(1000 + r)};
        const PrecisionPair pair = make_gaussian_pair(d, 0.25, 0, 0.0, derive_seed(seed, 0));
        const SampleSet xp = sample_gaussian_mn(pair.theta_p, 200, derive_seed(seed, 1));
        const SampleSet xq = sample_gaussian_mn(pair.theta_p, 300, derive_seed(seed, 2));
        const PermutationResult result = permutation_test(
            xp, xq, {BasisFamily::Gaussian, 1}, 0.1, grid, 5, 100, 5, derive_seed(seed, 3), opts);
        empty += result.retained.empty() ? 1 : 0;
        detected += result.original.size();
    }
    return {empty >= kNullRequired,
            fmt("retained set empty in %.0f/20 repetitions (need >= 18); %.0f edges detected before "
                "filtering",
                empty, static_cast<double>(detected))};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> criteria{
        {1, "gradient correctness", 60.0, gradient_correctness},
        {2, "primal/dual agreement", 120.0, duality},
        {3, "self-normalization", 10.0, self_normalization},
        {4, "Gaussian experiment AUC-PR", 1200.0, gaussian_experiment},
        {5, "diamond experiment AUC-PR", 1800.0, diamond_experiment},
        {6, "dual vs primal path timing", 1800.0, timing},
        {7, "sparsity threshold", 60.0, sparsity_threshold},
        {8, "permutation-test null calibration", 1200.0, permutation_null},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        selected.insert(std::atoi(argv[i]));
    }
    int errors = 0;
    int passed = 0;
    int ran = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && selected.count(c.id) == 0) {
            continue;
        }
        ++ran;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
            ++errors;
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = sec <= c.budget_seconds;
        const bool pass = out.pass && in_budget;
        passed += pass ? 1 : 0;
        std::printf("%s %d %s: %s [%.1fs, budget %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    out.detail.c_str(), sec, c.budget_seconds, in_budget ? "" : ", over budget");
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", passed, ran);
    return errors == 0 ? 0 : 1;
}
