#include "kliep/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace kliep {

namespace {

std::vector<FactorIndex> off_diagonal_pairs(int d)
{
    std::vector<FactorIndex> pairs;
    for (int v = 1; v <= d; ++v) {
        for (int u = v + 1; u <= d; ++u) {
            pairs.push_back({u, v});
        }
    }
    return pairs;
}

// Random subset of size m, returned sorted in enumeration order.
std::vector<FactorIndex> pick(std::vector<FactorIndex> pool, std::size_t m, std::mt19937_64& rng)
{
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(m);
    std::sort(pool.begin(), pool.end(), [](FactorIndex a, FactorIndex b) {
        return std::pair(a.v, a.u) < std::pair(b.v, b.u);
    });
    return pool;
}

} // namespace

std::size_t edge_count(double sparsity, int d)
{
    if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
        throw std::invalid_argument("sparsity must lie in [0, 1]");
    }
    const double total = 0.5 * d * (d - 1);
    return static_cast<std::size_t>(std::llround(sparsity * total));
}

RngSeed derive_seed(RngSeed base, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(base.value), static_cast<std::uint32_t>(base.value >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return {(static_cast<std::uint64_t>(out[0]) << 32) | out[1]};
}

std::mt19937_64 make_engine(RngSeed seed)
{
    return std::mt19937_64(seed.value);
}

bool is_positive_definite(const Eigen::MatrixXd& m)
{
    if (m.rows() != m.cols() || !m.isApprox(m.transpose(), 0.0)) {
        return false;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    return llt.info() == Eigen::Success;
}

PrecisionPair make_gaussian_pair(int d, double sparsity, int num_changes, double delta,
                                 RngSeed seed)
{
    if (d < 2) {
        throw std::invalid_argument("gaussian pair needs d >= 2");
    }
    const std::size_t m = edge_count(sparsity, d);
    if (num_changes < 0 || static_cast<std::size_t>(num_changes) > m) {
        throw std::invalid_argument("num_changes must lie in [0, number of edges]");
    }
    auto rng = make_engine(seed);
    for (int attempt = 0; attempt < kMaxPdRetries; ++attempt) {
        PrecisionPair pair;
        pair.theta_p = Eigen::MatrixXd::Identity(d, d) * kPrecisionDiagonal;
        const auto edges = pick(off_diagonal_pairs(d), m, rng);
        for (const auto& e : edges) {
            pair.theta_p(e.u - 1, e.v - 1) = kPrecisionEdge;
            pair.theta_p(e.v - 1, e.u - 1) = kPrecisionEdge;
        }
        pair.theta_q = pair.theta_p;
        if (delta != 0.0) {
            pair.changed_edges = pick(edges, static_cast<std::size_t>(num_changes), rng);
        }
        for (const auto& e : pair.changed_edges) {
            pair.theta_q(e.u - 1, e.v - 1) -= delta;
            pair.theta_q(e.v - 1, e.u - 1) -= delta;
        }
        if (is_positive_definite(pair.theta_p) && is_positive_definite(pair.theta_q)) {
            return pair;
        }
    }
    throw std::runtime_error("could not draw positive-definite precision matrices");
}

SampleSet sample_gaussian_mn(const Eigen::MatrixXd& theta, Eigen::Index n, RngSeed seed)
{
    if (n < 1) {
        throw std::invalid_argument("sample count must be >= 1");
    }
    if (!is_positive_definite(theta)) {
        throw std::invalid_argument("precision matrix must be symmetric positive definite");
    }
    // theta = L L^T, x = L^{-T} z has covariance theta^{-1}.
    const Eigen::LLT<Eigen::MatrixXd> llt(theta);
    const Eigen::Index d = theta.rows();
    auto rng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(d, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            z(j, i) = normal(rng);
        }
    }
    const Eigen::MatrixXd x = llt.matrixU().solve(z);
    return SampleSet(x.transpose());
}

SampleSet npn_transform(const SampleSet& x, double power)
{
    if (!(power > 0.0)) {
        throw std::invalid_argument("transform power must be > 0");
    }
    const Eigen::MatrixXd out = x.matrix().unaryExpr([power](double v) {
        const double mag = std::pow(std::abs(v), power);
        return v < 0.0 ? -mag : mag;
    });
    return SampleSet(out);
}

void DiamondSpec::validate() const
{
    if (d < 1 || adjacency.rows() != d || adjacency.cols() != d) {
        throw std::invalid_argument("adjacency must be d x d");
    }
    if (adjacency != adjacency.transpose() || adjacency.diagonal().any()) {
        throw std::invalid_argument("adjacency must be symmetric with zero diagonal");
    }
}

double diamond_log_density_unnorm(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const DiamondSpec& spec)
{
    if (x.size() != spec.d) {
        throw std::invalid_argument("dimension mismatch in diamond density");
    }
    double value = -2.0 * x.squaredNorm();
    for (int j = 0; j < spec.d; ++j) {
        for (int i = j + 1; i < spec.d; ++i) {
            if (spec.adjacency(i, j) != 0) {
                value -= 20.0 * x(i) * x(i) * x(j) * x(j);
            }
        }
    }
    return value;
}

DiamondPair make_diamond_pair(int d, double sparsity_p, double sparsity_q, RngSeed seed)
{
    if (d < 2) {
        throw std::invalid_argument("diamond pair needs d >= 2");
    }
    const std::size_t m_p = edge_count(sparsity_p, d);
    const std::size_t m_q = edge_count(sparsity_q, d);
    if (m_q > m_p) {
        throw std::invalid_argument("sparsity_q must not exceed sparsity_p");
    }
    auto rng = make_engine(seed);
    const auto edges_p = pick(off_diagonal_pairs(d), m_p, rng);
    const auto kept = pick(edges_p, m_q, rng);

    DiamondPair pair;
    pair.p = {d, Eigen::MatrixXi::Zero(d, d)};
    pair.q = {d, Eigen::MatrixXi::Zero(d, d)};
    for (const auto& e : edges_p) {
        pair.p.adjacency(e.u - 1, e.v - 1) = pair.p.adjacency(e.v - 1, e.u - 1) = 1;
    }
    for (const auto& e : kept) {
        pair.q.adjacency(e.u - 1, e.v - 1) = pair.q.adjacency(e.v - 1, e.u - 1) = 1;
    }
    for (const auto& e : edges_p) {
        if (pair.q.adjacency(e.u - 1, e.v - 1) == 0) {
            pair.changed_edges.push_back(e);
        }
    }
    return pair;
}

SampleSet slice_sample(const LogDensity& log_density, const Eigen::VectorXd& x0, Eigen::Index n,
                       RngSeed seed, const SliceConfig& cfg)
{
    if (n < 1 || cfg.thin < 1 || cfg.burn_in < 0 || !(cfg.width > 0.0) || cfg.max_step_out < 0) {
        throw std::invalid_argument("invalid slice sampler settings");
    }
    Eigen::VectorXd x = x0;
    double log_fx = log_density(x);
    if (!std::isfinite(log_fx)) {
        throw std::invalid_argument("log density is not finite at the start point");
    }
    auto rng = make_engine(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    const Eigen::Index d = x.size();

    auto log_at = [&](Eigen::Index j, double value) {
        const double saved = x(j);
        x(j) = value;
        const double out = log_density(x);
        x(j) = saved;
        return out;
    };

    auto sweep = [&]() {
        for (Eigen::Index j = 0; j < d; ++j) {
            const double level = log_fx - expo(rng);
            const double x_j = x(j);
            double left = x_j - cfg.width * unif(rng);
            double right = left + cfg.width;
            int steps_left = static_cast<int>(std::floor(cfg.max_step_out * unif(rng)));
            int steps_right = cfg.max_step_out - 1 - steps_left;
            while (steps_left > 0 && log_at(j, left) > level) {
                left -= cfg.width;
                --steps_left;
            }
            while (steps_right > 0 && log_at(j, right) > level) {
                right += cfg.width;
                --steps_right;
            }
            for (;;) {
                const double cand = left + unif(rng) * (right - left);
                const double log_c = log_at(j, cand);
                if (log_c > level) {
                    x(j) = cand;
                    log_fx = log_c;
                    break;
                }
                if (cand < x_j) {
                    left = cand;
                } else {
                    right = cand;
                }
            }
        }
    };

    for (Eigen::Index s = 0; s < cfg.burn_in; ++s) {
        sweep();
    }
    Eigen::MatrixXd out(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index s = 0; s < cfg.thin; ++s) {
            sweep();
        }
        out.row(i) = x.transpose();
    }
    return SampleSet(std::move(out));
}

} // namespace kliep
