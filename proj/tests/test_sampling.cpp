#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kliep/sampling.hpp"
#include "support.hpp"

using namespace kliep;

namespace {

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x)
{
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double standard_normal_log_density(const Eigen::VectorXd& x)
{
    return -0.5 * x.squaredNorm();
}

} // namespace

TEST_CASE("gaussian pair at the reference configuration")
{
    const PrecisionPair pair = make_gaussian_pair(40, 0.25, 15, 0.1, RngSeed{1});
    CHECK(pair.theta_p.diagonal().isConstant(2.0));
    CHECK(pair.theta_p == pair.theta_p.transpose());
    CHECK(pair.theta_q == pair.theta_q.transpose());
    CHECK(is_positive_definite(pair.theta_p));
    CHECK(is_positive_definite(pair.theta_q));

    int edges = 0;
    for (int u = 1; u < 40; ++u) {
        for (int v = 0; v < u; ++v) {
            const double p = pair.theta_p(u, v);
            CHECK((p == 0.0 || p == 0.2));
            edges += p != 0.0 ? 1 : 0;
        }
    }
    CHECK(edges == 195);

    REQUIRE(pair.changed_edges.size() == 15);
    Eigen::MatrixXd diff = pair.theta_p - pair.theta_q;
    for (const FactorIndex& e : pair.changed_edges) {
        CHECK(e.u > e.v);
        CHECK(diff(e.u - 1, e.v - 1) == doctest::Approx(0.1));
        CHECK(diff(e.v - 1, e.u - 1) == doctest::Approx(0.1));
        diff(e.u - 1, e.v - 1) = diff(e.v - 1, e.u - 1) = 0.0;
    }
    CHECK(diff.isZero(0.0));
}

TEST_CASE("no changes gives identical matrices")
{
    const PrecisionPair pair = make_gaussian_pair(10, 0.3, 0, 0.1, RngSeed{2});
    CHECK(pair.theta_p == pair.theta_q);
    CHECK(pair.changed_edges.empty());
}

TEST_CASE("property: generated pairs are positive definite and seed-deterministic")
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        test::Rng rng(seed);
        const int d = test::uniform_int(rng, 2, 30);
        const double sparsity = 0.05 * test::uniform_int(rng, 1, 10);
        const int max_changes = static_cast<int>(std::lround(sparsity * d * (d - 1) / 2.0));
        const int changes = test::uniform_int(rng, 0, max_changes);
        const PrecisionPair a = make_gaussian_pair(d, sparsity, changes, 0.1, RngSeed{seed});
        const PrecisionPair b = make_gaussian_pair(d, sparsity, changes, 0.1, RngSeed{seed});
        CHECK(is_positive_definite(a.theta_p));
        CHECK(is_positive_definite(a.theta_q));
        CHECK(a.theta_p == b.theta_p);
        CHECK(a.theta_q == b.theta_q);
        CHECK(a.changed_edges == b.changed_edges);
        CHECK(static_cast<int>(a.changed_edges.size()) == changes);
    }
}

TEST_CASE("gaussian pair rejects impossible requests")
{
    CHECK_THROWS(make_gaussian_pair(5, 0.1, 5, 0.1, RngSeed{0}));
    CHECK_THROWS(make_gaussian_pair(5, 1.5, 0, 0.1, RngSeed{0}));
    // Theta^Q = [[2, -4.8], [-4.8, 2]] on every draw, so the retries run out.
    CHECK_THROWS(make_gaussian_pair(2, 1.0, 1, 5.0, RngSeed{0}));
}

TEST_CASE("identity precision gives identity covariance")
{
    const SampleSet x = sample_gaussian_mn(Eigen::MatrixXd::Identity(4, 4), 50000, RngSeed{3});
    const Eigen::MatrixXd cov = sample_covariance(x.matrix());
    CHECK((cov - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("one-dimensional precision 4 gives variance 0.25")
{
    const SampleSet x = sample_gaussian_mn(Eigen::MatrixXd::Constant(1, 1, 4.0), 50000, RngSeed{4});
    CHECK(std::abs(sample_covariance(x.matrix())(0, 0) - 0.25) <= 0.01);
}

TEST_CASE("gaussian sampling is deterministic per seed")
{
    const PrecisionPair pair = make_gaussian_pair(6, 0.4, 2, 0.1, RngSeed{5});
    const SampleSet a = sample_gaussian_mn(pair.theta_p, 100, RngSeed{6});
    const SampleSet b = sample_gaussian_mn(pair.theta_p, 100, RngSeed{6});
    const SampleSet c = sample_gaussian_mn(pair.theta_p, 100, RngSeed{7});
    CHECK(a.matrix() == b.matrix());
    CHECK(a.matrix() != c.matrix());
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    bad(0, 1) = bad(1, 0) = 2.0;
    CHECK_THROWS(sample_gaussian_mn(bad, 10, RngSeed{0}));
}

TEST_CASE("property: sample precision recovers random SPD matrices")
{
    test::Rng rng(8);
    for (int trial = 0; trial < 6; ++trial) {
        const int d = test::uniform_int(rng, 1, 3);
        const Eigen::MatrixXd a = test::random_matrix(rng, d, d, 0.7);
        const Eigen::MatrixXd theta =
            a * a.transpose() + Eigen::MatrixXd::Identity(d, d);
        const SampleSet x = sample_gaussian_mn(theta, 100000, RngSeed{100 + static_cast<std::uint64_t>(trial)});
        const Eigen::MatrixXd precision = sample_covariance(x.matrix()).inverse();
        CHECK((precision - theta).cwiseAbs().maxCoeff() <= 0.1);
    }
}

TEST_CASE("npn transform examples")
{
    Eigen::MatrixXd m(1, 3);
    m << 0.0, 4.0, -4.0;
    const SampleSet y = npn_transform(SampleSet(m), 0.5);
    CHECK(y.matrix()(0, 0) == 0.0);
    CHECK(y.matrix()(0, 1) == doctest::Approx(2.0));
    CHECK(y.matrix()(0, 2) == doctest::Approx(-2.0));

    test::Rng rng(9);
    const SampleSet x = test::random_samples(rng, 20, 3, 2.0);
    CHECK(npn_transform(x, 1.0).matrix() == x.matrix());
    const SampleSet back = npn_transform(npn_transform(x, 0.5), 2.0);
    CHECK((back.matrix() - x.matrix()).cwiseAbs().maxCoeff() <= 1e-12 * 10.0);
    CHECK_THROWS(npn_transform(x, 0.0));
}

TEST_CASE("diamond log density examples")
{
    DiamondSpec spec{2, Eigen::MatrixXi::Zero(2, 2)};
    spec.adjacency(0, 1) = spec.adjacency(1, 0) = 1;
    CHECK(diamond_log_density_unnorm(Eigen::Vector2d::Zero(), spec) == 0.0);
    CHECK(diamond_log_density_unnorm(Eigen::Vector2d(1.0, 1.0), spec) == -24.0);
    CHECK_THROWS(diamond_log_density_unnorm(Eigen::Vector3d::Zero(), spec));

    DiamondSpec one_sided{2, Eigen::MatrixXi::Zero(2, 2)};
    one_sided.adjacency(0, 1) = 1;
    CHECK_THROWS(one_sided.validate());
    DiamondSpec loop{2, Eigen::MatrixXi::Identity(2, 2)};
    CHECK_THROWS(loop.validate());
}

TEST_CASE("property: diamond log density is even")
{
    const DiamondPair pair = make_diamond_pair(9, 0.35, 0.15, RngSeed{10});
    test::Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd x = test::random_matrix(rng, 9, 1);
        CHECK(diamond_log_density_unnorm(x, pair.p) == diamond_log_density_unnorm(-x, pair.p));
    }
}

TEST_CASE("diamond pair edge counts")
{
    const DiamondPair pair = make_diamond_pair(9, 0.35, 0.15, RngSeed{12});
    CHECK(pair.p.adjacency.sum() == 2 * 13);
    CHECK(pair.q.adjacency.sum() == 2 * 5);
    CHECK(pair.changed_edges.size() == 8);
    CHECK((pair.q.adjacency.array() <= pair.p.adjacency.array()).all());
    for (const FactorIndex& e : pair.changed_edges) {
        CHECK(pair.p.adjacency(e.u - 1, e.v - 1) == 1);
        CHECK(pair.q.adjacency(e.u - 1, e.v - 1) == 0);
    }
}

TEST_CASE("slice sampler reproduces standard normal moments")
{
    const SampleSet x =
        slice_sample(standard_normal_log_density, Eigen::VectorXd::Zero(1), 50000, RngSeed{13});
    const double mean = x.matrix().mean();
    const double var = (x.matrix().array() - mean).square().sum() / (x.size() - 1.0);
    CHECK(std::abs(mean) <= 0.02);
    CHECK(std::abs(var - 1.0) <= 0.05);
}

TEST_CASE("slice sampler stays on the support")
{
    // Uniform on the unit box.
    const LogDensity box = [](const Eigen::VectorXd& x) {
        return (x.array().abs() <= 1.0).all() ? 0.0 : -std::numeric_limits<double>::infinity();
    };
    SliceConfig cfg;
    cfg.burn_in = 10;
    const SampleSet x = slice_sample(box, Eigen::VectorXd::Zero(3), 2000, RngSeed{14}, cfg);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        CHECK(std::isfinite(box(x.row(i).transpose())));
    }
    CHECK_THROWS(slice_sample(box, Eigen::VectorXd::Constant(3, 2.0), 10, RngSeed{0}));
}

TEST_CASE("slice sampler is deterministic per seed")
{
    SliceConfig cfg;
    cfg.burn_in = 5;
    const SampleSet a = slice_sample(standard_normal_log_density, Eigen::VectorXd::Zero(2), 50,
                                     RngSeed{15}, cfg);
    const SampleSet b = slice_sample(standard_normal_log_density, Eigen::VectorXd::Zero(2), 50,
                                     RngSeed{15}, cfg);
    CHECK(a.matrix() == b.matrix());
}

TEST_CASE("property: slice sampling leaves an exact sample's law invariant")
{
    // 10^4 independent exact draws, each advanced by five sweeps.
    const Eigen::Index n = 10000;
    auto rng = make_engine(RngSeed{16});
    std::normal_distribution<double> n01;
    SliceConfig cfg;
    cfg.burn_in = 0;
    std::vector<double> out(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, n01(rng));
        const SampleSet step = slice_sample(standard_normal_log_density, x0, 1,
                                            derive_seed(RngSeed{17}, static_cast<std::uint64_t>(i)), cfg);
        out[static_cast<std::size_t>(i)] = step.matrix()(0, 0);
    }
    std::sort(out.begin(), out.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double f = normal_cdf(out[i]);
        ks = std::max({ks, std::abs(f - static_cast<double>(i) / n),
                       std::abs(f - static_cast<double>(i + 1) / n)});
    }
    CHECK(ks < 0.02);
}

TEST_CASE("diamond samples are pairwise uncorrelated")
{
    const DiamondPair pair = make_diamond_pair(9, 0.35, 0.15, RngSeed{18});
    const SampleSet x = slice_sample(
        [&](const Eigen::VectorXd& v) { return diamond_log_density_unnorm(v, pair.p); },
        Eigen::VectorXd::Zero(9), 5000, RngSeed{19});
    const Eigen::MatrixXd cov = sample_covariance(x.matrix());
    for (int i = 0; i < 9; ++i) {
        for (int j = 0; j < i; ++j) {
            CHECK(std::abs(cov(i, j) / std::sqrt(cov(i, i) * cov(j, j))) < 0.1);
        }
    }
}

TEST_CASE("derived seeds differ per stream and are stable")
{
    CHECK(derive_seed(RngSeed{1}, 0).value == derive_seed(RngSeed{1}, 0).value);
    CHECK(derive_seed(RngSeed{1}, 0).value != derive_seed(RngSeed{1}, 1).value);
    CHECK(derive_seed(RngSeed{1}, 0).value != derive_seed(RngSeed{2}, 0).value);
}
