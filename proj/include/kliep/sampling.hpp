#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "kliep/feature_space.hpp"
#include "kliep/ratio_model.hpp"

namespace kliep {

/// Seed of a deterministic pseudo-random stream.
struct RngSeed
{
    std::uint64_t value = 0;
};

/// Seed for an independent sub-stream (e.g. the Q side, or shuffle #i).
RngSeed derive_seed(RngSeed base, std::uint64_t stream);

std::mt19937_64 make_engine(RngSeed seed);

struct PrecisionPair
{
    Eigen::MatrixXd theta_p;
    Eigen::MatrixXd theta_q;
    /// Off-diagonal positions (u > v) where theta_p and theta_q differ.
    std::vector<FactorIndex> changed_edges;
};

/// round(sparsity * d(d-1)/2): edges placed by the pair generators.
std::size_t edge_count(double sparsity, int d);

/// Diagonal of Theta^P and value placed on each sampled edge.
inline constexpr double kPrecisionDiagonal = 2.0;
inline constexpr double kPrecisionEdge = 0.2;
inline constexpr int kMaxPdRetries = 100;

/// Theta^P: diagonal 2, round(sparsity * d(d-1)/2) symmetric off-diagonal
/// entries set to 0.2. Theta^Q: Theta^P with delta subtracted from
/// num_changes of those edges (both triangles). Redraws until both matrices
/// are positive definite, up to kMaxPdRetries attempts.
PrecisionPair make_gaussian_pair(int d, double sparsity, int num_changes, double delta,
                                 RngSeed seed);

bool is_positive_definite(const Eigen::MatrixXd& m);

/// n draws from N(0, theta^{-1}) via the Cholesky factor of theta.
SampleSet sample_gaussian_mn(const Eigen::MatrixXd& theta, Eigen::Index n, RngSeed seed);

/// Entrywise sign(x)|x|^power.
SampleSet npn_transform(const SampleSet& x, double power);

struct DiamondSpec
{
    int d = 0;
    /// Symmetric 0/1 matrix with zero diagonal.
    Eigen::MatrixXi adjacency;

    void validate() const;
};

/// -sum_i 2 x_i^2 - sum_{i<j, A_ij != 0} 20 x_i^2 x_j^2. Each unordered edge
/// contributes once.
double diamond_log_density_unnorm(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  const DiamondSpec& spec);

struct DiamondPair
{
    DiamondSpec p;
    DiamondSpec q;
    std::vector<FactorIndex> changed_edges;
};

/// A^P with round(sparsity_p * d(d-1)/2) random edges; A^Q drops edges of A^P
/// at random until round(sparsity_q * d(d-1)/2) remain.
DiamondPair make_diamond_pair(int d, double sparsity_p, double sparsity_q, RngSeed seed);

struct SliceConfig
{
    Eigen::Index burn_in = 1000;
    Eigen::Index thin = 5;
    double width = 1.0;
    int max_step_out = 50;
};

using LogDensity = std::function<double(const Eigen::VectorXd&)>;

/// Coordinate-wise univariate slice sampling (stepping out, then shrinkage),
/// one sweep over all coordinates per step. Returns n states taken every
/// `thin` sweeps after `burn_in` sweeps.
SampleSet slice_sample(const LogDensity& log_density, const Eigen::VectorXd& x0, Eigen::Index n,
                       RngSeed seed, const SliceConfig& cfg = {});

} // namespace kliep
