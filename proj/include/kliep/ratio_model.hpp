#pragma once

#include <Eigen/Dense>

#include "kliep/feature_space.hpp"

namespace kliep {

/// n x d matrix of observations from one distribution; rows are samples.
class SampleSet
{
public:
    explicit SampleSet(Eigen::MatrixXd data);

    Eigen::Index size() const { return data_.rows(); }
    int dims() const { return static_cast<int>(data_.cols()); }
    const Eigen::MatrixXd& matrix() const { return data_; }
    auto row(Eigen::Index i) const { return data_.row(i); }

    /// Rows selected by index, in the given order.
    SampleSet subset(const std::vector<Eigen::Index>& rows) const;

private:
    Eigen::MatrixXd data_;
};

/// Basis evaluations over a sample set: column i of the (T*b) x n matrix
/// stacks f over all factors for sample i.
Eigen::MatrixXd feature_matrix(const SampleSet& x, const BasisSpec& spec);

/// Precomputed statistics shared by the objective, its gradient and both
/// solvers: the P-side mean feature vector g and the Q-side feature matrix H.
/// Immutable once built.
class FeatureCache
{
public:
    FeatureCache(const SampleSet& xp, const SampleSet& xq, BasisSpec spec);

    const BasisSpec& spec() const { return spec_; }
    int dims() const { return d_; }
    int block_size() const { return spec_.block_size(); }
    std::size_t num_blocks() const { return num_factors(d_); }
    Eigen::Index num_params() const { return g_.size(); }
    Eigen::Index n_q() const { return hq_.cols(); }

    const Eigen::VectorXd& g() const { return g_; }
    const Eigen::MatrixXd& hq() const { return hq_; }

    /// s_i = theta^T f(x_i^Q) for every Q sample.
    Eigen::VectorXd q_scores(const Eigen::VectorXd& theta) const { return hq_.transpose() * theta; }

    /// ell_KLIEP(theta) from the cached statistics.
    double loglik(const Eigen::VectorXd& theta) const;

    /// Returns ell_KLIEP(theta) and writes its gradient into grad.
    double loglik_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const;

private:
    BasisSpec spec_;
    int d_;
    Eigen::VectorXd g_;
    Eigen::MatrixXd hq_;
};

/// log((1/n) sum_i exp(s_i)), max-shifted.
double log_mean_exp(const Eigen::VectorXd& s);

/// Normalized weights exp(s_i) / sum_j exp(s_j), max-shifted.
Eigen::VectorXd softmax(const Eigen::VectorXd& s);

double feature_sum(const ParamVector& theta, const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// log N(theta), the log of the Q-sample average of exp(feature_sum).
double log_normalizer(const ParamVector& theta, const SampleSet& xq);

/// N(theta) = (1/n_Q) sum_i exp(feature_sum(theta, x_i^Q)).
double estimate_normalizer(const ParamVector& theta, const SampleSet& xq);

/// r(x; theta) = exp(feature_sum(theta, x)) / N(theta).
double ratio(const ParamVector& theta, const Eigen::Ref<const Eigen::RowVectorXd>& x,
             const SampleSet& xq);

double kliep_loglik(const ParamVector& theta, const SampleSet& xp, const SampleSet& xq);

/// Gradient of kliep_loglik in flat parameter layout.
Eigen::VectorXd kliep_gradient(const ParamVector& theta, const SampleSet& xp,
                               const SampleSet& xq);

/// Hold-out log-likelihood. The hold-out sets must be disjoint from the data
/// theta was fitted on; splitting is left to the caller.
double holl(const ParamVector& theta, const SampleSet& xp_holdout, const SampleSet& xq_holdout);

} // namespace kliep
