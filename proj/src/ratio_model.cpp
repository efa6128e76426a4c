#include "kliep/ratio_model.hpp"

#include <cmath>
#include <stdexcept>

namespace kliep {

namespace {

void check_dims(const ParamVector& theta, Eigen::Index d)
{
    if (theta.dims() != d) {
        throw std::invalid_argument("dimension mismatch: theta has d=" +
                                    std::to_string(theta.dims()) + ", data has d=" +
                                    std::to_string(d));
    }
}

} // namespace

SampleSet::SampleSet(Eigen::MatrixXd data)
    : data_(std::move(data))
{
    if (data_.rows() < 1 || data_.cols() < 1) {
        throw std::invalid_argument("sample set must have n >= 1 and d >= 1");
    }
    if (!data_.allFinite()) {
        throw std::invalid_argument("sample set contains non-finite entries");
    }
}

SampleSet SampleSet::subset(const std::vector<Eigen::Index>& rows) const
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), data_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = data_.row(rows[i]);
    }
    return SampleSet(std::move(out));
}

Eigen::MatrixXd feature_matrix(const SampleSet& x, const BasisSpec& spec)
{
    spec.validate();
    const int d = x.dims();
    const int b = spec.block_size();
    const auto factors = enumerate_factors(d);
    Eigen::MatrixXd h(static_cast<Eigen::Index>(factors.size()) * b, x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double* col = h.col(i).data();
        for (std::size_t t = 0; t < factors.size(); ++t) {
            eval_factor_into(spec, factors[t], x.row(i), col + t * b);
        }
    }
    return h;
}

FeatureCache::FeatureCache(const SampleSet& xp, const SampleSet& xq, BasisSpec spec)
    : spec_(spec), d_(xp.dims())
{
    if (xq.dims() != d_) {
        throw std::invalid_argument("P and Q samples have different dimensions");
    }
    const Eigen::MatrixXd hp = feature_matrix(xp, spec_);
    g_ = hp * Eigen::VectorXd::Ones(hp.cols()) / static_cast<double>(hp.cols());
    hq_ = feature_matrix(xq, spec_);
}

double FeatureCache::loglik(const Eigen::VectorXd& theta) const
{
    return g_.dot(theta) - log_mean_exp(q_scores(theta));
}

double FeatureCache::loglik_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const
{
    const Eigen::VectorXd s = q_scores(theta);
    const Eigen::VectorXd e = (s.array() - s.maxCoeff()).exp();
    grad.noalias() = g_ - hq_ * e / e.sum();
    return g_.dot(theta) - log_mean_exp(s);
}

double log_mean_exp(const Eigen::VectorXd& s)
{
    const double shift = s.maxCoeff();
    if (!std::isfinite(shift)) {
        return shift;
    }
    const double sum = (s.array() - shift).exp().sum();
    return shift + std::log(sum) - std::log(static_cast<double>(s.size()));
}

Eigen::VectorXd softmax(const Eigen::VectorXd& s)
{
    Eigen::VectorXd w = (s.array() - s.maxCoeff()).exp();
    w /= w.sum();
    return w;
}

double feature_sum(const ParamVector& theta, const Eigen::Ref<const Eigen::RowVectorXd>& x)
{
    check_dims(theta, x.size());
    const int b = theta.block_size();
    Eigen::VectorXd f(b);
    double total = 0.0;
    const auto factors = enumerate_factors(theta.dims());
    for (std::size_t t = 0; t < factors.size(); ++t) {
        eval_factor_into(theta.spec(), factors[t], x, f.data());
        total += theta.block_at(t).dot(f);
    }
    return total;
}

double log_normalizer(const ParamVector& theta, const SampleSet& xq)
{
    check_dims(theta, xq.dims());
    Eigen::VectorXd s(xq.size());
    for (Eigen::Index i = 0; i < xq.size(); ++i) {
        s(i) = feature_sum(theta, xq.row(i));
    }
    return log_mean_exp(s);
}

double estimate_normalizer(const ParamVector& theta, const SampleSet& xq)
{
    return std::exp(log_normalizer(theta, xq));
}

double ratio(const ParamVector& theta, const Eigen::Ref<const Eigen::RowVectorXd>& x,
             const SampleSet& xq)
{
    return std::exp(feature_sum(theta, x) - log_normalizer(theta, xq));
}

double kliep_loglik(const ParamVector& theta, const SampleSet& xp, const SampleSet& xq)
{
    check_dims(theta, xp.dims());
    check_dims(theta, xq.dims());
    double mean_p = 0.0;
    for (Eigen::Index i = 0; i < xp.size(); ++i) {
        mean_p += feature_sum(theta, xp.row(i));
    }
    mean_p /= static_cast<double>(xp.size());
    return mean_p - log_normalizer(theta, xq);
}

Eigen::VectorXd kliep_gradient(const ParamVector& theta, const SampleSet& xp, const SampleSet& xq)
{
    check_dims(theta, xp.dims());
    check_dims(theta, xq.dims());
    const FeatureCache cache(xp, xq, theta.spec());
    Eigen::VectorXd grad(cache.num_params());
    cache.loglik_and_gradient(theta.flat(), grad);
    return grad;
}

double holl(const ParamVector& theta, const SampleSet& xp_holdout, const SampleSet& xq_holdout)
{
    return kliep_loglik(theta, xp_holdout, xq_holdout);
}

} // namespace kliep
