#include "kliep/feature_space.hpp"

#include <cmath>
#include <stdexcept>

namespace kliep {

namespace {

double signed_power(double x, int k)
{
    const double mag = std::pow(std::abs(x), k);
    return x < 0.0 ? -mag : mag;
}

} // namespace

int BasisSpec::block_size() const
{
    switch (family) {
        case BasisFamily::Polynomial: return 3 * k;
        case BasisFamily::PowerNonparanormal: return 3;
        case BasisFamily::Gaussian: return 1;
    }
    throw std::logic_error("unknown basis family");
}

void BasisSpec::validate() const
{
    if (k < 1) {
        throw std::invalid_argument("basis degree k must be >= 1");
    }
}

std::string to_string(BasisFamily family)
{
    switch (family) {
        case BasisFamily::Polynomial: return "polynomial";
        case BasisFamily::PowerNonparanormal: return "power";
        case BasisFamily::Gaussian: return "gaussian";
    }
    return "unknown";
}

BasisFamily parse_basis_family(const std::string& name)
{
    if (name == "polynomial" || name == "poly") return BasisFamily::Polynomial;
    if (name == "power" || name == "npn") return BasisFamily::PowerNonparanormal;
    if (name == "gaussian") return BasisFamily::Gaussian;
    throw std::invalid_argument("unknown basis family '" + name + "'");
}

std::size_t num_factors(int d)
{
    const auto dd = static_cast<std::size_t>(d);
    return dd * (dd + 1) / 2;
}

std::size_t factor_position(FactorIndex idx, int d)
{
    if (d < 1 || idx.v < 1 || idx.u < idx.v || idx.u > d) {
        throw std::out_of_range("factor (" + std::to_string(idx.u) + "," +
                                std::to_string(idx.v) + ") invalid for d=" +
                                std::to_string(d));
    }
    // Columns v' < v hold d - v' + 1 factors each.
    const auto v0 = static_cast<std::size_t>(idx.v - 1);
    const auto dd = static_cast<std::size_t>(d);
    return v0 * (2 * dd - v0 + 1) / 2 + static_cast<std::size_t>(idx.u - idx.v);
}

FactorIndex factor_at(std::size_t position, int d)
{
    if (d < 1 || position >= num_factors(d)) {
        throw std::out_of_range("factor position out of range");
    }
    int v = 1;
    auto remaining = position;
    while (remaining >= static_cast<std::size_t>(d - v + 1)) {
        remaining -= static_cast<std::size_t>(d - v + 1);
        ++v;
    }
    return {v + static_cast<int>(remaining), v};
}

std::size_t factor_offset(FactorIndex idx, int d, int b)
{
    if (b < 1) {
        throw std::invalid_argument("block length must be >= 1");
    }
    return factor_position(idx, d) * static_cast<std::size_t>(b);
}

std::vector<FactorIndex> enumerate_factors(int d)
{
    std::vector<FactorIndex> out;
    out.reserve(num_factors(d));
    for (int v = 1; v <= d; ++v) {
        for (int u = v; u <= d; ++u) {
            out.push_back({u, v});
        }
    }
    return out;
}

void eval_basis_into(const BasisSpec& spec, double x_u, double x_v, double* out)
{
    switch (spec.family) {
        case BasisFamily::Polynomial: {
            const int k = spec.k;
            int j = 0;
            out[j++] = std::pow(x_u, k);
            out[j++] = std::pow(x_v, k);
            for (int a = 1; a < k; ++a) {
                out[j++] = std::pow(x_u, a) * std::pow(x_v, k - a);
            }
            for (int m = k - 1; m >= 1; --m) {
                out[j++] = std::pow(x_u, m);
                out[j++] = std::pow(x_v, m);
            }
            out[j] = 1.0;
            return;
        }
        case BasisFamily::PowerNonparanormal:
            out[0] = signed_power(x_u, spec.k);
            out[1] = signed_power(x_v, spec.k);
            out[2] = 1.0;
            return;
        case BasisFamily::Gaussian:
            out[0] = x_u * x_v;
            return;
    }
}

Eigen::VectorXd eval_basis(const BasisSpec& spec, double x_u, double x_v)
{
    spec.validate();
    Eigen::VectorXd out(spec.block_size());
    eval_basis_into(spec, x_u, x_v, out.data());
    return out;
}

void eval_factor_into(const BasisSpec& spec, FactorIndex idx,
                      const Eigen::Ref<const Eigen::RowVectorXd>& x, double* out)
{
    const double x_u = x(idx.u - 1);
    if (!idx.is_univariate()) {
        eval_basis_into(spec, x_u, x(idx.v - 1), out);
    } else if (spec.family == BasisFamily::Gaussian) {
        out[0] = x_u * x_u;
    } else {
        eval_basis_into(spec, x_u, 0.0, out);
    }
}

ParamVector::ParamVector(BasisSpec spec, int d)
    : ParamVector(spec, d, Eigen::VectorXd::Zero(
          static_cast<Eigen::Index>(num_factors(std::max(d, 0))) * spec.block_size()))
{}

ParamVector::ParamVector(BasisSpec spec, int d, Eigen::VectorXd flat)
    : spec_(spec), d_(d), b_(spec.block_size()), flat_(std::move(flat))
{
    spec_.validate();
    if (d_ < 1) {
        throw std::invalid_argument("parameter dimension d must be >= 1");
    }
    if (flat_.size() != static_cast<Eigen::Index>(num_factors(d_)) * b_) {
        throw std::invalid_argument("flat parameter length does not match T*b");
    }
}

std::vector<double> ParamVector::group_norms() const
{
    std::vector<double> norms(num_blocks());
    for (std::size_t t = 0; t < norms.size(); ++t) {
        norms[t] = block_at(t).stableNorm();
    }
    return norms;
}

} // namespace kliep
