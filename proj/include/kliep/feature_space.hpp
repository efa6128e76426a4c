#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kliep {

/// Pairwise factor (u, v) with 1 <= v <= u <= d. Indices are 1-based so they
/// match the on-disk edge lists.
struct FactorIndex
{
    int u = 1;
    int v = 1;

    bool is_univariate() const { return u == v; }
    auto operator<=>(const FactorIndex&) const = default;
};

enum class BasisFamily
{
    Polynomial,
    PowerNonparanormal,
    // x_u * x_v on pairs, x_u^2 on univariate factors.
    Gaussian,
};

struct BasisSpec
{
    BasisFamily family = BasisFamily::Polynomial;
    int k = 2;

    /// Block length b of one factor's parameter vector.
    int block_size() const;
    void validate() const;
    bool operator==(const BasisSpec&) const = default;
};

std::string to_string(BasisFamily family);
BasisFamily parse_basis_family(const std::string& name);

/// Number of factors T = d(d+1)/2.
std::size_t num_factors(int d);

/// Position of a factor in the v-major enumeration
/// (1,1),(2,1),...,(d,1),(2,2),...,(d,2),...,(d,d).
std::size_t factor_position(FactorIndex idx, int d);

/// Inverse of factor_position.
FactorIndex factor_at(std::size_t position, int d);

/// Flat offset of a factor's block: factor_position * b.
std::size_t factor_offset(FactorIndex idx, int d, int b);

/// All factors in enumeration order.
std::vector<FactorIndex> enumerate_factors(int d);

/// Evaluates f(x_u, x_v).
///
/// Polynomial, degree k (b = 3k):
///   (x_u^k, x_v^k, x_u x_v^{k-1}, ..., x_u^{k-1} x_v,
///    x_u^{k-1}, x_v^{k-1}, ..., x_u, x_v, 1)
/// PowerNonparanormal, power k (b = 3):
///   (sign(x_u)|x_u|^k, sign(x_v)|x_v|^k, 1)
/// Gaussian (b = 1):
///   (x_u x_v)
Eigen::VectorXd eval_basis(const BasisSpec& spec, double x_u, double x_v);

/// Writes f(x_u, x_v) into out, which must have length b.
void eval_basis_into(const BasisSpec& spec, double x_u, double x_v, double* out);

/// Evaluates the factor (u, v) on a full observation. Univariate factors use
/// f(x_u, 0) for the polynomial and power families and x_u^2 for Gaussian.
void eval_factor_into(const BasisSpec& spec, FactorIndex idx,
                      const Eigen::Ref<const Eigen::RowVectorXd>& x, double* out);

/// The change parameter theta = theta^P - theta^Q, stored flat as T blocks of
/// length b in factor enumeration order.
class ParamVector
{
public:
    /// Zero parameter for d = 1 under the default basis.
    ParamVector() : ParamVector(BasisSpec{}, 1) {}
    ParamVector(BasisSpec spec, int d);
    ParamVector(BasisSpec spec, int d, Eigen::VectorXd flat);

    const BasisSpec& spec() const { return spec_; }
    int dims() const { return d_; }
    int block_size() const { return b_; }
    std::size_t num_blocks() const { return num_factors(d_); }

    Eigen::VectorXd& flat() { return flat_; }
    const Eigen::VectorXd& flat() const { return flat_; }

    auto block(FactorIndex idx) { return flat_.segment(offset(idx), b_); }
    auto block(FactorIndex idx) const { return flat_.segment(offset(idx), b_); }
    auto block_at(std::size_t position) { return flat_.segment(position * b_, b_); }
    auto block_at(std::size_t position) const { return flat_.segment(position * b_, b_); }

    /// Euclidean norm of every block, in enumeration order.
    std::vector<double> group_norms() const;

private:
    Eigen::Index offset(FactorIndex idx) const
    {
        return static_cast<Eigen::Index>(factor_offset(idx, d_, b_));
    }

    BasisSpec spec_;
    int d_;
    int b_;
    Eigen::VectorXd flat_;
};

} // namespace kliep
