#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "kliep/feature_space.hpp"
#include "kliep/ratio_model.hpp"

namespace kliep::test {

using Rng = std::mt19937_64;

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                     double scale = 1.0)
{
    std::normal_distribution<double> n01(0.0, scale);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = n01(rng);
        }
    }
    return m;
}

inline SampleSet random_samples(Rng& rng, Eigen::Index n, int d, double scale = 1.0)
{
    return SampleSet(random_matrix(rng, n, d, scale));
}

inline ParamVector random_theta(Rng& rng, const BasisSpec& spec, int d, double scale)
{
    ParamVector theta(spec, d);
    theta.flat() = random_matrix(rng, theta.flat().size(), 1, scale);
    return theta;
}

inline int uniform_int(Rng& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Polynomial or power basis with k in [1, 4].
inline BasisSpec random_spec(Rng& rng)
{
    const BasisFamily family =
        uniform_int(rng, 0, 1) == 0 ? BasisFamily::Polynomial : BasisFamily::PowerNonparanormal;
    return BasisSpec{family, uniform_int(rng, 1, 4)};
}

} // namespace kliep::test
