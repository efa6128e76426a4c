#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "kliep/feature_space.hpp"
#include "kliep/ratio_model.hpp"

namespace kliep {

enum class Route
{
    Auto,
    Primal,
    Dual,
};

std::string to_string(Route route);
Route parse_route(const std::string& name);

/// Dual variable alpha (on the probability simplex over Q samples) with the
/// residuals xi_{u,v} = g_{u,v} - H_{u,v} alpha stored flat in factor order.
struct DualState
{
    BasisSpec spec;
    int d = 1;
    Eigen::VectorXd alpha;
    Eigen::VectorXd xi;
};

/// Builds a dual state from alpha, checking the simplex constraints and
/// computing xi from the cache.
DualState make_dual_state(const Eigen::VectorXd& alpha, const FeatureCache& cache);

struct SolveConfig
{
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    int max_iters = 5000;
    double grad_tol = 1e-6;
    double step_init = 1.0;
    double backtrack_factor = 0.5;
    std::variant<std::monostate, ParamVector, DualState> warm_start;

    void validate(Route route) const;
};

struct FitResult
{
    ParamVector theta;
    /// Primal objective -ell_KLIEP + (lambda1/2)||theta||^2 + lambda2 sum ||theta_{u,v}||.
    double objective_value = 0.0;
    int iterations = 0;
    bool converged = false;
    Route route = Route::Primal;
    /// Final value of the route's stationarity measure.
    double stationarity = 0.0;
    /// Primal route: objective after each accepted step, starting point first.
    std::vector<double> objective_trace;
};

/// Block soft-thresholding: zero when ||v|| <= tau, else (1 - tau/||v||) v.
Eigen::VectorXd group_prox(const Eigen::Ref<const Eigen::VectorXd>& v, double tau);

double group_norm_sum(const Eigen::VectorXd& flat, int block_size);

/// Primal objective at theta, in minimization form.
double primal_objective(const Eigen::VectorXd& theta, const FeatureCache& cache,
                        double lambda1, double lambda2);

/// Largest per-block gradient norm of ell_KLIEP at theta = 0. Any lambda2 at
/// or above this value makes theta = 0 optimal.
double zero_threshold(const FeatureCache& cache);

FitResult solve_primal(const FeatureCache& cache, const SolveConfig& cfg);
FitResult solve_primal(const SampleSet& xp, const SampleSet& xq, const BasisSpec& spec,
                       const SolveConfig& cfg);

/// sum_i alpha_i log alpha_i + 1/(2 lambda1) sum_{u>=v} max(0, ||xi_{u,v}|| - lambda2)^2.
/// The constant log n_Q is not included. Uses st.xi as given.
double dual_objective(const DualState& st, const FeatureCache& cache, double lambda1,
                      double lambda2);

/// Gradient of dual_objective with respect to alpha; requires alpha_i > 0.
Eigen::VectorXd dual_gradient(const DualState& st, const FeatureCache& cache, double lambda1,
                              double lambda2);

/// theta_{u,v} = group_prox(xi_{u,v}, lambda2) / lambda1.
ParamVector recover_primal(const DualState& st, double lambda1, double lambda2);

struct DualFit
{
    DualState state;
    FitResult fit;
    double dual_value = 0.0;
};

DualFit solve_dual(const FeatureCache& cache, const SolveConfig& cfg);
DualFit solve_dual(const SampleSet& xp, const SampleSet& xq, const BasisSpec& spec,
                   const SolveConfig& cfg);

/// Dual when lambda1 > 0 and T*b > n_Q, primal otherwise.
Route choose_route(const FeatureCache& cache, double lambda1);

/// Dispatches on route (resolving Auto with choose_route).
FitResult solve(const FeatureCache& cache, const SolveConfig& cfg, Route route);

} // namespace kliep
