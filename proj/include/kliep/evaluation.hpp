#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kliep/feature_space.hpp"
#include "kliep/ratio_model.hpp"
#include "kliep/sampling.hpp"
#include "kliep/solvers.hpp"

namespace kliep {

struct PathPoint
{
    double lambda2 = 0.0;
    FitResult fit;
    /// ||theta_{u,v}|| for every factor, in enumeration order.
    std::vector<double> group_norms;
    double seconds = 0.0;
    /// Set when the solver threw; fit then holds theta = 0.
    std::optional<std::string> error;
};

struct RegPath
{
    double lambda1 = 0.0;
    std::vector<PathPoint> points;

    std::vector<double> lambda2_grid() const;
};

/// Solver settings shared by every fit of a sweep. lambda1/lambda2 and the
/// warm start are overwritten per fit.
struct PathOptions
{
    Route route = Route::Auto;
    bool warm_start = true;
    SolveConfig solver;
};

/// Fits each lambda2 of a strictly descending grid. Auto routing picks primal
/// when lambda1 = 0. Solver exceptions are recorded per point.
RegPath regularization_path(const FeatureCache& cache, double lambda1,
                            const std::vector<double>& lambda2_grid, const PathOptions& opts = {});
RegPath regularization_path(const SampleSet& xp, const SampleSet& xq, const BasisSpec& spec,
                            double lambda1, const std::vector<double>& lambda2_grid,
                            const PathOptions& opts = {});

/// Log-spaced grid from hi down to lo, count points.
std::vector<double> log_grid(double lo, double hi, int count);

using EdgeScores = std::map<FactorIndex, double>;

/// ||theta_{u,v}|| for every pair factor u > v.
EdgeScores edge_scores(const ParamVector& theta);

struct EdgeTruth
{
    std::vector<FactorIndex> changed;

    void validate(int d) const;
};

struct PRPoint
{
    double recall = 0.0;
    double precision = 0.0;
};

struct PRCurve
{
    std::vector<PRPoint> points;
    double auc = 0.0;
};

/// Trapezoidal area over recall, anchored at recall 0 with the precision of
/// the first point.
double pr_auc(const std::vector<PRPoint>& points);

/// Sweeps a threshold down through the distinct scores; edges scoring at or
/// above the threshold are predicted changed.
PRCurve pr_curve(const EdgeScores& scores, const EdgeTruth& truth);

struct PathPRPoint
{
    double lambda2 = 0.0;
    std::size_t predicted = 0;
    double recall = 0.0;
    double precision = 0.0;
};

/// Precision and recall at each grid point, predicting changed every pair
/// factor with a nonzero group norm. Points with no prediction are skipped.
/// norms[j] holds the group norms of grid point j in factor order.
std::vector<PathPRPoint> path_pr_points(const std::vector<double>& lambda2,
                                        const std::vector<std::vector<double>>& norms, int d,
                                        const EdgeTruth& truth);

/// Curve through the path's P-R points, sorted by recall and closed with the
/// all-edges point (recall 1, prevalence), which is the lambda2 -> 0 limit.
PRCurve path_pr_curve(const std::vector<PathPRPoint>& points, int d, const EdgeTruth& truth);
PRCurve path_pr_curve(const RegPath& path, int d, const EdgeTruth& truth);

/// Fixed recall grid {0.05, 0.10, ..., 1.0} used to average curves across runs.
std::vector<double> recall_grid();

/// Linear interpolation of the curve's precision at each recall in grid.
std::vector<double> interpolate_precision(const PRCurve& curve, const std::vector<double>& grid);

struct HollEntry
{
    std::size_t candidate = 0;
    double lambda2 = 0.0;
    double holl = 0.0;
    bool failed = false;
};

struct HollSelection
{
    BasisSpec spec;
    double lambda2 = 0.0;
    FitResult fit;
    std::vector<HollEntry> table;
    std::vector<RegPath> paths;
};

/// Fits every (candidate, lambda2) on the training sets and returns the pair
/// maximizing hold-out log-likelihood. Ties go to smaller k, then larger lambda2.
HollSelection select_by_holl(const SampleSet& xp_train, const SampleSet& xq_train,
                             const SampleSet& xp_hold, const SampleSet& xq_hold,
                             const std::vector<BasisSpec>& candidates, double lambda1,
                             const std::vector<double>& lambda2_grid, const PathOptions& opts = {});

struct CvllSelection
{
    double lambda2 = 0.0;
    FitResult fit;
    /// Mean held-out log-likelihood per grid point.
    std::vector<double> cvll;
};

/// Contiguous K-fold cross-validation over both sample sets; returns the
/// lambda2 maximizing mean held-out kliep_loglik (ties to larger lambda2) and
/// the fit on all data.
CvllSelection cvll_select(const SampleSet& xp, const SampleSet& xq, const BasisSpec& spec,
                          double lambda1, const std::vector<double>& lambda2_grid, int folds,
                          const PathOptions& opts = {});

/// Pair factors (u > v) with a nonzero group norm.
std::vector<FactorIndex> detected_edges(const ParamVector& theta);

struct PermutationResult
{
    std::vector<FactorIndex> original;
    std::map<FactorIndex, int> hits;
    std::vector<FactorIndex> retained;
    double lambda2 = 0.0;
};

/// Edges detected on the original data (CVLL-selected fit) and kept only if
/// they were detected in at most max_hits of num_shuffles pooled-and-resplit
/// datasets.
PermutationResult permutation_test(const SampleSet& xp, const SampleSet& xq,
                                   const BasisSpec& spec, double lambda1,
                                   const std::vector<double>& lambda2_grid, int folds,
                                   int num_shuffles, int max_hits, RngSeed seed,
                                   const PathOptions& opts = {});

} // namespace kliep
