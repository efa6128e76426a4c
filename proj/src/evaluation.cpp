#include "kliep/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace kliep {

namespace {

void check_grid(const std::vector<double>& grid)
{
    if (grid.empty()) {
        throw std::invalid_argument("lambda2 grid must be nonempty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0) || (i > 0 && !(grid[i] < grid[i - 1]))) {
            throw std::invalid_argument("lambda2 grid must be nonnegative and strictly descending");
        }
    }
}

// Rows [begin, end) of a contiguous fold and its complement.
std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> fold_rows(Eigen::Index n, int fold,
                                                                          int folds)
{
    const Eigen::Index begin = n * fold / folds;
    const Eigen::Index end = n * (fold + 1) / folds;
    std::vector<Eigen::Index> test;
    std::vector<Eigen::Index> train;
    for (Eigen::Index i = 0; i < n; ++i) {
        (i >= begin && i < end ? test : train).push_back(i);
    }
    return {std::move(train), std::move(test)};
}

std::size_t count_pairs(int d)
{
    return static_cast<std::size_t>(d) * static_cast<std::size_t>(d - 1) / 2;
}

} // namespace

std::vector<double> RegPath::lambda2_grid() const
{
    std::vector<double> grid;
    grid.reserve(points.size());
    for (const auto& p : points) {
        grid.push_back(p.lambda2);
    }
    return grid;
}

RegPath regularization_path(const FeatureCache& cache, double lambda1,
                            const std::vector<double>& lambda2_grid, const PathOptions& opts)
{
    check_grid(lambda2_grid);
    RegPath path;
    path.lambda1 = lambda1;
    const Route route = opts.route == Route::Auto ? choose_route(cache, lambda1) : opts.route;

    std::variant<std::monostate, ParamVector, DualState> warm;
    for (const double lambda2 : lambda2_grid) {
        SolveConfig cfg = opts.solver;
        cfg.lambda1 = lambda1;
        cfg.lambda2 = lambda2;
        cfg.warm_start = opts.warm_start ? warm : std::variant<std::monostate, ParamVector, DualState>{};

        PathPoint point{lambda2, FitResult{ParamVector(cache.spec(), cache.dims()), 0.0, 0, false, route, 0.0, {}}, {}, 0.0, {}};
        const auto start = std::chrono::steady_clock::now();
        try {
            if (route == Route::Dual) {
                DualFit df = solve_dual(cache, cfg);
                point.fit = std::move(df.fit);
                warm = std::move(df.state);
            } else {
                point.fit = solve_primal(cache, cfg);
                warm = point.fit.theta;
            }
        } catch (const std::exception& e) {
            point.error = e.what();
            point.fit.route = route;
        }
        point.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        point.group_norms = point.fit.theta.group_norms();
        path.points.push_back(std::move(point));
    }
    return path;
}

RegPath regularization_path(const SampleSet& xp, const SampleSet& xq, const BasisSpec& spec,
                            double lambda1, const std::vector<double>& lambda2_grid,
                            const PathOptions& opts)
{
    return regularization_path(FeatureCache(xp, xq, spec), lambda1, lambda2_grid, opts);
}

std::vector<double> log_grid(double lo, double hi, int count)
{
    if (!(lo > 0.0) || !(hi >= lo) || count < 1 || (count > 1 && !(hi > lo))) {
        throw std::invalid_argument("log grid needs 0 < lo < hi and count >= 1");
    }
    std::vector<double> grid(static_cast<std::size_t>(count));
    if (count == 1) {
        grid[0] = hi;
        return grid;
    }
    const double a = std::log10(hi);
    const double b = std::log10(lo);
    for (int i = 0; i < count; ++i) {
        grid[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
    }
    grid.front() = hi;
    grid.back() = lo;
    return grid;
}

EdgeScores edge_scores(const ParamVector& theta)
{
    EdgeScores scores;
    const auto factors = enumerate_factors(theta.dims());
    for (std::size_t t = 0; t < factors.size(); ++t) {
        if (!factors[t].is_univariate()) {
            scores[factors[t]] = theta.block_at(t).norm();
        }
    }
    return scores;
}

void EdgeTruth::validate(int d) const
{
    if (changed.empty()) {
        throw std::invalid_argument("ground truth must list at least one changed edge");
    }
    for (const auto& e : changed) {
        if (e.v < 1 || e.u <= e.v || e.u > d) {
            throw std::invalid_argument("ground-truth edge (" + std::to_string(e.u) + "," +
                                        std::to_string(e.v) + ") is not a valid pair for d=" +
                                        std::to_string(d));
        }
    }
}

double pr_auc(const std::vector<PRPoint>& points)
{
    if (points.empty()) {
        return 0.0;
    }
    double area = 0.0;
    PRPoint prev{0.0, points.front().precision};
    for (const auto& p : points) {
        area += (p.recall - prev.recall) * 0.5 * (p.precision + prev.precision);
        prev = p;
    }
    return std::clamp(area, 0.0, 1.0);
}

PRCurve pr_curve(const EdgeScores& scores, const EdgeTruth& truth)
{
    if (truth.changed.empty()) {
        throw std::invalid_argument("ground truth must list at least one changed edge");
    }
    std::vector<std::pair<double, bool>> ranked;
    ranked.reserve(scores.size());
    for (const auto& [edge, score] : scores) {
        const bool positive =
            std::find(truth.changed.begin(), truth.changed.end(), edge) != truth.changed.end();
        ranked.emplace_back(score, positive);
    }
    for (const auto& e : truth.changed) {
        if (!scores.contains(e)) {
            throw std::invalid_argument("ground-truth edge missing from scores");
        }
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    const auto positives = static_cast<double>(truth.changed.size());
    PRCurve curve;
    std::size_t tp = 0;
    std::size_t predicted = 0;
    for (std::size_t i = 0; i < ranked.size();) {
        const double threshold = ranked[i].first;
        while (i < ranked.size() && ranked[i].first == threshold) {
            tp += ranked[i].second ? 1 : 0;
            ++predicted;
            ++i;
        }
        curve.points.push_back({static_cast<double>(tp) / positives,
                                static_cast<double>(tp) / static_cast<double>(predicted)});
    }
    curve.auc = pr_auc(curve.points);
    return curve;
}

std::vector<PathPRPoint> path_pr_points(const std::vector<double>& lambda2,
                                        const std::vector<std::vector<double>>& norms, int d,
                                        const EdgeTruth& truth)
{
    truth.validate(d);
    if (lambda2.size() != norms.size()) {
        throw std::invalid_argument("one norm vector per grid point is required");
    }
    const auto factors = enumerate_factors(d);
    const auto positives = static_cast<double>(truth.changed.size());
    std::vector<PathPRPoint> out;
    for (std::size_t j = 0; j < norms.size(); ++j) {
        if (norms[j].size() != factors.size()) {
            throw std::invalid_argument("group norms do not match the factor count");
        }
        std::size_t tp = 0;
        std::size_t predicted = 0;
        for (std::size_t t = 0; t < factors.size(); ++t) {
            if (factors[t].is_univariate() || !(norms[j][t] > 0.0)) {
                continue;
            }
            ++predicted;
            if (std::find(truth.changed.begin(), truth.changed.end(), factors[t]) !=
                truth.changed.end()) {
                ++tp;
            }
        }
        if (predicted > 0) {
            out.push_back({lambda2[j], predicted, static_cast<double>(tp) / positives,
                           static_cast<double>(tp) / static_cast<double>(predicted)});
        }
    }
    return out;
}

PRCurve path_pr_curve(const std::vector<PathPRPoint>& points, int d, const EdgeTruth& truth)
{
    truth.validate(d);
    PRCurve curve;
    for (const auto& p : points) {
        curve.points.push_back({p.recall, p.precision});
    }
    curve.points.push_back(
        {1.0, static_cast<double>(truth.changed.size()) / static_cast<double>(count_pairs(d))});
    std::stable_sort(curve.points.begin(), curve.points.end(),
                     [](const PRPoint& a, const PRPoint& b) { return a.recall < b.recall; });
    curve.auc = pr_auc(curve.points);
    return curve;
}

PRCurve path_pr_curve(const RegPath& path, int d, const EdgeTruth& truth)
{
    std::vector<double> lambda2;
    std::vector<std::vector<double>> norms;
    for (const auto& point : path.points) {
        if (!point.error) {
            lambda2.push_back(point.lambda2);
            norms.push_back(point.group_norms);
        }
    }
    return path_pr_curve(path_pr_points(lambda2, norms, d, truth), d, truth);
}

std::vector<double> recall_grid()
{
    std::vector<double> grid;
    for (int i = 1; i <= 20; ++i) {
        grid.push_back(0.05 * i);
    }
    return grid;
}

std::vector<double> interpolate_precision(const PRCurve& curve, const std::vector<double>& grid)
{
    std::vector<double> out;
    out.reserve(grid.size());
    if (curve.points.empty()) {
        out.assign(grid.size(), 0.0);
        return out;
    }
    std::vector<PRPoint> pts;
    pts.push_back({0.0, curve.points.front().precision});
    pts.insert(pts.end(), curve.points.begin(), curve.points.end());
    for (const double r : grid) {
        double value = 0.0;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (pts[i].recall >= r - 1e-12) {
                const double span = pts[i].recall - pts[i - 1].recall;
                const double w = span > 0.0 ? (r - pts[i - 1].recall) / span : 1.0;
                value = pts[i - 1].precision + std::clamp(w, 0.0, 1.0) *
                                                   (pts[i].precision - pts[i - 1].precision);
                break;
            }
        }
        out.push_back(value);
    }
    return out;
}

HollSelection select_by_holl(const SampleSet& xp_train, const SampleSet& xq_train,
                             const SampleSet& xp_hold, const SampleSet& xq_hold,
                             const std::vector<BasisSpec>& candidates, double lambda1,
                             const std::vector<double>& lambda2_grid, const PathOptions& opts)
{
    if (candidates.empty()) {
        throw std::invalid_argument("at least one candidate basis is required");
    }
    check_grid(lambda2_grid);

    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].k < candidates[b].k;
    });

    HollSelection sel;
    sel.paths.resize(candidates.size());
    double best = -std::numeric_limits<double>::infinity();
    std::optional<std::pair<std::size_t, std::size_t>> best_at;
    for (const std::size_t c : order) {
        const FeatureCache train(xp_train, xq_train, candidates[c]);
        const FeatureCache hold(xp_hold, xq_hold, candidates[c]);
        sel.paths[c] = regularization_path(train, lambda1, lambda2_grid, opts);
        for (std::size_t j = 0; j < lambda2_grid.size(); ++j) {
            const auto& point = sel.paths[c].points[j];
            HollEntry entry{c, point.lambda2, -std::numeric_limits<double>::infinity(), false};
            if (point.error) {
                entry.failed = true;
            } else {
                entry.holl = hold.loglik(point.fit.theta.flat());
                if (!std::isfinite(entry.holl)) {
                    entry.failed = true;
                } else if (!best_at || entry.holl > best) {
                    best = entry.holl;
                    best_at = std::pair(c, j);
                }
            }
            sel.table.push_back(entry);
        }
    }
    if (!best_at) {
        throw std::runtime_error("every candidate fit failed during HOLL selection");
    }
    const auto [c, j] = *best_at;
    sel.spec = candidates[c];
    sel.lambda2 = lambda2_grid[j];
    sel.fit = sel.paths[c].points[j].fit;
    return sel;
}

CvllSelection cvll_select(const SampleSet& xp, const SampleSet& xq, const BasisSpec& spec,
                          double lambda1, const std::vector<double>& lambda2_grid, int folds,
                          const PathOptions& opts)
{
    check_grid(lambda2_grid);
    if (folds < 2) {
        throw std::invalid_argument("cross-validation needs folds >= 2");
    }
    if (xp.size() < folds || xq.size() < folds) {
        throw std::invalid_argument("each fold needs at least one P and one Q sample");
    }

    CvllSelection sel;
    sel.cvll.assign(lambda2_grid.size(), 0.0);
    for (int f = 0; f < folds; ++f) {
        const auto [p_train, p_test] = fold_rows(xp.size(), f, folds);
        const auto [q_train, q_test] = fold_rows(xq.size(), f, folds);
        const FeatureCache train(xp.subset(p_train), xq.subset(q_train), spec);
        const FeatureCache test(xp.subset(p_test), xq.subset(q_test), spec);
        const RegPath path = regularization_path(train, lambda1, lambda2_grid, opts);
        for (std::size_t j = 0; j < lambda2_grid.size(); ++j) {
            const auto& point = path.points[j];
            sel.cvll[j] += point.error ? -std::numeric_limits<double>::infinity()
                                       : test.loglik(point.fit.theta.flat()) / folds;
        }
    }

    std::size_t best = 0;
    for (std::size_t j = 1; j < sel.cvll.size(); ++j) {
        if (sel.cvll[j] > sel.cvll[best]) {
            best = j;
        }
    }
    sel.lambda2 = lambda2_grid[best];

    const FeatureCache full(xp, xq, spec);
    const RegPath final_path = regularization_path(
        full, lambda1, std::vector<double>(lambda2_grid.begin(), lambda2_grid.begin() + best + 1),
        opts);
    const auto& point = final_path.points.back();
    if (point.error) {
        throw std::runtime_error("final CVLL fit failed: " + *point.error);
    }
    sel.fit = point.fit;
    return sel;
}

std::vector<FactorIndex> detected_edges(const ParamVector& theta)
{
    std::vector<FactorIndex> out;
    const auto factors = enumerate_factors(theta.dims());
    for (std::size_t t = 0; t < factors.size(); ++t) {
        if (!factors[t].is_univariate() && (theta.block_at(t).array() != 0.0).any()) {
            out.push_back(factors[t]);
        }
    }
    return out;
}

PermutationResult permutation_test(const SampleSet& xp, const SampleSet& xq,
                                   const BasisSpec& spec, double lambda1,
                                   const std::vector<double>& lambda2_grid, int folds,
                                   int num_shuffles, int max_hits, RngSeed seed,
                                   const PathOptions& opts)
{
    if (num_shuffles < 1) {
        throw std::invalid_argument("num_shuffles must be >= 1");
    }
    if (xp.dims() != xq.dims()) {
        throw std::invalid_argument("P and Q samples have different dimensions");
    }
    PermutationResult result;
    const CvllSelection original = cvll_select(xp, xq, spec, lambda1, lambda2_grid, folds, opts);
    result.lambda2 = original.lambda2;
    result.original = detected_edges(original.fit.theta);

    const Eigen::Index n_p = xp.size();
    const Eigen::Index n_q = xq.size();
    Eigen::MatrixXd pooled(n_p + n_q, xp.dims());
    pooled << xp.matrix(), xq.matrix();
    const SampleSet pool(std::move(pooled));

    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n_p + n_q));
    for (int s = 0; s < num_shuffles; ++s) {
        std::iota(rows.begin(), rows.end(), 0);
        auto rng = make_engine(derive_seed(seed, static_cast<std::uint64_t>(s)));
        std::shuffle(rows.begin(), rows.end(), rng);
        const SampleSet sp = pool.subset({rows.begin(), rows.begin() + n_p});
        const SampleSet sq = pool.subset({rows.begin() + n_p, rows.end()});
        const CvllSelection shuffled = cvll_select(sp, sq, spec, lambda1, lambda2_grid, folds, opts);
        for (const auto& e : detected_edges(shuffled.fit.theta)) {
            ++result.hits[e];
        }
    }
    for (const auto& e : result.original) {
        const auto it = result.hits.find(e);
        const int hits = it == result.hits.end() ? 0 : it->second;
        if (hits <= max_hits) {
            result.retained.push_back(e);
        }
    }
    return result;
}

} // namespace kliep
