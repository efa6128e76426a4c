#include "kliep/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "kliep/evaluation.hpp"
#include "kliep/io.hpp"
#include "kliep/sampling.hpp"

namespace kliep::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Streams of a generated dataset.
constexpr std::uint64_t kStructureStream = 0;
constexpr std::uint64_t kPStream = 1;
constexpr std::uint64_t kQStream = 2;

// Gaussian pair used by bench-dual; small d gets fewer changes.
constexpr double kBenchSparsity = 0.25;
constexpr std::size_t kBenchChanges = 15;
constexpr double kBenchDelta = 0.1;

json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

SolveConfig solver_config(const SolverOptions& s)
{
    SolveConfig cfg;
    cfg.max_iters = s.max_iters;
    cfg.grad_tol = s.tol;
    return cfg;
}

void check_dims(const SampleSet& p, const SampleSet& q)
{
    if (p.dims() != q.dims()) {
        throw std::invalid_argument("P has d=" + std::to_string(p.dims()) + " but Q has d=" +
                                    std::to_string(q.dims()));
    }
}

SampleSet head_rows(const SampleSet& x, Eigen::Index count)
{
    return SampleSet(x.matrix().topRows(count));
}

SampleSet tail_rows(const SampleSet& x, Eigen::Index count)
{
    return SampleSet(x.matrix().bottomRows(count));
}

template <class Fn>
int guarded(std::ostream& err, const char* name, Fn&& fn)
{
    try {
        fn();
        return 0;
    } catch (const std::exception& e) {
        err << "kliep " << name << ": " << e.what() << "\n";
        return 1;
    }
}

json basis_json(const BasisSpec& spec)
{
    return json{{"family", to_string(spec.family)}, {"k", spec.k}};
}

} // namespace

fs::path default_out_dir()
{
    if (const char* dir = std::getenv("KLIEP_OUT_DIR"); dir != nullptr && *dir != '\0') {
        return dir;
    }
    return ".";
}

int cmd_generate(const GenerateOptions& opt, std::ostream& err)
{
    return guarded(err, "generate", [&] {
        if (opt.n < 1) {
            throw std::invalid_argument("n must be >= 1");
        }
        const RngSeed seed{opt.seed};
        const RngSeed structure = derive_seed(seed, kStructureStream);
        std::optional<SampleSet> xp;
        std::optional<SampleSet> xq;
        std::vector<FactorIndex> truth;
        if (opt.kind == "gaussian" || opt.kind == "npn") {
            const auto pair = make_gaussian_pair(opt.d, opt.sparsity, opt.changes, opt.delta, structure);
            xp = sample_gaussian_mn(pair.theta_p, opt.n, derive_seed(seed, kPStream));
            xq = sample_gaussian_mn(pair.theta_q, opt.n, derive_seed(seed, kQStream));
            if (opt.kind == "npn") {
                xp = npn_transform(*xp, opt.npn_power);
                xq = npn_transform(*xq, opt.npn_power);
            }
            truth = pair.changed_edges;
        } else if (opt.kind == "diamond") {
            const auto pair = make_diamond_pair(opt.d, opt.sparsity_p, opt.sparsity_q, structure);
            SliceConfig cfg;
            cfg.burn_in = opt.burn_in;
            cfg.thin = opt.thin;
            const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(opt.d);
            xp = slice_sample([&](const Eigen::VectorXd& x) { return diamond_log_density_unnorm(x, pair.p); },
                              x0, opt.n, derive_seed(seed, kPStream), cfg);
            xq = slice_sample([&](const Eigen::VectorXd& x) { return diamond_log_density_unnorm(x, pair.q); },
                              x0, opt.n, derive_seed(seed, kQStream), cfg);
            truth = pair.changed_edges;
        } else {
            throw std::invalid_argument("unknown kind '" + opt.kind + "' (gaussian, npn, diamond)");
        }
        io::write_samples(opt.out_p, *xp);
        io::write_samples(opt.out_q, *xq);
        io::write_truth(opt.out_truth, truth);
    });
}

int cmd_fit(const FitOptions& opt, std::ostream& err)
{
    return guarded(err, "fit", [&] {
        const BasisSpec spec{parse_basis_family(opt.basis), opt.k};
        spec.validate();
        SolveConfig cfg = solver_config(opt.solver);
        cfg.lambda1 = opt.lambda1;
        cfg.lambda2 = opt.lambda2;
        const Route requested = parse_route(opt.route);
        cfg.validate(requested);

        const SampleSet xp = io::read_samples(opt.p);
        const SampleSet xq = io::read_samples(opt.q);
        check_dims(xp, xq);
        const FeatureCache cache(xp, xq, spec);
        const Route route = requested == Route::Auto ? choose_route(cache, cfg.lambda1) : requested;
        const FitResult fit = solve(cache, cfg, route);

        json groups = json::array();
        int active = 0;
        const auto factors = enumerate_factors(cache.dims());
        const auto norms = fit.theta.group_norms();
        for (std::size_t t = 0; t < factors.size(); ++t) {
            groups.push_back({{"u", factors[t].u}, {"v", factors[t].v}, {"norm", norms[t]}});
            active += norms[t] > 0.0 ? 1 : 0;
        }
        json out{{"schema_version", kSchemaVersion},
                 {"basis", basis_json(spec)},
                 {"d", cache.dims()},
                 {"n_p", xp.size()},
                 {"n_q", xq.size()},
                 {"lambda1", cfg.lambda1},
                 {"lambda2", cfg.lambda2},
                 {"requested_route", to_string(requested)},
                 {"route", to_string(fit.route)},
                 {"objective_value", fit.objective_value},
                 {"iterations", fit.iterations},
                 {"converged", fit.converged},
                 {"stationarity", finite_or_null(fit.stationarity)},
                 {"active_groups", active},
                 {"groups", groups},
                 {"theta", std::vector<double>(fit.theta.flat().begin(), fit.theta.flat().end())}};
        if (!fit.converged) {
            err << "kliep fit: solver did not converge within " << fit.iterations << " iterations\n";
        }
        io::write_text(opt.out, out.dump(2) + "\n");
    });
}

int cmd_path(const PathOptions& opt, std::ostream& err)
{
    return guarded(err, "path", [&] {
        if (opt.k_list.empty()) {
            throw std::invalid_argument("at least one k is required");
        }
        if (!(opt.holdout_fraction >= 0.0 && opt.holdout_fraction < 1.0)) {
            throw std::invalid_argument("holdout fraction must lie in [0, 1)");
        }
        const BasisFamily family = parse_basis_family(opt.basis);
        std::vector<BasisSpec> specs;
        for (const int k : opt.k_list) {
            specs.push_back({family, k});
            specs.back().validate();
        }
        const auto grid = io::parse_grid(opt.grid);
        kliep::PathOptions popts;
        popts.route = parse_route(opt.route);
        popts.warm_start = opt.warm_start;
        popts.solver = solver_config(opt.solver);
        popts.solver.lambda1 = opt.lambda1;
        popts.solver.validate(popts.route);

        const SampleSet xp = io::read_samples(opt.p);
        const SampleSet xq = io::read_samples(opt.q);
        check_dims(xp, xq);
        const int d = xp.dims();

        std::vector<RegPath> paths;
        std::size_t chosen = 0;
        json holl_out;
        if (opt.holdout_fraction > 0.0) {
            const auto hold_p = static_cast<Eigen::Index>(std::floor(opt.holdout_fraction * xp.size()));
            const auto hold_q = static_cast<Eigen::Index>(std::floor(opt.holdout_fraction * xq.size()));
            if (hold_p < 1 || hold_q < 1 || hold_p >= xp.size() || hold_q >= xq.size()) {
                throw std::invalid_argument("holdout fraction leaves an empty train or hold-out set");
            }
            const HollSelection sel = select_by_holl(
                head_rows(xp, xp.size() - hold_p), head_rows(xq, xq.size() - hold_q),
                tail_rows(xp, hold_p), tail_rows(xq, hold_q), specs, opt.lambda1, grid, popts);
            paths = sel.paths;
            json table = json::array();
            double best_holl = 0.0;
            for (const auto& e : sel.table) {
                table.push_back({{"k", specs[e.candidate].k},
                                 {"lambda2", e.lambda2},
                                 {"holl", finite_or_null(e.holl)},
                                 {"failed", e.failed}});
                if (specs[e.candidate] == sel.spec && e.lambda2 == sel.lambda2) {
                    best_holl = e.holl;
                }
            }
            for (std::size_t c = 0; c < specs.size(); ++c) {
                if (specs[c] == sel.spec) {
                    chosen = c;
                }
            }
            holl_out = {{"schema_version", kSchemaVersion},
                        {"n_train_p", xp.size() - hold_p},
                        {"n_train_q", xq.size() - hold_q},
                        {"n_holdout_p", hold_p},
                        {"n_holdout_q", hold_q},
                        {"selected", {{"basis", basis_json(sel.spec)},
                                      {"lambda2", sel.lambda2},
                                      {"holl", best_holl}}},
                        {"table", table}};
        } else {
            for (const auto& spec : specs) {
                paths.push_back(regularization_path(xp, xq, spec, opt.lambda1, grid, popts));
            }
        }

        std::string timing = "k,lambda2,route,seconds,iterations,converged,error\n";
        for (std::size_t c = 0; c < specs.size(); ++c) {
            io::write_path(opt.out_dir / ("path_" + to_string(family) + "_k" +
                                          std::to_string(specs[c].k) + ".csv"),
                           paths[c], d);
            for (const auto& point : paths[c].points) {
                timing += std::to_string(specs[c].k) + "," + io::format_double(point.lambda2) + "," +
                          to_string(point.fit.route) + "," + io::format_double(point.seconds) + "," +
                          std::to_string(point.fit.iterations) + "," +
                          (point.fit.converged ? "1" : "0") + "," +
                          (point.error ? "1" : "0") + "\n";
                if (point.error) {
                    err << "kliep path: fit failed at lambda2=" << point.lambda2 << ": "
                        << *point.error << "\n";
                }
            }
        }
        io::write_path(opt.out_dir / "path.csv", paths[chosen], d);
        io::write_text(opt.out_dir / "timing.csv", timing);
        if (!holl_out.is_null()) {
            io::write_text(opt.out_dir / "holl.json", holl_out.dump(2) + "\n");
        }
    });
}

int cmd_eval_pr(const EvalPrOptions& opt, std::ostream& err)
{
    return guarded(err, "eval-pr", [&] {
        if (opt.paths.empty()) {
            throw std::invalid_argument("at least one path file is required");
        }
        if (opt.truths.size() != 1 && opt.truths.size() != opt.paths.size()) {
            throw std::invalid_argument("give one truth file, or one per path file");
        }
        const auto grid = recall_grid();
        json runs = json::array();
        std::vector<std::vector<double>> curves;
        std::vector<double> aucs;
        for (std::size_t r = 0; r < opt.paths.size(); ++r) {
            const auto table = io::read_path(opt.paths[r]);
            const EdgeTruth truth{io::read_truth(opt.truths.size() == 1 ? opt.truths[0] : opt.truths[r])};
            try {
                truth.validate(table.d);
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument(opt.paths[r].string() + ": " + e.what());
            }
            const auto points = path_pr_points(table.lambda2, table.norms, table.d, truth);
            const PRCurve curve = path_pr_curve(points, table.d, truth);
            json pts = json::array();
            for (const auto& p : points) {
                pts.push_back({{"lambda2", p.lambda2},
                               {"predicted", p.predicted},
                               {"recall", p.recall},
                               {"precision", p.precision}});
            }
            json cpts = json::array();
            for (const auto& p : curve.points) {
                cpts.push_back({{"recall", p.recall}, {"precision", p.precision}});
            }
            runs.push_back({{"path", opt.paths[r].string()},
                            {"points", pts},
                            {"curve", cpts},
                            {"auc", curve.auc}});
            curves.push_back(interpolate_precision(curve, grid));
            aucs.push_back(curve.auc);
        }
        json out{{"schema_version", kSchemaVersion}, {"runs", runs}};
        if (curves.size() > 1) {
            const auto n = static_cast<double>(curves.size());
            auto mean_se = [n](const std::vector<double>& v) {
                double mean = 0.0;
                for (const double x : v) mean += x;
                mean /= n;
                double ss = 0.0;
                for (const double x : v) ss += (x - mean) * (x - mean);
                return std::pair(mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n));
            };
            std::vector<double> mean_p;
            std::vector<double> se_p;
            for (std::size_t g = 0; g < grid.size(); ++g) {
                std::vector<double> col;
                for (const auto& c : curves) {
                    col.push_back(c[g]);
                }
                const auto [m, se] = mean_se(col);
                mean_p.push_back(m);
                se_p.push_back(se);
            }
            const auto [auc_mean, auc_se] = mean_se(aucs);
            out["summary"] = {{"runs", curves.size()},
                              {"recall_grid", grid},
                              {"mean_precision", mean_p},
                              {"stderr_precision", se_p},
                              {"mean_auc", auc_mean},
                              {"stderr_auc", auc_se}};
        }
        io::write_text(opt.out, out.dump(2) + "\n");
    });
}

int cmd_bench_dual(const BenchOptions& opt, std::ostream& err)
{
    return guarded(err, "bench-dual", [&] {
        if (!(opt.lambda1 > 0.0)) {
            throw std::invalid_argument("bench-dual requires lambda1 > 0");
        }
        if (opt.dims.empty() || opt.n < 1) {
            throw std::invalid_argument("bench-dual needs at least one dimension and n >= 1");
        }
        const BasisSpec spec{parse_basis_family(opt.basis), opt.k};
        spec.validate();
        const auto grid = io::parse_grid(opt.grid);
        std::string csv = "d,route,n,grid_points,seconds,iterations,converged_points,max_theta_diff\n";
        for (const int d : opt.dims) {
            const RngSeed seed = derive_seed(RngSeed{opt.seed}, static_cast<std::uint64_t>(d));
            const int changes = static_cast<int>(std::min<std::size_t>(kBenchChanges, edge_count(kBenchSparsity, d)));
            const auto pair = make_gaussian_pair(d, kBenchSparsity, changes, kBenchDelta,
                                                 derive_seed(seed, kStructureStream));
            const SampleSet xp = sample_gaussian_mn(pair.theta_p, opt.n, derive_seed(seed, kPStream));
            const SampleSet xq = sample_gaussian_mn(pair.theta_q, opt.n, derive_seed(seed, kQStream));
            const FeatureCache cache(xp, xq, spec);

            std::vector<RegPath> runs;
            std::vector<double> seconds;
            for (const Route route : {Route::Primal, Route::Dual}) {
                kliep::PathOptions popts;
                popts.route = route;
                popts.solver = solver_config(opt.solver);
                const auto start = std::chrono::steady_clock::now();
                runs.push_back(regularization_path(cache, opt.lambda1, grid, popts));
                seconds.push_back(
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            }
            double diff = 0.0;
            for (std::size_t j = 0; j < grid.size(); ++j) {
                diff = std::max(diff, (runs[0].points[j].fit.theta.flat() -
                                       runs[1].points[j].fit.theta.flat())
                                          .lpNorm<Eigen::Infinity>());
            }
            for (std::size_t r = 0; r < runs.size(); ++r) {
                int iters = 0;
                int conv = 0;
                for (const auto& p : runs[r].points) {
                    iters += p.fit.iterations;
                    conv += p.fit.converged ? 1 : 0;
                }
                csv += std::to_string(d) + "," + (r == 0 ? "primal" : "dual") + "," +
                       std::to_string(opt.n) + "," + std::to_string(grid.size()) + "," +
                       io::format_double(seconds[r]) + "," + std::to_string(iters) + "," +
                       std::to_string(conv) + "," + io::format_double(diff) + "\n";
            }
            err << "kliep bench-dual: d=" << d << " primal " << seconds[0] << "s, dual "
                << seconds[1] << "s, max |theta_primal - theta_dual| = " << diff << "\n";
        }
        io::write_text(opt.out, csv);
    });
}

int cmd_permtest(const PermtestOptions& opt, std::ostream& err)
{
    return guarded(err, "permtest", [&] {
        const BasisSpec spec{parse_basis_family(opt.basis), opt.k};
        spec.validate();
        const auto grid = io::parse_grid(opt.grid);
        const SampleSet xp = io::read_samples(opt.p);
        const SampleSet xq = io::read_samples(opt.q);
        check_dims(xp, xq);
        kliep::PathOptions popts;
        popts.solver = solver_config(opt.solver);
        popts.solver.lambda1 = opt.lambda1;
        popts.solver.validate(Route::Auto);

        const auto result = permutation_test(xp, xq, spec, opt.lambda1, grid, opt.folds,
                                             opt.shuffles, opt.max_hits, RngSeed{opt.seed}, popts);
        auto hits_of = [&](const FactorIndex& e) {
            const auto it = result.hits.find(e);
            return it == result.hits.end() ? 0 : it->second;
        };
        json original = json::array();
        for (const auto& e : result.original) {
            original.push_back({{"u", e.u}, {"v", e.v}, {"hits", hits_of(e)}});
        }
        json retained = json::array();
        for (const auto& e : result.retained) {
            retained.push_back({{"u", e.u}, {"v", e.v}, {"hits", hits_of(e)}});
        }
        json all_hits = json::array();
        for (const auto& [e, h] : result.hits) {
            all_hits.push_back({{"u", e.u}, {"v", e.v}, {"hits", h}});
        }
        const json out{{"schema_version", kSchemaVersion},
                       {"basis", basis_json(spec)},
                       {"lambda1", opt.lambda1},
                       {"selected_lambda2", result.lambda2},
                       {"shuffles", opt.shuffles},
                       {"max_hits", opt.max_hits},
                       {"folds", opt.folds},
                       {"seed", opt.seed},
                       {"original", original},
                       {"retained", retained},
                       {"shuffle_hits", all_hits}};
        io::write_text(opt.out, out.dump(2) + "\n");
    });
}

} // namespace kliep::cli
