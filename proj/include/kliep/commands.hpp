#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kliep/feature_space.hpp"
#include "kliep/solvers.hpp"

namespace kliep::cli {

inline constexpr int kSchemaVersion = 1;

/// Output directory used when an output path is not given: $KLIEP_OUT_DIR, else ".".
std::filesystem::path default_out_dir();

struct GenerateOptions
{
    std::string kind = "gaussian";  // gaussian | npn | diamond
    int d = 40;
    int n = 100;
    double sparsity = 0.25;
    int changes = 15;
    double delta = 0.1;
    double npn_power = 0.5;
    double sparsity_p = 0.35;
    double sparsity_q = 0.15;
    long burn_in = 1000;
    long thin = 5;
    std::uint64_t seed = 0;
    std::filesystem::path out_p = "p.csv";
    std::filesystem::path out_q = "q.csv";
    std::filesystem::path out_truth = "truth.csv";
};

struct SolverOptions
{
    int max_iters = 5000;
    double tol = 1e-6;
};

struct FitOptions
{
    std::filesystem::path p;
    std::filesystem::path q;
    std::string basis = "polynomial";
    int k = 2;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    std::string route = "auto";
    SolverOptions solver;
    std::filesystem::path out = "fit.json";
};

struct PathOptions
{
    std::filesystem::path p;
    std::filesystem::path q;
    std::string basis = "polynomial";
    std::vector<int> k_list{2};
    double lambda1 = 0.0;
    std::string grid = "log:1e-4:1:20";
    double holdout_fraction = 0.0;
    std::string route = "auto";
    bool warm_start = true;
    SolverOptions solver;
    std::filesystem::path out_dir = ".";
};

struct EvalPrOptions
{
    std::vector<std::filesystem::path> paths;
    std::vector<std::filesystem::path> truths;
    std::filesystem::path out = "pr.json";
};

struct BenchOptions
{
    std::vector<int> dims{40, 50, 60, 70, 80};
    int n = 150;
    std::string grid = "log:1e-4:1:20";
    double lambda1 = 0.1;
    std::string basis = "gaussian";
    int k = 2;
    std::uint64_t seed = 0;
    SolverOptions solver;
    std::filesystem::path out = "bench.csv";
};

struct PermtestOptions
{
    std::filesystem::path p;
    std::filesystem::path q;
    std::string basis = "polynomial";
    int k = 2;
    double lambda1 = 0.1;
    std::string grid = "log:1e-3:1:10";
    int folds = 5;
    int shuffles = 100;
    int max_hits = 5;
    std::uint64_t seed = 0;
    SolverOptions solver;
    std::filesystem::path out = "permtest.json";
};

/// Each command returns the process exit status and reports errors on err.
int cmd_generate(const GenerateOptions& opt, std::ostream& err);
int cmd_fit(const FitOptions& opt, std::ostream& err);
int cmd_path(const PathOptions& opt, std::ostream& err);
int cmd_eval_pr(const EvalPrOptions& opt, std::ostream& err);
int cmd_bench_dual(const BenchOptions& opt, std::ostream& err);
int cmd_permtest(const PermtestOptions& opt, std::ostream& err);

} // namespace kliep::cli
