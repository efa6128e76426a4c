#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kliep/commands.hpp"
#include "kliep/io.hpp"

namespace {

using namespace kliep::cli;

void add_solver_flags(CLI::App* cmd, SolverOptions& s)
{
    cmd->add_option("--max-iters", s.max_iters, "Iteration cap per fit")->check(CLI::PositiveNumber);
    cmd->add_option("--tol", s.tol, "Stationarity tolerance")->check(CLI::PositiveNumber);
}

// Relative output names resolve against $KLIEP_OUT_DIR when the flag is absent.
void default_output(CLI::Option* opt, std::filesystem::path& target)
{
    if (opt->count() == 0) {
        target = default_out_dir() / target;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse change detection between two Markov networks by density-ratio estimation"};
    app.set_config("--config", "", "Key-value config file supplying flag values");
    app.require_subcommand(1);

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Generate a synthetic P/Q dataset pair");
    g->add_option("--kind", gen.kind, "gaussian | npn | diamond")
        ->check(CLI::IsMember({"gaussian", "npn", "diamond"}));
    g->add_option("--d", gen.d, "Dimension");
    g->add_option("--n", gen.n, "Samples per side");
    g->add_option("--sparsity", gen.sparsity, "Edge fraction of Theta^P (gaussian/npn)");
    g->add_option("--changes", gen.changes, "Number of changed edges (gaussian/npn)");
    g->add_option("--delta", gen.delta, "Amount subtracted from changed edges");
    g->add_option("--npn-power", gen.npn_power, "Power of the nonparanormal transform");
    g->add_option("--sparsity-p", gen.sparsity_p, "Edge fraction of A^P (diamond)");
    g->add_option("--sparsity-q", gen.sparsity_q, "Edge fraction of A^Q (diamond)");
    g->add_option("--burn-in", gen.burn_in, "Slice sampler burn-in sweeps (diamond)");
    g->add_option("--thin", gen.thin, "Slice sampler thinning stride (diamond)");
    g->add_option("--seed", gen.seed, "Random seed");
    auto* gp = g->add_option("--out-p", gen.out_p, "P sample CSV");
    auto* gq = g->add_option("--out-q", gen.out_q, "Q sample CSV");
    auto* gt = g->add_option("--out-truth", gen.out_truth, "Changed-edge CSV");

    FitOptions fit;
    auto* f = app.add_subcommand("fit", "Fit theta at a single (lambda1, lambda2)");
    f->add_option("--p", fit.p, "P sample CSV")->required()->check(CLI::ExistingFile);
    f->add_option("--q", fit.q, "Q sample CSV")->required()->check(CLI::ExistingFile);
    f->add_option("--basis", fit.basis, "polynomial | power | gaussian");
    f->add_option("--k", fit.k, "Basis degree / power");
    f->add_option("--lambda1", fit.lambda1, "Ridge weight");
    f->add_option("--lambda2", fit.lambda2, "Group-sparsity weight");
    f->add_option("--route", fit.route, "auto | primal | dual")
        ->check(CLI::IsMember({"auto", "primal", "dual"}));
    add_solver_flags(f, fit.solver);
    auto* fo = f->add_option("--out", fit.out, "Fit JSON");

    PathOptions path;
    std::string k_list = "2";
    auto* p = app.add_subcommand("path", "Regularization path over a lambda2 grid");
    p->add_option("--p", path.p, "P sample CSV")->required()->check(CLI::ExistingFile);
    p->add_option("--q", path.q, "Q sample CSV")->required()->check(CLI::ExistingFile);
    p->add_option("--basis", path.basis, "polynomial | power | gaussian");
    p->add_option("--k", k_list, "Comma-separated candidate degrees");
    p->add_option("--lambda1", path.lambda1, "Ridge weight");
    p->add_option("--grid", path.grid, "log:lo:hi:count or comma list (descending)");
    p->add_option("--holdout-fraction", path.holdout_fraction,
                  "Trailing fraction of each sample held out for HOLL selection (0 disables)");
    p->add_option("--route", path.route, "auto | primal | dual")
        ->check(CLI::IsMember({"auto", "primal", "dual"}));
    p->add_flag("!--no-warm-start", path.warm_start, "Cold-start every grid point");
    add_solver_flags(p, path.solver);
    auto* po = p->add_option("--out-dir", path.out_dir, "Output directory");

    EvalPrOptions eval;
    auto* e = app.add_subcommand("eval-pr", "Precision-recall evaluation of path files");
    e->add_option("--path", eval.paths, "Path CSV (repeatable)")->required()->check(CLI::ExistingFile);
    e->add_option("--truth", eval.truths, "Truth CSV (one, or one per path)")
        ->required()
        ->check(CLI::ExistingFile);
    auto* eo = e->add_option("--out", eval.out, "P-R JSON");

    BenchOptions bench;
    std::string dims = "40,50,60,70,80";
    auto* b = app.add_subcommand("bench-dual", "Primal vs dual path wall time");
    b->add_option("--dims", dims, "Comma-separated dimensions");
    b->add_option("--n", bench.n, "Samples per side");
    b->add_option("--grid", bench.grid, "lambda2 grid");
    b->add_option("--lambda1", bench.lambda1, "Ridge weight (> 0)");
    b->add_option("--basis", bench.basis, "polynomial | power | gaussian");
    b->add_option("--k", bench.k, "Basis degree / power");
    b->add_option("--seed", bench.seed, "Random seed");
    add_solver_flags(b, bench.solver);
    auto* bo = b->add_option("--out", bench.out, "Timing CSV");

    PermtestOptions perm;
    auto* t = app.add_subcommand("permtest", "Permutation-test sparsification of detected edges");
    t->add_option("--p", perm.p, "P sample CSV")->required()->check(CLI::ExistingFile);
    t->add_option("--q", perm.q, "Q sample CSV")->required()->check(CLI::ExistingFile);
    t->add_option("--basis", perm.basis, "polynomial | power | gaussian");
    t->add_option("--k", perm.k, "Basis degree / power");
    t->add_option("--lambda1", perm.lambda1, "Ridge weight");
    t->add_option("--grid", perm.grid, "lambda2 grid for CVLL");
    t->add_option("--folds", perm.folds, "Cross-validation folds");
    t->add_option("--shuffles", perm.shuffles, "Number of shuffled datasets");
    t->add_option("--max-hits", perm.max_hits, "Largest allowed shuffle detection count");
    t->add_option("--seed", perm.seed, "Random seed");
    add_solver_flags(t, perm.solver);
    auto* to = t->add_option("--out", perm.out, "Result JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*g) {
            default_output(gp, gen.out_p);
            default_output(gq, gen.out_q);
            default_output(gt, gen.out_truth);
            return cmd_generate(gen, std::cerr);
        }
        if (*f) {
            default_output(fo, fit.out);
            return cmd_fit(fit, std::cerr);
        }
        if (*p) {
            path.k_list = kliep::io::parse_int_list(k_list);
            default_output(po, path.out_dir);
            return cmd_path(path, std::cerr);
        }
        if (*e) {
            default_output(eo, eval.out);
            return cmd_eval_pr(eval, std::cerr);
        }
        if (*b) {
            bench.dims = kliep::io::parse_int_list(dims);
            default_output(bo, bench.out);
            return cmd_bench_dual(bench, std::cerr);
        }
        if (*t) {
            default_output(to, perm.out);
            return cmd_permtest(perm, std::cerr);
        }
    } catch (const std::exception& ex) {
        std::cerr << "kliep: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}
