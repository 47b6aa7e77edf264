#pragma once

// Command-line front end: `cnplot`, `select`, `estimate`, `bench`, plus
// `replay` to re-execute a run from its manifest.
//
// Exit codes: 0 success, 2 usage/validation error, 3 numerical failure,
// 4 I/O error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "ridgecond/cli/commands.hpp"

namespace ridgecond::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3, kExitIo = 4 };

inline int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::ParseError:
    case ErrorKind::MissingData:
        return kExitIo;
    case ErrorKind::NumericalFailure:
    case ErrorKind::NearSingular:
    case ErrorKind::NotPositiveSemiDefinite:
    case ErrorKind::ConvergenceFailure:
        return kExitNumerical;
    default:
        return kExitUsage;
    }
}

/// --threads, else RIDGECOND_THREADS, else the hardware concurrency.
inline unsigned resolve_threads(int flag)
{
    if (flag > 0) return static_cast<unsigned>(flag);
    if (const char* env = std::getenv("RIDGECOND_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Drops `--out DIR` / `--out=DIR` / `-o DIR` so a manifest can be replayed
/// into another directory.
inline std::vector<std::string> strip_out_dir(const std::vector<std::string>& args)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--out" || args[i] == "-o") {
            ++i;
            continue;
        }
        if (args[i].rfind("--out=", 0) == 0) continue;
        out.push_back(args[i]);
    }
    return out;
}

namespace app_detail {

inline void add_input(CLI::App& cmd, InputOptions& in)
{
    cmd.add_option("--input", in.input, "CSV file: dataset (rows = observations) or, with --as-matrix, a matrix")
        ->required();
    cmd.add_flag("--as-matrix", in.as_matrix, "Treat the input as a precomputed symmetric matrix");
    cmd.add_flag("--cor", in.cor, "Scale to the correlation matrix");
    cmd.add_flag("--no-header", in.no_header, "Input has no header row");
    cmd.add_option("--delimiter", in.delimiter, "Field delimiter");
}

inline void add_estimator(CLI::App& cmd, EstimatorOptions& est)
{
    cmd.add_option("--type", est.type, "Estimator: arch1 | arch2 | alt")->capture_default_str();
    cmd.add_option("--target", est.target, "Target: null | scalar:<phi> | dupv | depv | file:<path>")
        ->capture_default_str();
}

inline void add_path(CLI::App& cmd, CnplotOptions& o, int& threads)
{
    add_input(cmd, o.in);
    add_estimator(cmd, o.est);
    cmd.add_option("--lmin", o.lmin, "Smallest penalty of the grid")->required();
    cmd.add_option("--lmax", o.lmax, "Largest penalty of the grid")->required();
    cmd.add_option("--steps", o.steps, "Number of log-equidistant grid points")->capture_default_str();
    cmd.add_option("--norm", o.norm, "Condition number norm: 2 (spectral) or 1")->capture_default_str();
    cmd.add_flag("--aids", o.aids, "Add the digit-loss and acceleration panels");
    cmd.add_option("--mark", o.marks, "Penalties to mark with vertical lines")->delimiter(',');
    cmd.add_option("--knee-tol", o.knee_tol, "Largest relative drop per step counted as flat")
        ->capture_default_str();
    cmd.add_option("--knee-window", o.knee_window, "Consecutive flat steps required (default max(3, S/100))");
    cmd.add_option("--title", o.title, "Plot title");
    cmd.add_option("--width", o.width, "Plot width in pixels")->capture_default_str();
    cmd.add_option("--height", o.height, "Plot height in pixels")->capture_default_str();
    cmd.add_option("--y-clip", o.y_clip, "Upper limit of the condition number axis");
    cmd.add_option("--out,-o", o.out, "Output directory")->capture_default_str();
    cmd.add_option("--threads", threads, "Worker threads for per-penalty decompositions");
}

} // namespace app_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr);

inline int run_replay(const std::string& manifest_path, std::string out_dir, std::ostream& out, std::ostream& err)
{
    const RunManifest m = read_manifest(manifest_path);
    if (m.tool != kToolName) throw Error(ErrorKind::InvalidInput, "manifest was not written by " + std::string(kToolName));
    if (out_dir.empty()) out_dir = std::filesystem::path(manifest_path).parent_path().string();
    if (out_dir.empty()) out_dir = ".";
    std::vector<std::string> args = m.args;
    if (args.empty() || args.front() != m.command) args.insert(args.begin(), m.command);
    args.push_back("--out");
    args.push_back(out_dir);
    return run_cli(args, out, err);
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Ridge covariance estimation and spectral condition number plots", kToolName};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    int threads = 0;

    CnplotOptions cn;
    auto* cnplot = app.add_subcommand("cnplot", "Condition number path over a penalty grid (path.csv, plot.svg)");
    app_detail::add_path(*cnplot, cn, threads);

    SelectOptions sel;
    int sel_threads = 0;
    auto* select = app.add_subcommand("select", "Knee-constrained cross-validated penalty selection");
    app_detail::add_path(*select, sel.plot, sel_threads);
    select->add_option("--folds", sel.folds, "K-fold cross-validation (default: leave-one-out)");
    select->add_flag("--shuffle", sel.shuffle, "Shuffle rows (seeded) before K-fold assignment");
    select->add_option("--seed", sel.seed, "Seed for the K-fold shuffle")->capture_default_str();
    select->add_flag("--unbiased", sel.unbiased, "Use the n-1 divisor for training covariances");
    select->add_option("--lmin-override", sel.lmin_override, "Lower end of the search domain instead of the knee");
    select->add_option("--tol", sel.tol, "Brent tolerance on ln(penalty)")->capture_default_str();
    select->add_option("--max-iter", sel.max_iter, "Maximum objective evaluations")->capture_default_str();

    EstimateOptions est;
    auto* estimate = app.add_subcommand("estimate", "Ridge estimate and its precision matrix as CSV");
    app_detail::add_input(*estimate, est.in);
    app_detail::add_estimator(*estimate, est.est);
    estimate->add_option("--lambda", est.lambda, "Penalty value")->required();
    estimate->add_option("--out,-o", est.out, "Output directory")->capture_default_str();
    int est_threads = 0;
    estimate->add_option("--threads", est_threads, "Ignored; accepted for interface uniformity");
    std::uint64_t est_seed = 0;
    estimate->add_option("--seed", est_seed, "Ignored; accepted for interface uniformity");

    BenchOptions bn;
    int bench_threads = 0;
    auto* bench = app.add_subcommand("bench", "Median runtime of condition paths over grids of p and S");
    bench->add_option("--p", bn.p_values, "Dimensions")->delimiter(',');
    bench->add_option("--S", bn.s_values, "Grid sizes")->delimiter(',');
    bench->add_option("--estimators", bn.estimators, "Estimators (arch1, arch2, alt)")->delimiter(',');
    bench->add_option("--reps", bn.reps, "Repetitions per cell")->capture_default_str();
    bench->add_option("--n", bn.n, "Rows of the synthetic data")->capture_default_str();
    bench->add_option("--seed", bn.seed, "Seed for the synthetic data")->capture_default_str();
    bench->add_option("--threads", bench_threads, "Worker threads (default 1 for comparable timings)");
    bench->add_option("--out,-o", bn.out, "Output directory")->capture_default_str();

    std::string manifest_path, replay_out;
    auto* replay = app.add_subcommand("replay", "Re-execute a run from its manifest.json");
    replay->add_option("--manifest", manifest_path, "Manifest to replay")->required();
    replay->add_option("--out,-o", replay_out, "Output directory (default: the manifest's directory)");

    std::vector<std::string> argv_store;
    argv_store.reserve(args.size() + 1);
    argv_store.push_back(kToolName);
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const std::vector<std::string> recorded = strip_out_dir(args);
    try {
        if (*cnplot) {
            cn.threads = resolve_threads(threads);
            run_cnplot(cn, recorded);
            out << "wrote path.csv, plot.svg, manifest.json to " << cn.out << "\n";
        } else if (*select) {
            sel.plot.threads = resolve_threads(sel_threads);
            run_select(sel, recorded);
            out << "wrote selection.json, path.csv, plot.svg, manifest.json to " << sel.plot.out << "\n";
        } else if (*estimate) {
            run_estimate(est, recorded);
            out << "wrote estimate.csv, precision.csv, manifest.json to " << est.out << "\n";
        } else if (*bench) {
            bn.threads = bench_threads > 0 ? static_cast<unsigned>(bench_threads) : 1u;
            run_bench(bn, recorded);
            out << "wrote bench.csv, manifest.json to " << bn.out << "\n";
        } else if (*replay) {
            return run_replay(manifest_path, replay_out, out, err);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

} // namespace ridgecond::cli
