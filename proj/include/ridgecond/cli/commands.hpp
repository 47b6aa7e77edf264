#pragma once

// Command implementations behind the CLI. Each command reads its input,
// writes its output files into `out_dir`, and returns the manifest it wrote.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ridgecond/cli/manifest.hpp"
#include "ridgecond/cli/svg_plot.hpp"
#include "ridgecond/ridgecond.hpp"

namespace ridgecond::cli {

struct InputOptions {
    std::string input;
    bool as_matrix = false;
    bool cor = false;
    bool no_header = false;
    char delimiter = ',';
};

struct EstimatorOptions {
    std::string type = "alt";
    std::string target = "dupv";
};

struct CnplotOptions {
    InputOptions in;
    EstimatorOptions est;
    double lmin = 0.0;
    double lmax = 0.0;
    int steps = 1000;
    int norm = 2;
    bool aids = false;
    std::vector<double> marks;
    double knee_tol = kDefaultKneeTolerance;
    std::optional<int> knee_window;
    std::string title = "Spectral condition number plot";
    int width = 900;
    int height = 600;
    std::optional<double> y_clip;
    unsigned threads = 1;
    std::string out = ".";
};

struct SelectOptions {
    CnplotOptions plot;
    int folds = 0; // 0: leave-one-out
    bool shuffle = false;
    std::uint64_t seed = 1;
    bool unbiased = false;
    std::optional<double> lmin_override;
    double tol = 1e-6;
    int max_iter = 200;
};

struct EstimateOptions {
    InputOptions in;
    EstimatorOptions est;
    double lambda = 0.0;
    std::string out = ".";
};

struct BenchOptions {
    std::vector<int> p_values{125, 250};
    std::vector<int> s_values{125, 250, 500, 1000};
    std::vector<std::string> estimators{"alt", "arch1", "arch2"};
    int reps = 5;
    int n = 200;
    std::uint64_t seed = 1234;
    unsigned threads = 1;
    std::string out = ".";
};

struct BenchRow {
    std::string estimator;
    bool equivariant;
    int p;
    int steps;
    double median_seconds;
    int reps;
};

// ---------------------------------------------------------------------------
// Argument interpretation

inline Error usage(const std::string& what) { return Error(ErrorKind::Usage, what); }

inline EstimatorKind parse_estimator(const std::string& s)
{
    if (s == "arch1" || s == "archI" || s == "ArchI") return EstimatorKind::ArchI;
    if (s == "arch2" || s == "archII" || s == "ArchII") return EstimatorKind::ArchII;
    if (s == "alt" || s == "Alt") return EstimatorKind::Alt;
    throw usage("unknown estimator type '" + s + "' (expected arch1, arch2 or alt)");
}

inline TargetSpec parse_target(const std::string& s, const InputOptions& in)
{
    if (s == "null") return TargetSpec::null();
    if (s == "dupv") return TargetSpec::average_eigenvalue();
    if (s == "depv") return TargetSpec::reciprocal_variance();
    if (s.rfind("scalar:", 0) == 0) {
        double phi = 0.0;
        if (!detail::parse_double(s.substr(7), phi)) throw usage("bad scalar target '" + s + "'");
        try {
            return TargetSpec::scalar(phi);
        } catch (const Error& e) {
            throw usage(e.what());
        }
    }
    if (s.rfind("file:", 0) == 0) {
        return TargetSpec::custom(read_matrix_csv(s.substr(5), !in.no_header, in.delimiter).matrix);
    }
    throw usage("unknown target '" + s + "' (expected null, scalar:<phi>, dupv, depv or file:<path>)");
}

inline void check_domain(EstimatorKind kind, double lmin, double lmax)
{
    if (!(lmin > 0.0) || !(lmin < lmax)) {
        throw usage("penalty domain needs 0 < lmin < lmax, got [" + format_double(lmin) + ", " +
                    format_double(lmax) + "]");
    }
    if (kind == EstimatorKind::ArchI && lmax > 1.0) {
        throw usage("arch1 penalty domain is (0, 1]; --lmax " + format_double(lmax) + " exceeds 1");
    }
}

struct PreparedInput {
    std::vector<std::string> names;
    SymMatrix matrix;
    std::optional<Dataset> data;
    std::string digest;
};

inline PreparedInput prepare_input(const InputOptions& in)
{
    if (in.input.empty()) throw usage("--input is required");
    const std::string bytes = read_file(in.input);
    Table table = parse_table(bytes, ReadOptions{!in.no_header, in.delimiter, false});
    if (in.as_matrix) {
        if (table.values.rows() != table.values.cols()) {
            throw Error(ErrorKind::InvalidInput, "--as-matrix input must be square");
        }
        SymMatrix m(table.values);
        if (in.cor) m = to_correlation(m);
        return {std::move(table.names), std::move(m), std::nullopt, sha256_hex(bytes)};
    }
    Dataset d(std::move(table.values), std::move(table.names));
    SymMatrix s = cov_ml(d);
    if (in.cor) s = to_correlation(s);
    auto names = d.names();
    return {std::move(names), std::move(s), std::move(d), sha256_hex(bytes)};
}

inline std::string join_path(const std::string& dir, const std::string& file)
{
    return (std::filesystem::path(dir) / file).string();
}

inline void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + dir + "': " + ec.message());
}

// ---------------------------------------------------------------------------
// Path output

inline std::string path_csv(const ConditionPath& path)
{
    std::ostringstream o;
    o << "index,lambda,ln_lambda,cond,digits_lost,acceleration\n";
    const auto& lam = path.grid.values();
    for (std::size_t s = 0; s < lam.size(); ++s) {
        o << s << ',' << format_double(lam[s]) << ',' << format_double(std::log(lam[s])) << ','
          << format_double(path.cond[s]) << ',';
        if (s < path.digits_lost.size()) {
            if (path.digits_lost[s] == kInfiniteDigitLoss) o << "inf";
            else o << path.digits_lost[s];
        }
        o << ',';
        if (s >= 1 && s - 1 < path.acceleration.size() && path.acceleration[s - 1]) {
            o << format_double(*path.acceleration[s - 1]);
        }
        o << '\n';
    }
    return o.str();
}

struct PathRun {
    PreparedInput input;
    EstimatorKind kind;
    TargetSpec target;
    ConditionPath path;
};

inline PathRun compute_path(const CnplotOptions& opt)
{
    const EstimatorKind kind = parse_estimator(opt.est.type);
    check_domain(kind, opt.lmin, opt.lmax);
    if (opt.steps < 3) throw usage("--steps must be at least 3, got " + std::to_string(opt.steps));
    if (opt.norm != 1 && opt.norm != 2) throw usage("--norm must be 1 or 2");
    if (opt.aids && opt.norm != 2) throw usage("--aids requires the spectral norm (--norm 2)");

    PreparedInput input = prepare_input(opt.in);
    TargetSpec target = parse_target(opt.est.target, opt.in);
    const PenaltyGrid grid(opt.lmin, opt.lmax, opt.steps);
    PathOptions po;
    po.norm = opt.norm == 2 ? ConditionNorm::Spectral : ConditionNorm::One;
    po.threads = opt.threads;
    ConditionPath path = condition_path(input.matrix, kind, target, grid, po);

    path.digits_lost.clear();
    for (double c : path.cond) path.digits_lost.push_back(digits_lost(c));
    if (po.norm == ConditionNorm::Spectral) {
        path.acceleration = acceleration(path);
        path.knee = find_knee(path, opt.knee_tol, opt.knee_window.value_or(default_knee_window(opt.steps)));
    }
    return {std::move(input), kind, std::move(target), std::move(path)};
}

inline void fill_common_parameters(RunManifest& m, const CnplotOptions& opt)
{
    m.parameters["input"] = opt.in.input;
    m.parameters["as_matrix"] = opt.in.as_matrix ? "true" : "false";
    m.parameters["cor"] = opt.in.cor ? "true" : "false";
    m.parameters["type"] = opt.est.type;
    m.parameters["target"] = opt.est.target;
    m.parameters["lmin"] = format_double(opt.lmin);
    m.parameters["lmax"] = format_double(opt.lmax);
    m.parameters["steps"] = std::to_string(opt.steps);
    m.parameters["norm"] = std::to_string(opt.norm);
    m.parameters["aids"] = opt.aids ? "true" : "false";
    m.parameters["knee_tol"] = format_double(opt.knee_tol);
    m.parameters["knee_window"] = std::to_string(opt.knee_window.value_or(default_knee_window(opt.steps)));
}

// ---------------------------------------------------------------------------
// Commands

inline RunManifest run_cnplot(const CnplotOptions& opt, std::vector<std::string> args = {})
{
    PathRun run = compute_path(opt);
    ensure_dir(opt.out);

    PlotConfig pc;
    pc.title = opt.title;
    pc.width = opt.width;
    pc.height = opt.height;
    pc.show_aids = opt.aids;
    pc.y_clip = opt.y_clip;
    for (double l : opt.marks) pc.vertical_marks.push_back({l, kMarkColor, "mark"});

    write_text(join_path(opt.out, "path.csv"), path_csv(run.path));
    write_text(join_path(opt.out, "plot.svg"), render_condition_plot(run.path, pc));

    RunManifest m;
    m.command = "cnplot";
    m.args = std::move(args);
    m.input = opt.in.input;
    m.input_sha256 = run.input.digest;
    m.timestamp = utc_timestamp();
    fill_common_parameters(m, opt);
    m.parameters["fast_path"] = run.path.fast_path ? "true" : "false";
    m.outputs = {"path.csv", "plot.svg", "manifest.json"};
    write_manifest(join_path(opt.out, "manifest.json"), m);
    return m;
}

inline RunManifest run_select(const SelectOptions& opt, std::vector<std::string> args = {})
{
    if (opt.plot.in.as_matrix) throw usage("select needs a dataset (rows = observations), not --as-matrix");
    PathRun run = compute_path(opt.plot);
    if (run.path.norm != ConditionNorm::Spectral) throw usage("select uses the spectral condition path (--norm 2)");

    double lambda_lo = 0.0;
    std::string lo_source;
    if (opt.lmin_override) {
        lambda_lo = *opt.lmin_override;
        lo_source = "override";
        check_domain(run.kind, lambda_lo, opt.plot.lmax);
    } else if (run.path.knee) {
        lambda_lo = run.path.knee->lambda;
        lo_source = "knee";
    } else {
        throw Error(ErrorKind::InvalidInput,
                    "no point of relative stabilization in [" + format_double(opt.plot.lmin) + ", " +
                        format_double(opt.plot.lmax) +
                        "]; widen the penalty domain, relax --knee-tol, or pass --lmin-override");
    }

    CVConfig cfg;
    cfg.folds = opt.folds;
    cfg.lambda_lo = lambda_lo;
    cfg.lambda_hi = opt.plot.lmax;
    cfg.estimator = run.kind;
    cfg.target = run.target;
    cfg.use_correlation = opt.plot.in.cor;
    cfg.unbiased = opt.unbiased;
    cfg.tol = opt.tol;
    cfg.max_iter = opt.max_iter;
    if (opt.folds > 0 && opt.shuffle) cfg.shuffle_seed = opt.seed;
    const CVResult res = select_penalty(*run.input.data, cfg);

    const SymMatrix t = run.kind == EstimatorKind::ArchII ? SymMatrix::identity(run.input.matrix.dim())
                                                         : target_matrix(run.target, run.input.matrix);
    const double cond_lo = spectral_condition(ridge_estimate(run.kind, run.input.matrix, t, lambda_lo));
    const double cond_opt = spectral_condition(ridge_estimate(run.kind, run.input.matrix, t, res.lambda_opt));

    nlohmann::ordered_json j;
    j["estimator"] = to_string(run.kind);
    j["target"] = opt.plot.est.target;
    j["correlation"] = opt.plot.in.cor;
    j["folds"] = opt.folds == 0 ? std::string("loo") : std::to_string(opt.folds);
    j["lambda_min"] = opt.plot.lmin;
    j["lambda_max"] = opt.plot.lmax;
    j["steps"] = opt.plot.steps;
    j["lambda_lo_source"] = lo_source;
    if (run.path.knee) {
        j["knee_lambda"] = run.path.knee->lambda;
        j["knee_index"] = run.path.knee->index;
    } else {
        j["knee_lambda"] = nullptr;
        j["knee_index"] = nullptr;
    }
    j["lambda_lo"] = lambda_lo;
    j["lambda_hi"] = opt.plot.lmax;
    j["cond_at_lambda_lo"] = cond_lo;
    j["lambda_opt"] = res.lambda_opt;
    j["cond_at_lambda_opt"] = cond_opt;
    j["digits_lost_at_lambda_opt"] = digits_lost(cond_opt);
    j["cv_score"] = res.score_opt;
    j["evaluations"] = res.evaluations;
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (const auto& [l, sc] : res.bracket_history) hist.push_back({l, sc});
    j["history"] = hist;

    ensure_dir(opt.plot.out);
    write_text(join_path(opt.plot.out, "selection.json"), j.dump(2) + "\n");
    write_text(join_path(opt.plot.out, "path.csv"), path_csv(run.path));

    PlotConfig pc;
    pc.title = opt.plot.title;
    pc.width = opt.plot.width;
    pc.height = opt.plot.height;
    pc.show_aids = opt.plot.aids;
    pc.y_clip = opt.plot.y_clip;
    for (double l : opt.plot.marks) pc.vertical_marks.push_back({l, kMarkColor, "mark"});
    if (lo_source == "override") pc.vertical_marks.push_back({lambda_lo, kKneeColor, "lambda_lo"});
    pc.vertical_marks.push_back({res.lambda_opt, kSelectedColor, "lambda_opt"});
    write_text(join_path(opt.plot.out, "plot.svg"), render_condition_plot(run.path, pc));

    RunManifest m;
    m.command = "select";
    m.args = std::move(args);
    m.input = opt.plot.in.input;
    m.input_sha256 = run.input.digest;
    m.timestamp = utc_timestamp();
    fill_common_parameters(m, opt.plot);
    m.parameters["folds"] = opt.folds == 0 ? "loo" : std::to_string(opt.folds);
    m.parameters["shuffle"] = opt.shuffle ? "true" : "false";
    m.parameters["seed"] = std::to_string(opt.seed);
    m.parameters["unbiased"] = opt.unbiased ? "true" : "false";
    m.parameters["tol"] = format_double(opt.tol);
    m.parameters["max_iter"] = std::to_string(opt.max_iter);
    if (opt.lmin_override) m.parameters["lmin_override"] = format_double(*opt.lmin_override);
    m.outputs = {"selection.json", "path.csv", "plot.svg", "manifest.json"};
    write_manifest(join_path(opt.plot.out, "manifest.json"), m);
    return m;
}

inline RunManifest run_estimate(const EstimateOptions& opt, std::vector<std::string> args = {})
{
    const EstimatorKind kind = parse_estimator(opt.est.type);
    try {
        check_penalty(kind, opt.lambda);
    } catch (const Error& e) {
        throw usage(e.what());
    }
    PreparedInput input = prepare_input(opt.in);
    const TargetSpec spec = parse_target(opt.est.target, opt.in);
    SymMatrix t = SymMatrix::identity(input.matrix.dim());
    if (kind != EstimatorKind::ArchII) {
        t = target_matrix(spec, input.matrix, kind == EstimatorKind::ArchI);
        check_target(kind, spec, t);
    }
    const SymMatrix est = ridge_estimate(kind, input.matrix, t, opt.lambda);
    const SymMatrix prec = precision_of(est);

    ensure_dir(opt.out);
    write_csv(join_path(opt.out, "estimate.csv"), input.names, est.matrix());
    write_csv(join_path(opt.out, "precision.csv"), input.names, prec.matrix());

    RunManifest m;
    m.command = "estimate";
    m.args = std::move(args);
    m.input = opt.in.input;
    m.input_sha256 = input.digest;
    m.timestamp = utc_timestamp();
    m.parameters["type"] = opt.est.type;
    m.parameters["target"] = opt.est.target;
    m.parameters["lambda"] = format_double(opt.lambda);
    m.parameters["as_matrix"] = opt.in.as_matrix ? "true" : "false";
    m.parameters["cor"] = opt.in.cor ? "true" : "false";
    m.outputs = {"estimate.csv", "precision.csv", "manifest.json"};
    write_manifest(join_path(opt.out, "manifest.json"), m);
    return m;
}

// ---------------------------------------------------------------------------
// Benchmark

/// Correlation matrix of an n x p standard normal sample.
inline SymMatrix synthetic_correlation(int n, int p, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Matrix y(n, p);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) y(i, j) = z(rng);
    }
    return to_correlation(cov_ml(y));
}

inline double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

/// Median wall time of one condition path computation per (estimator,
/// equivariance, p, S) cell. The non-equivariant target is the average
/// eigenvalue target with its first diagonal entry set to 2.
inline std::vector<BenchRow> run_bench_cells(const BenchOptions& opt)
{
    if (opt.reps < 1) throw usage("--reps must be >= 1");
    if (opt.n < 2) throw usage("--n must be >= 2");
    std::vector<BenchRow> rows;
    for (const std::string& name : opt.estimators) {
        const EstimatorKind kind = parse_estimator(name);
        for (bool equivariant : {true, false}) {
            if (kind == EstimatorKind::ArchII && !equivariant) continue;
            for (int p : opt.p_values) {
                if (p < 1) throw usage("--p values must be >= 1");
                const SymMatrix s = synthetic_correlation(opt.n, p, opt.seed);
                Matrix t = target_matrix(TargetSpec::average_eigenvalue(), s).matrix();
                if (!equivariant) t(0, 0) = 2.0;
                const SymMatrix target(t);
                for (int steps : opt.s_values) {
                    const PenaltyGrid grid(1e-5, kind == EstimatorKind::ArchI ? 1.0 : 20.0, steps);
                    PathOptions po;
                    po.threads = opt.threads;
                    std::vector<double> times;
                    for (int r = 0; r < opt.reps; ++r) {
                        const auto t0 = std::chrono::steady_clock::now();
                        const ConditionPath path = condition_path(s, kind, target, grid, po);
                        const auto t1 = std::chrono::steady_clock::now();
                        if (path.fast_path != equivariant) {
                            throw Error(ErrorKind::NumericalFailure, "benchmark took the wrong path");
                        }
                        times.push_back(std::chrono::duration<double>(t1 - t0).count());
                    }
                    rows.push_back({to_string(kind), equivariant, p, steps, median(times), opt.reps});
                }
            }
        }
    }
    return rows;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows)
{
    std::ostringstream o;
    o << "estimator,equivariant,p,S,median_seconds,reps\n";
    for (const auto& r : rows) {
        o << r.estimator << ',' << (r.equivariant ? "true" : "false") << ',' << r.p << ',' << r.steps << ','
          << format_double(r.median_seconds) << ',' << r.reps << '\n';
    }
    return o.str();
}

inline RunManifest run_bench(const BenchOptions& opt, std::vector<std::string> args = {})
{
    const auto rows = run_bench_cells(opt);
    ensure_dir(opt.out);
    write_text(join_path(opt.out, "bench.csv"), bench_csv(rows));

    auto join = [](const auto& v) {
        std::string s;
        for (const auto& x : v) {
            if (!s.empty()) s += ',';
            if constexpr (std::is_same_v<std::decay_t<decltype(x)>, std::string>) s += x;
            else s += std::to_string(x);
        }
        return s;
    };
    RunManifest m;
    m.command = "bench";
    m.args = std::move(args);
    m.timestamp = utc_timestamp();
    m.parameters["p"] = join(opt.p_values);
    m.parameters["S"] = join(opt.s_values);
    m.parameters["estimators"] = join(opt.estimators);
    m.parameters["reps"] = std::to_string(opt.reps);
    m.parameters["n"] = std::to_string(opt.n);
    m.parameters["seed"] = std::to_string(opt.seed);
    m.parameters["threads"] = std::to_string(opt.threads);
    m.outputs = {"bench.csv", "manifest.json"};
    write_manifest(join_path(opt.out, "manifest.json"), m);
    return m;
}

} // namespace ridgecond::cli
