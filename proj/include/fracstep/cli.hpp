#pragma once

// Command-line front end. Subcommands:
//   solve        one scheme run; writes solution.csv and run.json
//   reference    build or refresh the cached reference solution
//   convergence  sweep sigma x N; writes results.csv and run.json
//   oracle-check small-mesh invariant suite; nonzero exit on any violation
//   spectrum     dump the generalized eigenvalues as CSV
//
// Options may come from a JSON config file (--config); explicit flags win
// over file values. Exit codes: 0 success, 1 invariant violation or runtime
// failure, 2 configuration error.

#include <CLI11.hpp>

#include "fracstep/checks.hpp"
#include "fracstep/harness.hpp"

namespace fracstep {

namespace cli_detail {

struct RawOptions {
    std::string config;
    std::optional<int> n;
    std::optional<double> alpha;
    std::optional<double> delta;
    std::optional<std::string> preset;
    std::optional<std::string> scheme;
    std::optional<std::string> sigma;     // number or "opt"; comma list for sweeps
    std::optional<std::string> steps;     // number; comma list for sweeps
    std::optional<int> m;
    std::optional<std::string> init;
    std::optional<int> nref;
    std::optional<double> cg_tol;
    std::optional<std::string> out;
    std::optional<std::string> cache;
    bool dump_mesh = false;
};

inline void add_common_flags(CLI::App* cmd, RawOptions& raw, bool lists) {
    cmd->add_option("--config", raw.config, "JSON config file; flags override its values");
    cmd->add_option("--n", raw.n, "grid intervals per side");
    cmd->add_option("--alpha", raw.alpha, "fractional power, in (0,1)");
    cmd->add_option("--delta", raw.delta, "coercivity bound; default 0.99 * lambda_1");
    cmd->add_option("--preset", raw.preset, "paper5 | constant_c | coefficient JSON file");
    cmd->add_option("--scheme", raw.scheme, "two | three");
    cmd->add_option("--sigma", raw.sigma,
                    lists ? "weights, comma list of numbers or 'opt'"
                          : "weight, a number or 'opt'");
    cmd->add_option("--N", raw.steps,
                    lists ? "pseudo-time step counts, comma list" : "pseudo-time steps");
    cmd->add_option("--init", raw.init, "w_1 initializer: sym | euler | corrected | fine");
    cmd->add_option("--m", raw.m, "fine-grid factor; 0 = use N");
    cmd->add_option("--nref", raw.nref, "reference solution step count");
    cmd->add_option("--cg-tol", raw.cg_tol, "CG relative residual tolerance");
    cmd->add_option("--out", raw.out, "output directory");
    cmd->add_option("--cache", raw.cache, "reference cache directory");
}

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    return parts;
}

inline double parse_number(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse " + what + ": '" + s + "'");
    }
}

inline int parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("cannot parse " + what + ": '" + s + "'");
    }
}

inline std::optional<double> parse_sigma(const std::string& s) {
    if (s == "opt") return std::nullopt;
    return parse_number(s, "sigma");
}

inline SchemeKind parse_scheme(const std::string& s) {
    if (s == "two") return SchemeKind::TwoLevel;
    if (s == "three") return SchemeKind::ThreeLevel;
    throw ConfigError("scheme must be 'two' or 'three', got '" + s + "'");
}

inline InitKind parse_init(const std::string& s) {
    if (s == "sym") return InitKind::Symmetric;
    if (s == "euler") return InitKind::ExplicitEuler;
    if (s == "corrected") return InitKind::CorrectedExplicit;
    if (s == "fine") return InitKind::FineGrid;
    throw ConfigError("init must be sym | euler | corrected | fine, got '" + s + "'");
}

struct ResolvedConfig {
    RunConfig run;
    std::vector<int> n_list{16, 32, 64, 128};
    std::vector<std::optional<double>> sigma_list{0.5};
};

inline ResolvedConfig resolve_config(const RawOptions& raw) {
    ResolvedConfig rc;
    RunConfig& cfg = rc.run;

    if (!raw.config.empty()) {
        std::ifstream in(raw.config);
        if (!in) throw ConfigError("cannot open config file " + raw.config);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("cannot parse config file " + raw.config + ": " + e.what());
        }
        static const std::vector<std::string> known{
            "n", "alpha", "delta", "preset", "scheme", "sigma",  "N",
            "init", "m", "nref", "cg_tol", "out", "cache", "N_list", "sigma_list"};
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (std::find(known.begin(), known.end(), key) == known.end())
                throw ConfigError("unknown config key '" + key + "' in " + raw.config);
        }
        if (j.contains("n")) cfg.n = j["n"].get<int>();
        if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
        if (j.contains("delta") && !j["delta"].is_null()) cfg.delta = j["delta"].get<double>();
        if (j.contains("preset")) cfg.preset = j["preset"].get<std::string>();
        if (j.contains("scheme")) cfg.scheme = parse_scheme(j["scheme"].get<std::string>());
        if (j.contains("sigma")) {
            if (j["sigma"].is_string())
                cfg.sigma = parse_sigma(j["sigma"].get<std::string>());
            else
                cfg.sigma = j["sigma"].get<double>();
        }
        if (j.contains("N")) cfg.steps = j["N"].get<int>();
        if (j.contains("init")) cfg.init = parse_init(j["init"].get<std::string>());
        if (j.contains("m")) cfg.fine_grid_factor = j["m"].get<int>();
        if (j.contains("nref")) cfg.n_ref = j["nref"].get<int>();
        if (j.contains("cg_tol")) cfg.cg_tol = j["cg_tol"].get<double>();
        if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
        if (j.contains("cache")) cfg.cache_dir = j["cache"].get<std::string>();
        if (j.contains("N_list")) {
            rc.n_list.clear();
            for (const auto& v : j["N_list"]) rc.n_list.push_back(v.get<int>());
        }
        if (j.contains("sigma_list")) {
            rc.sigma_list.clear();
            for (const auto& v : j["sigma_list"]) {
                if (v.is_string())
                    rc.sigma_list.push_back(parse_sigma(v.get<std::string>()));
                else
                    rc.sigma_list.push_back(v.get<double>());
            }
        }
    }

    if (raw.n) cfg.n = *raw.n;
    if (raw.alpha) cfg.alpha = *raw.alpha;
    if (raw.delta) cfg.delta = *raw.delta;
    if (raw.preset) cfg.preset = *raw.preset;
    if (raw.scheme) cfg.scheme = parse_scheme(*raw.scheme);
    if (raw.sigma) {
        const auto parts = split_csv(*raw.sigma);
        cfg.sigma = parse_sigma(parts.front());
        rc.sigma_list.clear();
        for (const auto& s : parts) rc.sigma_list.push_back(parse_sigma(s));
    }
    if (raw.steps) {
        const auto parts = split_csv(*raw.steps);
        cfg.steps = parse_int(parts.front(), "N");
        rc.n_list.clear();
        for (const auto& s : parts) rc.n_list.push_back(parse_int(s, "N"));
    }
    if (raw.init) cfg.init = parse_init(*raw.init);
    if (raw.m) cfg.fine_grid_factor = *raw.m;
    if (raw.nref) cfg.n_ref = *raw.nref;
    if (raw.cg_tol) cfg.cg_tol = *raw.cg_tol;
    if (raw.out) cfg.out_dir = *raw.out;
    if (raw.cache) cfg.cache_dir = *raw.cache;

    if (cfg.steps < 1) throw ConfigError("N must be >= 1");
    if (cfg.n_ref < 1) throw ConfigError("nref must be >= 1");
    if (!(cfg.cg_tol > 0.0)) throw ConfigError("cg-tol must be positive");
    if (cfg.fine_grid_factor < 0) throw ConfigError("m must be >= 0");
    for (int n_steps : rc.n_list)
        if (n_steps < 1) throw ConfigError("every swept N must be >= 1");
    return rc;
}

inline nlohmann::json config_metadata(const RunConfig& cfg) {
    nlohmann::json j;
    j["n"] = cfg.n;
    j["alpha"] = cfg.alpha;
    j["preset"] = cfg.preset;
    j["scheme"] = scheme_name(cfg.scheme);
    j["sigma_requested"] = cfg.sigma ? nlohmann::json(*cfg.sigma) : nlohmann::json("opt");
    j["sigma"] = resolve_sigma(cfg);
    j["N"] = cfg.steps;
    j["init"] = init_name(cfg.init);
    j["m"] = cfg.fine_grid_factor;
    j["nref"] = cfg.n_ref;
    j["cg_tol"] = cfg.cg_tol;
    j["out"] = cfg.out_dir;
    j["cache"] = cfg.cache_dir;
    return j;
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

inline int cmd_solve(const ResolvedConfig& rc, const RawOptions& raw, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const RunConfig& cfg = rc.run;
    std::filesystem::create_directories(cfg.out_dir);
    BuiltProblem bp = build_problem(cfg);

    SchemeConfig sc;
    sc.scheme = cfg.scheme;
    sc.sigma = resolve_sigma(cfg);
    sc.steps = cfg.steps;
    sc.init = cfg.init;
    sc.fine_grid_factor = resolve_fine_grid_factor(cfg, cfg.steps);
    const EvolutionTrace trace = run_scheme(bp.problem, sc);

    const std::filesystem::path out_dir(cfg.out_dir);
    write_solution_csv(bp.mesh, trace.w_final, (out_dir / "solution.csv").string());
    if (raw.dump_mesh) {
        write_vertices_csv(bp.mesh, (out_dir / "vertices.csv").string());
        write_triangles_csv(bp.mesh, (out_dir / "triangles.csv").string());
    }

    nlohmann::json meta;
    meta["command"] = "solve";
    meta["config"] = config_metadata(cfg);
    meta["config"]["delta"] = bp.problem.delta;
    meta["config"]["lambda1"] = bp.problem.lambda1_estimate;
    meta["final_m_norm"] = trace.l2_norms.back();
    meta["cg_iterations"] = trace.cg_iterations;
    meta["runtime_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    meta["outputs"] = {(out_dir / "solution.csv").string()};
    write_json(meta, out_dir / "run.json");

    out << "solution written to " << (out_dir / "solution.csv").string()
        << " (lambda1 ~ " << bp.problem.lambda1_estimate << ", delta = "
        << bp.problem.delta << ")\n";
    return 0;
}

inline int cmd_reference(const ResolvedConfig& rc, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const RunConfig& cfg = rc.run;
    std::filesystem::create_directories(cfg.out_dir);
    BuiltProblem bp = build_problem(cfg);
    long cg_iterations = 0;
    bool was_cached = false;
    compute_reference(cfg, bp, &cg_iterations, &was_cached);
    const ReferenceKey key = reference_key(cfg, bp);
    const std::filesystem::path data_path =
        std::filesystem::path(cfg.cache_dir) / ("ref-" + key.hash() + ".f64");

    nlohmann::json meta;
    meta["command"] = "reference";
    meta["config"] = config_metadata(cfg);
    meta["config"]["delta"] = bp.problem.delta;
    meta["config"]["lambda1"] = bp.problem.lambda1_estimate;
    meta["cache_file"] = data_path.string();
    meta["was_cached"] = was_cached;
    meta["cg_iterations"] = cg_iterations;
    meta["runtime_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(meta, std::filesystem::path(cfg.out_dir) / "run.json");

    out << (was_cached ? "reference already cached: " : "reference computed: ")
        << data_path.string() << "\n";
    return 0;
}

inline int cmd_convergence(const ResolvedConfig& rc, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const RunConfig& cfg = rc.run;
    std::filesystem::create_directories(cfg.out_dir);
    const std::vector<ErrorReport> table = convergence_sweep(cfg, rc.n_list, rc.sigma_list);
    const std::filesystem::path csv_path =
        std::filesystem::path(cfg.out_dir) / "results.csv";
    {
        std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
        csv << results_csv(table);
        if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
    }

    long cg_total = 0;
    for (const auto& r : table) cg_total += r.cg_iterations;
    nlohmann::json meta;
    meta["command"] = "convergence";
    meta["config"] = config_metadata(cfg);
    nlohmann::json n_json = nlohmann::json::array();
    for (int n_steps : rc.n_list) n_json.push_back(n_steps);
    nlohmann::json s_json = nlohmann::json::array();
    for (const auto& s : rc.sigma_list)
        s_json.push_back(s ? nlohmann::json(*s) : nlohmann::json("opt"));
    meta["N_list"] = n_json;
    meta["sigma_list"] = s_json;
    if (!table.empty()) {
        meta["config"]["delta"] = table.front().delta;
        meta["config"]["lambda1"] = table.front().lambda1;
    }
    meta["rows"] = table.size();
    meta["cg_iterations"] = cg_total;
    meta["runtime_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    meta["outputs"] = {csv_path.string()};
    write_json(meta, std::filesystem::path(cfg.out_dir) / "run.json");

    out << "results written to " << csv_path.string() << " (" << table.size()
        << " rows)\n";
    return 0;
}

inline int cmd_oracle_check(const ResolvedConfig& rc, std::ostream& out) {
    const std::vector<CheckResult> results = run_oracle_checks(rc.run);
    int failures = 0;
    for (const auto& r : results) {
        out << (r.pass ? "[ ok ] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
        if (!r.pass) ++failures;
    }
    out << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed")
        << " (" << results.size() << " total)\n";
    return failures == 0 ? 0 : 1;
}

inline int cmd_spectrum(const ResolvedConfig& rc, std::ostream& out) {
    const RunConfig& cfg = rc.run;
    std::filesystem::create_directories(cfg.out_dir);
    BuiltProblem bp = build_problem(cfg);
    const EigenDecomposition eig =
        dense_generalized_eig(bp.problem.stiffness, bp.problem.mass);
    const std::filesystem::path csv_path =
        std::filesystem::path(cfg.out_dir) / "spectrum.csv";
    write_spectrum_csv(eig, csv_path.string());
    out << "spectrum written to " << csv_path.string() << " (lambda_1 = "
        << eig.lambdas.front() << ", lambda_max = " << eig.lambdas.back() << ")\n";
    return 0;
}

}   // namespace cli_detail

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name.
inline int cli_main(std::vector<std::string> args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    using namespace cli_detail;
    CLI::App app{"fractional-power elliptic solver via pseudo-time stepping"};
    app.require_subcommand(1);

    RawOptions raw;
    CLI::App* solve = app.add_subcommand("solve", "run one scheme, write the solution");
    add_common_flags(solve, raw, false);
    solve->add_flag("--dump-mesh", raw.dump_mesh, "also write vertices.csv/triangles.csv");
    CLI::App* reference =
        app.add_subcommand("reference", "build or refresh the cached reference solution");
    add_common_flags(reference, raw, false);
    CLI::App* convergence =
        app.add_subcommand("convergence", "sweep sigma x N and tabulate errors");
    add_common_flags(convergence, raw, true);
    CLI::App* oracle_check =
        app.add_subcommand("oracle-check", "run the small-mesh invariant suite");
    add_common_flags(oracle_check, raw, false);
    CLI::App* spectrum = app.add_subcommand("spectrum", "dump generalized eigenvalues");
    add_common_flags(spectrum, raw, false);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        const ResolvedConfig rc = resolve_config(raw);
        if (solve->parsed()) return cmd_solve(rc, raw, out);
        if (reference->parsed()) return cmd_reference(rc, out);
        if (convergence->parsed()) return cmd_convergence(rc, out);
        if (oracle_check->parsed()) return cmd_oracle_check(rc, out);
        if (spectrum->parsed()) return cmd_spectrum(rc, out);
        err << "config error: no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}   // namespace fracstep
