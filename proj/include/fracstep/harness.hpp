#pragma once

// Experiment orchestration: coefficient presets, problem construction with
// the default coercivity-bound rule, the cached reference solution, relative
// L2/H1 error reports, convergence sweeps with observed orders, and the
// invariant checks shared by the `oracle-check` command and the acceptance
// suite.
//
// Everything is seed-free and deterministic: identical configurations produce
// byte-identical CSV output.

#include <bit>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fracstep/assembly.hpp"
#include "fracstep/cauchy.hpp"
#include "fracstep/mesh.hpp"
#include "fracstep/oracle.hpp"

namespace fracstep {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Coefficient presets.
//
// paper5:     k = 1, c = 100 inside the quarter circle x1^2 + x2^2 <= 0.25
//             and 1 outside, mu = 0, f = 1.
// constant_c: k = 1, c = 1, mu = 0, f = 1 (lambda_1 = 1 with a constant
//             eigenvector; handy for exact checks).
// <path>.json: piecewise-constant family
//   {"k": 1.0, "c": {"inside": 100.0, "outside": 1.0,
//                    "circle": {"cx": 0.0, "cy": 0.0, "r": 0.5}},
//    "mu": 0.0, "f": 1.0}
//   "c" may also be a plain number.

inline CoefficientField make_coefficients(const std::string& preset) {
    auto constant = [](double v) {
        return [v](double, double) { return v; };
    };
    if (preset == "paper5") {
        return {constant(1.0),
                [](double x1, double x2) { return x1 * x1 + x2 * x2 <= 0.25 ? 100.0 : 1.0; },
                constant(0.0), constant(1.0)};
    }
    if (preset == "constant_c")
        return {constant(1.0), constant(1.0), constant(0.0), constant(1.0)};

    std::ifstream in(preset);
    if (!in) throw ConfigError("unknown preset or unreadable file: " + preset);
    nlohmann::json coeff_json;
    try {
        in >> coeff_json;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse coefficient file " + preset + ": " + e.what());
    }
    ScalarField c;
    if (coeff_json.contains("c") && coeff_json["c"].is_object()) {
        const auto& cj = coeff_json["c"];
        const double inside = cj.value("inside", 1.0);
        const double outside = cj.value("outside", 1.0);
        const auto circle = cj.value("circle", nlohmann::json::object());
        const double cx = circle.value("cx", 0.0);
        const double cy = circle.value("cy", 0.0);
        const double r = circle.value("r", 0.5);
        c = [=](double x1, double x2) {
            const double dx = x1 - cx, dy = x2 - cy;
            return dx * dx + dy * dy <= r * r ? inside : outside;
        };
    } else {
        c = constant(coeff_json.value("c", 1.0));
    }
    return {constant(coeff_json.value("k", 1.0)), c, constant(coeff_json.value("mu", 0.0)),
            constant(coeff_json.value("f", 1.0))};
}

inline std::uint64_t fnv1a(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Stable identifier for a preset: the name for built-ins, name plus content
/// hash for coefficient files.
inline std::string preset_fingerprint(const std::string& preset) {
    if (preset == "paper5" || preset == "constant_c") return preset;
    std::ifstream in(preset, std::ios::binary);
    if (!in) throw ConfigError("unknown preset or unreadable file: " + preset);
    std::ostringstream content;
    content << in.rdbuf();
    const std::string text = content.str();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(text.data(), text.size())));
    return std::filesystem::path(preset).filename().string() + "-" + buf;
}

// ---------------------------------------------------------------------------

struct RunConfig {
    int n = 50;
    double alpha = 0.5;
    std::optional<double> delta;       // default rule: 0.99 * estimated lambda_1
    std::string preset = "paper5";
    SchemeKind scheme = SchemeKind::TwoLevel;
    std::optional<double> sigma;       // nullopt = optimal weight sigma_opt(alpha)
    int steps = 100;                   // N
    InitKind init = InitKind::Symmetric;
    int fine_grid_factor = 0;          // m; 0 = use N (FineGrid only)
    int n_ref = 5000;
    double cg_tol = 1e-10;
    std::string out_dir = ".";
    std::string cache_dir = "cache";
};

inline double resolve_sigma(const RunConfig& cfg) {
    return cfg.sigma ? *cfg.sigma : sigma_opt(cfg.alpha);
}

inline int resolve_fine_grid_factor(const RunConfig& cfg, int steps) {
    return cfg.fine_grid_factor > 0 ? cfg.fine_grid_factor : steps;
}

inline const char* scheme_name(SchemeKind s) {
    return s == SchemeKind::TwoLevel ? "two" : "three";
}

inline const char* init_name(InitKind k) {
    switch (k) {
        case InitKind::Symmetric: return "sym";
        case InitKind::ExplicitEuler: return "euler";
        case InitKind::CorrectedExplicit: return "corrected";
        case InitKind::FineGrid: return "fine";
    }
    return "?";
}

struct BuiltProblem {
    Mesh mesh;
    SparseMatrix seminorm;    // G
    SparseMatrix h1_matrix;   // M + G, the discrete H1 norm matrix
    CauchyProblem problem;
};

/// mesh -> assembly -> lambda_1 estimate -> delta rule -> CauchyProblem.
inline BuiltProblem build_problem(const RunConfig& cfg) {
    if (cfg.n < 1) throw ConfigError("grid parameter n must be >= 1");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw ConfigError("alpha must lie in (0,1)");
    BuiltProblem bp;
    bp.mesh = build_uniform_mesh(cfg.n);
    const CoefficientField coeffs = make_coefficients(cfg.preset);
    AssembledSystem sys = assemble_system(bp.mesh, coeffs);
    const double lambda1 = estimate_lambda_min(sys.stiffness, sys.mass, 1e-8);
    const double delta = cfg.delta ? *cfg.delta : 0.99 * lambda1;
    if (!(delta > 0.0) || delta >= lambda1)
        throw ConfigError("delta = " + std::to_string(delta) +
                          " must satisfy 0 < delta < lambda_1 ~ " + std::to_string(lambda1));
    bp.seminorm = std::move(sys.seminorm);
    bp.h1_matrix = linear_combine(sys.mass, 1.0, bp.seminorm, 1.0);
    bp.problem = make_cauchy_problem(std::move(sys.stiffness), std::move(sys.mass),
                                     cfg.alpha, delta, std::move(sys.psi), lambda1,
                                     cfg.cg_tol);
    return bp;
}

// ---------------------------------------------------------------------------
// Reference solution cache.
//
// Layout: <cache_dir>/ref-<keyhash>.f64 holds the raw little-endian doubles,
// <cache_dir>/ref-<keyhash>.json the sidecar with the full key, dimension and
// content checksum. Writers create temporary files and rename them into
// place, so concurrent producers of the same key are safe. A sidecar whose
// key, dimension or checksum does not match triggers a recompute.

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "reference cache assumes a little-endian host");

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}   // namespace detail

struct ReferenceKey {
    std::string preset;
    int n = 0;
    double alpha = 0.0;
    double delta = 0.0;
    int n_ref = 0;
    double cg_tol = 0.0;

    std::string canonical() const {
        return "preset=" + preset + ";n=" + std::to_string(n) +
               ";alpha=" + detail::format_double(alpha) +
               ";delta=" + detail::format_double(delta) +
               ";nref=" + std::to_string(n_ref) +
               ";cgtol=" + detail::format_double(cg_tol);
    }
    std::string hash() const {
        const std::string c = canonical();
        return detail::hex64(fnv1a(c.data(), c.size()));
    }
};

inline ReferenceKey reference_key(const RunConfig& cfg, const BuiltProblem& bp) {
    return {preset_fingerprint(cfg.preset), cfg.n, cfg.alpha, bp.problem.delta,
            cfg.n_ref, cfg.cg_tol};
}

namespace detail {

inline std::optional<Vector> try_load_reference(const ReferenceKey& key,
                                                const std::filesystem::path& data_path,
                                                const std::filesystem::path& meta_path) {
    std::ifstream meta(meta_path);
    if (!meta) return std::nullopt;
    nlohmann::json side;
    try {
        meta >> side;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
    if (side.value("key", "") != key.canonical()) return std::nullopt;
    const auto dim = side.value("dimension", -1);
    std::ifstream data(data_path, std::ios::binary);
    if (!data) return std::nullopt;
    std::vector<char> bytes((std::istreambuf_iterator<char>(data)),
                            std::istreambuf_iterator<char>());
    if (dim < 0 || bytes.size() != static_cast<std::size_t>(dim) * sizeof(double))
        return std::nullopt;
    if (side.value("checksum", "") != hex64(fnv1a(bytes.data(), bytes.size())))
        return std::nullopt;
    Vector v(dim);
    std::memcpy(v.data(), bytes.data(), bytes.size());
    return v;
}

inline void store_reference(const ReferenceKey& key, const Vector& v,
                            const std::filesystem::path& data_path,
                            const std::filesystem::path& meta_path) {
    namespace fs = std::filesystem;
    fs::create_directories(data_path.parent_path());
    const fs::path data_tmp = data_path.string() + ".tmp";
    const fs::path meta_tmp = meta_path.string() + ".tmp";
    {
        std::ofstream data(data_tmp, std::ios::binary | std::ios::trunc);
        data.write(reinterpret_cast<const char*>(v.data()),
                   static_cast<std::streamsize>(v.size() * sizeof(double)));
        if (!data) throw std::runtime_error("cannot write " + data_tmp.string());
    }
    nlohmann::json side;
    side["key"] = key.canonical();
    side["preset"] = key.preset;
    side["n"] = key.n;
    side["alpha"] = key.alpha;
    side["delta"] = key.delta;
    side["n_ref"] = key.n_ref;
    side["cg_tol"] = key.cg_tol;
    side["dimension"] = static_cast<int>(v.size());
    side["checksum"] = hex64(fnv1a(v.data(), v.size() * sizeof(double)));
    side["format"] = "float64-le";
    {
        std::ofstream meta(meta_tmp, std::ios::trunc);
        meta << side.dump(2) << "\n";
        if (!meta) throw std::runtime_error("cannot write " + meta_tmp.string());
    }
    fs::rename(data_tmp, data_path);
    fs::rename(meta_tmp, meta_path);
}

}   // namespace detail

/// Reference solution per the model-problem protocol: symmetric two-level
/// scheme, sigma = 0.5, N = n_ref steps. Cached on disk keyed by
/// (preset, n, alpha, delta, n_ref, cg_tol).
inline Vector compute_reference(const RunConfig& cfg, const BuiltProblem& bp,
                                long* cg_iterations = nullptr, bool* was_cached = nullptr) {
    const ReferenceKey key = reference_key(cfg, bp);
    const std::filesystem::path dir(cfg.cache_dir);
    const std::filesystem::path data_path = dir / ("ref-" + key.hash() + ".f64");
    const std::filesystem::path meta_path = dir / ("ref-" + key.hash() + ".json");

    if (auto cached = detail::try_load_reference(key, data_path, meta_path)) {
        if (was_cached) *was_cached = true;
        return *cached;
    }
    EvolutionTrace trace = run_two_level(bp.problem, 0.5, cfg.n_ref);
    if (cg_iterations) *cg_iterations += trace.cg_iterations;
    detail::store_reference(key, trace.w_final, data_path, meta_path);
    if (was_cached) *was_cached = false;
    return std::move(trace.w_final);
}

// ---------------------------------------------------------------------------
// Error reports and sweeps.

struct ErrorReport {
    SchemeKind scheme = SchemeKind::TwoLevel;
    InitKind init = InitKind::Symmetric;
    int m = 0;                        // fine-grid factor actually used (0 if n/a)
    double alpha = 0.0;
    double sigma = 0.0;
    int steps = 0;
    double eps1 = 0.0;                // relative error in the M-norm
    double eps2 = 0.0;                // relative error in the (M+G)-norm
    double delta = 0.0;
    double lambda1 = 0.0;
    long cg_iterations = 0;
    double runtime_seconds = 0.0;
    std::vector<double> l2_norms;
    std::vector<double> energies;
    std::optional<double> order1, order2;
};

inline double weighted_norm(const SparseMatrix& w, const Vector& v) {
    return std::sqrt(quad_form(w, v));
}

inline double relative_error(const SparseMatrix& norm_matrix, const Vector& w,
                             const Vector& reference) {
    if (w.size() != reference.size())
        throw std::invalid_argument("relative_error: dimension mismatch");
    Vector diff(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) diff[i] = w[i] - reference[i];
    return weighted_norm(norm_matrix, diff) / weighted_norm(norm_matrix, reference);
}

/// Runs the configured scheme and measures eps1/eps2 against the reference.
inline ErrorReport run_errors(const RunConfig& cfg, const BuiltProblem& bp,
                              const Vector& reference) {
    const auto start = std::chrono::steady_clock::now();
    ErrorReport rep;
    rep.scheme = cfg.scheme;
    rep.init = cfg.init;
    rep.alpha = cfg.alpha;
    rep.sigma = resolve_sigma(cfg);
    rep.steps = cfg.steps;
    rep.delta = bp.problem.delta;
    rep.lambda1 = bp.problem.lambda1_estimate;

    EvolutionTrace trace;
    if (cfg.scheme == SchemeKind::TwoLevel) {
        trace = run_two_level(bp.problem, rep.sigma, cfg.steps);
    } else {
        rep.m = cfg.init == InitKind::FineGrid ? resolve_fine_grid_factor(cfg, cfg.steps) : 0;
        trace = run_three_level(bp.problem, rep.sigma, cfg.steps, cfg.init,
                                std::max(rep.m, 1));
    }
    rep.eps1 = relative_error(bp.problem.mass, trace.w_final, reference);
    rep.eps2 = relative_error(bp.h1_matrix, trace.w_final, reference);
    rep.cg_iterations = trace.cg_iterations;
    rep.l2_norms = std::move(trace.l2_norms);
    rep.energies = std::move(trace.energies);
    rep.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

/// Error-vs-N table over the cross product sigma_list x N_list, with observed
/// orders log2(eps(N)/eps(2N)) attached to every run whose half-step partner
/// is in the list. nullopt entries in sigma_list mean the optimal weight.
inline std::vector<ErrorReport> convergence_sweep(
    const RunConfig& cfg, const std::vector<int>& n_list,
    const std::vector<std::optional<double>>& sigma_list) {
    for (int n_steps : n_list)
        if (cfg.n_ref <= n_steps)
            throw ConfigError("reference step count " + std::to_string(cfg.n_ref) +
                              " must exceed every swept N");
    std::vector<ErrorReport> table;
    if (sigma_list.empty()) return table;

    BuiltProblem bp = build_problem(cfg);
    const Vector reference = compute_reference(cfg, bp);

    for (const auto& sigma : sigma_list) {
        const std::size_t row0 = table.size();
        for (std::size_t i = 0; i < n_list.size(); ++i) {
            RunConfig run_cfg = cfg;
            run_cfg.sigma = sigma ? *sigma : sigma_opt(cfg.alpha);
            run_cfg.steps = n_list[i];
            ErrorReport rep = run_errors(run_cfg, bp, reference);
            for (std::size_t j = row0; j < table.size(); ++j) {
                if (table[j].steps * 2 == rep.steps) {
                    if (table[j].eps1 > 0.0 && rep.eps1 > 0.0)
                        rep.order1 = std::log2(table[j].eps1 / rep.eps1);
                    if (table[j].eps2 > 0.0 && rep.eps2 > 0.0)
                        rep.order2 = std::log2(table[j].eps2 / rep.eps2);
                }
            }
            table.push_back(std::move(rep));
        }
    }
    return table;
}

inline std::string results_csv(const std::vector<ErrorReport>& table) {
    std::string out = "scheme,init,m,alpha,sigma,N,eps1,eps2,order1,order2\n";
    for (const auto& r : table) {
        out += scheme_name(r.scheme);
        out += ',';
        out += r.scheme == SchemeKind::ThreeLevel ? init_name(r.init) : "-";
        out += ',';
        out += std::to_string(r.m);
        out += ',';
        out += detail::format_double(r.alpha);
        out += ',';
        out += detail::format_double(r.sigma);
        out += ',';
        out += std::to_string(r.steps);
        out += ',';
        out += detail::format_double(r.eps1);
        out += ',';
        out += detail::format_double(r.eps2);
        out += ',';
        if (r.order1) out += detail::format_double(*r.order1);
        out += ',';
        if (r.order2) out += detail::format_double(*r.order2);
        out += '\n';
    }
    return out;
}

inline void write_solution_csv(const Mesh& mesh, const Vector& w, const std::string& path) {
    if (static_cast<int>(w.size()) != mesh.vertex_count())
        throw std::invalid_argument("write_solution_csv: dimension mismatch");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fputs("vertex_id,x1,x2,value\n", f);
    for (int i = 0; i < mesh.vertex_count(); ++i)
        std::fprintf(f, "%d,%.17g,%.17g,%.17g\n", i, mesh.vertices[i][0],
                     mesh.vertices[i][1], w[i]);
    std::fclose(f);
}

// ---------------------------------------------------------------------------
// Invariant checks shared by `oracle-check` and the acceptance suite.

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Slack absorbing inner CG tolerance accumulated over long runs.
inline constexpr double kMonotonicitySlack = 1e-8;

/// ||w_{n+1}||_M <= ||w_n||_M + slack at every step.
inline CheckResult check_norm_monotonicity(const std::string& name,
                                           const EvolutionTrace& trace,
                                           double slack = kMonotonicitySlack) {
    double worst = 0.0;
    for (std::size_t i = 1; i < trace.l2_norms.size(); ++i)
        worst = std::max(worst, trace.l2_norms[i] - trace.l2_norms[i - 1]);
    return {name, worst <= slack, "worst step increase " + detail::format_double(worst)};
}

/// ||w_N||_M <= delta^{-alpha} ||psi||_M + slack.
inline CheckResult check_final_bound(const std::string& name, const CauchyProblem& p,
                                     const EvolutionTrace& trace,
                                     double slack = kMonotonicitySlack) {
    const double bound = std::pow(p.delta, -p.alpha) * m_norm(p, p.psi);
    const double final_norm = trace.l2_norms.back();
    return {name, final_norm <= bound + slack,
            "||w_N|| = " + detail::format_double(final_norm) +
                ", bound = " + detail::format_double(bound)};
}

/// E_{n+1} <= E_n + slack*E_1 at every step (three-level energy decay).
inline CheckResult check_energy_decay(const std::string& name, const EvolutionTrace& trace,
                                      double slack = kMonotonicitySlack) {
    double worst = 0.0;
    const double e1 = trace.energies.empty() ? 0.0 : trace.energies.front();
    for (std::size_t i = 1; i < trace.energies.size(); ++i)
        worst = std::max(worst, trace.energies[i] - trace.energies[i - 1]);
    return {name, worst <= slack * e1,
            "worst energy increase " + detail::format_double(worst) + " vs E_1 = " +
                detail::format_double(e1)};
}

/// Low-mode right-hand side: psi = sum_k 2^{-k} phi_{k+1} over the lowest
/// `modes` eigenvectors. Order measurements need this spectrally smooth data
/// to expose the asymptotic rates; rough data (e.g. the projected f = 1 of
/// the model problem) caps the observable order well below them.
inline Vector low_mode_psi(const EigenDecomposition& eig, int modes = 3) {
    Vector psi(eig.phis.front().size(), 0.0);
    for (int k = 0; k < modes && k < static_cast<int>(eig.phis.size()); ++k)
        axpy(std::pow(0.5, k), eig.phis[k], psi);
    return psi;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Errors of a scheme run against the oracle solution, over a doubling N
/// list; returns the per-pair observed orders log2(e(N)/e(2N)).
template <typename Runner>
inline std::vector<double> observed_orders(const std::vector<int>& n_list, Runner&& run,
                                           const Vector& exact, const SparseMatrix& mass) {
    std::vector<double> errors;
    errors.reserve(n_list.size());
    for (int n_steps : n_list) {
        const Vector w = run(n_steps);
        Vector diff(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) diff[i] = w[i] - exact[i];
        errors.push_back(std::sqrt(quad_form(mass, diff)));
    }
    std::vector<double> orders;
    for (std::size_t i = 1; i < errors.size(); ++i)
        orders.push_back(std::log2(errors[i - 1] / errors[i]));
    return orders;
}

}   // namespace fracstep
