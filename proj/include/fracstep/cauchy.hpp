#pragma once

// Pseudo-time integration of B(t) dw/dt + D w = 0 on t in [0,1], where
// D = A - delta*I for the discrete elliptic operator A represented by the
// pair (K, M), and B(t) = (1/alpha)(t D + delta I). Starting from
// w(0) = delta^{-alpha} psi, the value w(1) solves A^alpha v = psi.
//
// All operator equations are multiplied through by the mass matrix M, so a
// step never forms A = M^{-1}K: with S = K - delta*M every implicit step is
// one SPD sparse solve by conjugate gradients.
//
// Schemes: the weighted two-level scheme (second order at sigma = 0.5, first
// order otherwise), and the weighted three-level scheme, which reaches fourth
// order at the optimal weight sigma_opt(alpha) = (2+alpha)/(6*alpha) provided
// the first layer w_1 is accurate enough; four initializers for w_1 are
// provided, including the fine-grid one that preserves fourth order.

#include <limits>
#include <optional>

#include "fracstep/sparse.hpp"

namespace fracstep {

struct CauchyProblem {
    SparseMatrix stiffness;          // K
    SparseMatrix mass;               // M
    SparseMatrix shifted_stiffness;  // S = K - delta*M, SPD since delta < lambda_1
    double alpha = 0.5;              // fractional power, in (0,1)
    double delta = 0.0;              // coercivity bound, 0 < delta < lambda_1
    Vector psi;                      // right-hand side of A^alpha v = psi
    double lambda1_estimate = 0.0;   // smallest generalized eigenvalue of (K, M)
    double cg_tol = 1e-10;
    int cg_max_iter = 20000;
};

/// Builds a CauchyProblem, estimating lambda_1(K, M) when no estimate is
/// supplied, and rejects delta outside (0, lambda_1).
inline CauchyProblem make_cauchy_problem(SparseMatrix stiffness, SparseMatrix mass,
                                         double alpha, double delta, Vector psi,
                                         std::optional<double> lambda1_estimate = {},
                                         double cg_tol = 1e-10) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("make_cauchy_problem: alpha must lie in (0,1)");
    if (stiffness.dim != mass.dim || static_cast<int>(psi.size()) != mass.dim)
        throw std::invalid_argument("make_cauchy_problem: dimension mismatch");
    const double lambda1 =
        lambda1_estimate ? *lambda1_estimate : estimate_lambda_min(stiffness, mass, 1e-8);
    if (!(delta > 0.0) || delta >= lambda1)
        throw std::invalid_argument(
            "make_cauchy_problem: delta = " + std::to_string(delta) +
            " must satisfy 0 < delta < lambda_1 = " + std::to_string(lambda1));
    CauchyProblem p;
    p.shifted_stiffness = linear_combine(stiffness, 1.0, mass, -delta);
    p.stiffness = std::move(stiffness);
    p.mass = std::move(mass);
    p.alpha = alpha;
    p.delta = delta;
    p.psi = std::move(psi);
    p.lambda1_estimate = lambda1;
    p.cg_tol = cg_tol;
    return p;
}

inline double m_norm(const CauchyProblem& p, const Vector& v) {
    return std::sqrt(quad_form(p.mass, v));
}

/// w(0) = delta^{-alpha} psi.
inline Vector initial_state(const CauchyProblem& p) {
    return scaled(p.psi, std::pow(p.delta, -p.alpha));
}

/// Optimal three-level weight (2+alpha)/(6*alpha); exceeds the stability
/// bound 1/4 for every alpha below 4.
inline double sigma_opt(double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("sigma_opt: alpha must be positive");
    return (2.0 + alpha) / (6.0 * alpha);
}

enum class SchemeKind { TwoLevel, ThreeLevel };
enum class InitKind { Symmetric, ExplicitEuler, CorrectedExplicit, FineGrid };

struct SchemeConfig {
    SchemeKind scheme = SchemeKind::TwoLevel;
    double sigma = 0.5;
    int steps = 100;                 // N, tau = 1/N
    InitKind init = InitKind::Symmetric;
    int fine_grid_factor = 1;        // m, FineGrid only
};

struct EvolutionTrace {
    Vector w_final;
    std::vector<double> l2_norms;    // M-norm of w_n, n = 0..N
    std::vector<double> energies;    // E_n, n = 1..N (three-level only)
    int steps_taken = 0;
    long cg_iterations = 0;
};

struct StepTooLarge : std::runtime_error {
    double tau, tau0;
    StepTooLarge(double tau_, double tau0_)
        : std::runtime_error("corrected explicit initializer: tau = " + std::to_string(tau_) +
                             " exceeds the stability bound tau0 = " + std::to_string(tau0_)),
          tau(tau_), tau0(tau0_) {}
};

/// One step of the weighted two-level scheme from (w_n, t_n) to t_n + tau:
/// with t* = t_n + sigma*tau, solves
///   [ (t* S + delta M)/tau + alpha sigma S ] w_{n+1}
///     = [ (t* S + delta M)/tau - alpha (1-sigma) S ] w_n.
inline Vector two_level_step(const CauchyProblem& p, const Vector& w, double t_n,
                             double sigma, double tau,
                             long* cg_iterations = nullptr) {
    if (sigma < 0.0)
        throw std::invalid_argument("two_level_step: sigma must be >= 0");
    if (!(t_n >= 0.0) || t_n + tau > 1.0 + 1e-12)
        throw std::invalid_argument("two_level_step: step leaves [0,1]");
    const double t_star = t_n + sigma * tau;
    const SparseMatrix system = linear_combine(
        p.shifted_stiffness, t_star / tau + p.alpha * sigma, p.mass, p.delta / tau);

    const Vector sw = spmv(p.shifted_stiffness, w);
    const Vector mw = spmv(p.mass, w);
    Vector rhs(w.size());
    const double cs = t_star / tau - p.alpha * (1.0 - sigma);
    const double cm = p.delta / tau;
    for (std::size_t i = 0; i < w.size(); ++i) rhs[i] = cs * sw[i] + cm * mw[i];

    CgOptions opt;
    opt.tol = p.cg_tol;
    opt.max_iter = p.cg_max_iter;
    opt.initial_guess = &w;
    CgResult res = cg_solve(system, rhs, opt);
    if (cg_iterations) *cg_iterations += res.iterations;
    return std::move(res.x);
}

/// One step of the weighted three-level scheme at interior time t_n = n*tau:
///   [ (t_n S + delta M)/(2 alpha tau) + sigma S ] w_{n+1}
///     = [ (t_n S + delta M)/(2 alpha tau) - sigma S ] w_{n-1}
///       - (1 - 2 sigma) S w_n.
inline Vector three_level_step(const CauchyProblem& p, const Vector& w_prev,
                               const Vector& w_curr, double t_n, double sigma,
                               double tau, long* cg_iterations = nullptr) {
    if (sigma < 0.0)
        throw std::invalid_argument("three_level_step: sigma must be >= 0");
    const double b = 1.0 / (2.0 * p.alpha * tau);
    const SparseMatrix system =
        linear_combine(p.shifted_stiffness, t_n * b + sigma, p.mass, p.delta * b);

    const Vector sp = spmv(p.shifted_stiffness, w_prev);
    const Vector mp = spmv(p.mass, w_prev);
    const Vector sc = spmv(p.shifted_stiffness, w_curr);
    Vector rhs(w_curr.size());
    const double cs = t_n * b - sigma;
    const double cm = p.delta * b;
    const double cc = -(1.0 - 2.0 * sigma);
    for (std::size_t i = 0; i < rhs.size(); ++i)
        rhs[i] = cs * sp[i] + cm * mp[i] + cc * sc[i];

    CgOptions opt;
    opt.tol = p.cg_tol;
    opt.max_iter = p.cg_max_iter;
    opt.initial_guess = &w_curr;
    CgResult res = cg_solve(system, rhs, opt);
    if (cg_iterations) *cg_iterations += res.iterations;
    return std::move(res.x);
}

/// Three-level energy functional
/// E_n = 1/4 ||w_n + w_{n-1}||_D^2 + (sigma - 1/4) ||w_n - w_{n-1}||_D^2,
/// with ||v||_D^2 = v^T S v; non-increasing in n for sigma > 1/4.
inline double energy(const CauchyProblem& p, const Vector& w_n, const Vector& w_prev,
                     double sigma) {
    Vector sum(w_n.size()), diff(w_n.size());
    for (std::size_t i = 0; i < w_n.size(); ++i) {
        sum[i] = w_n[i] + w_prev[i];
        diff[i] = w_n[i] - w_prev[i];
    }
    return 0.25 * quad_form(p.shifted_stiffness, sum) +
           (sigma - 0.25) * quad_form(p.shifted_stiffness, diff);
}

// ---------------------------------------------------------------------------
// Initializers for the first layer w_1 of the three-level scheme.

/// Symmetric two-level step on [0, tau]; second-order accurate w_1.
inline Vector init_symmetric(const CauchyProblem& p, double tau,
                             long* cg_iterations = nullptr) {
    return two_level_step(p, initial_state(p), 0.0, 0.5, tau, cg_iterations);
}

/// Forward Euler using B(0) = alpha^{-1} delta I:
/// w_1 = w_0 - tau (alpha/delta) M^{-1} S w_0.
inline Vector init_explicit_euler(const CauchyProblem& p, double tau,
                                  long* cg_iterations = nullptr) {
    Vector w = initial_state(p);
    CgOptions opt;
    opt.tol = p.cg_tol;
    opt.max_iter = p.cg_max_iter;
    CgResult res = cg_solve(p.mass, spmv(p.shifted_stiffness, w), opt);
    if (cg_iterations) *cg_iterations += res.iterations;
    axpy(-tau * p.alpha / p.delta, res.x, w);
    return w;
}

/// Taylor-corrected explicit initializer w_1 = R w_0 with
/// R = I - (alpha/delta) tau D + (alpha(1+alpha)/(2 delta^2)) tau^2 D^2.
/// Contractive only for tau <= tau0 = (2 delta / (1+alpha)) / ||D||; larger
/// steps are rejected.
inline Vector init_corrected_explicit(const CauchyProblem& p, double tau,
                                      long* cg_iterations = nullptr) {
    const double d_norm =
        estimate_operator_norm(p.shifted_stiffness, p.mass, 1e-10, 2000);
    const double tau0 = d_norm > 0.0 ? 2.0 * p.delta / ((1.0 + p.alpha) * d_norm)
                                     : std::numeric_limits<double>::infinity();
    if (tau > tau0) throw StepTooLarge(tau, tau0);

    Vector w = initial_state(p);
    CgOptions opt;
    opt.tol = p.cg_tol;
    opt.max_iter = p.cg_max_iter;
    CgResult r1 = cg_solve(p.mass, spmv(p.shifted_stiffness, w), opt);   // D w_0
    CgResult r2 = cg_solve(p.mass, spmv(p.shifted_stiffness, r1.x), opt); // D^2 w_0
    if (cg_iterations) *cg_iterations += r1.iterations + r2.iterations;
    axpy(-tau * p.alpha / p.delta, r1.x, w);
    axpy(tau * tau * p.alpha * (1.0 + p.alpha) / (2.0 * p.delta * p.delta), r2.x, w);
    return w;
}

/// Symmetric two-level scheme with step tau/m on [0, tau]; with m ~ N this
/// supplies w_1 to the accuracy the fourth-order scheme needs.
inline Vector init_fine_grid(const CauchyProblem& p, double tau, int m,
                             long* cg_iterations = nullptr) {
    if (m < 1) throw std::invalid_argument("init_fine_grid: m must be >= 1");
    Vector w = initial_state(p);
    const double sub = tau / m;
    for (int beta = 0; beta < m; ++beta)
        w = two_level_step(p, w, beta * sub, 0.5, sub, cg_iterations);
    return w;
}

// ---------------------------------------------------------------------------
// Full runs.

inline EvolutionTrace run_two_level(const CauchyProblem& p, double sigma, int steps) {
    if (steps < 1) throw std::invalid_argument("run_two_level: N must be >= 1");
    const double tau = 1.0 / steps;
    EvolutionTrace trace;
    trace.steps_taken = steps;
    Vector w = initial_state(p);
    trace.l2_norms.reserve(steps + 1);
    trace.l2_norms.push_back(m_norm(p, w));
    for (int n = 0; n < steps; ++n) {
        w = two_level_step(p, w, n * tau, sigma, tau, &trace.cg_iterations);
        trace.l2_norms.push_back(m_norm(p, w));
    }
    trace.w_final = std::move(w);
    return trace;
}

inline EvolutionTrace run_three_level(const CauchyProblem& p, double sigma, int steps,
                                      InitKind init, int fine_grid_factor = 1) {
    if (steps < 2) throw std::invalid_argument("run_three_level: N must be >= 2");
    const double tau = 1.0 / steps;
    EvolutionTrace trace;
    trace.steps_taken = steps;
    Vector w_prev = initial_state(p);
    trace.l2_norms.reserve(steps + 1);
    trace.l2_norms.push_back(m_norm(p, w_prev));

    Vector w_curr;
    switch (init) {
        case InitKind::Symmetric:
            w_curr = init_symmetric(p, tau, &trace.cg_iterations);
            break;
        case InitKind::ExplicitEuler:
            w_curr = init_explicit_euler(p, tau, &trace.cg_iterations);
            break;
        case InitKind::CorrectedExplicit:
            w_curr = init_corrected_explicit(p, tau, &trace.cg_iterations);
            break;
        case InitKind::FineGrid:
            w_curr = init_fine_grid(p, tau, fine_grid_factor, &trace.cg_iterations);
            break;
    }
    trace.l2_norms.push_back(m_norm(p, w_curr));
    trace.energies.reserve(steps);
    trace.energies.push_back(energy(p, w_curr, w_prev, sigma));

    for (int n = 1; n < steps; ++n) {
        Vector w_next =
            three_level_step(p, w_prev, w_curr, n * tau, sigma, tau, &trace.cg_iterations);
        w_prev = std::move(w_curr);
        w_curr = std::move(w_next);
        trace.l2_norms.push_back(m_norm(p, w_curr));
        trace.energies.push_back(energy(p, w_curr, w_prev, sigma));
    }
    trace.w_final = std::move(w_curr);
    return trace;
}

inline EvolutionTrace run_scheme(const CauchyProblem& p, const SchemeConfig& cfg) {
    if (cfg.scheme == SchemeKind::TwoLevel)
        return run_two_level(p, cfg.sigma, cfg.steps);
    return run_three_level(p, cfg.sigma, cfg.steps, cfg.init, cfg.fine_grid_factor);
}

}   // namespace fracstep
