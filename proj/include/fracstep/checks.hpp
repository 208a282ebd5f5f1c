#pragma once

// Small-mesh invariant suite behind the `oracle-check` command: stability
// monotonicity of both schemes, the a-priori bounds, contraction of the
// corrected explicit initializer over the whole oracle spectrum, and the
// observed convergence orders of every scheme/weight combination.

#include "fracstep/harness.hpp"

namespace fracstep {

/// Runs every invariant check at the configured (n, alpha, preset). The
/// oracle decomposition bounds n: (n+1)^2 must stay within the dense cap.
inline std::vector<CheckResult> run_oracle_checks(const RunConfig& cfg) {
    std::vector<CheckResult> results;
    auto add = [&](CheckResult r) { results.push_back(std::move(r)); };

    BuiltProblem bp = build_problem(cfg);
    const CauchyProblem& p = bp.problem;
    const EigenDecomposition eig = dense_generalized_eig(p.stiffness, p.mass);

    // --- two-level stability: norm decay for sigma >= 0.5, plus the final
    // a-priori bound
    for (double sigma : {0.5, 0.75, 1.0}) {
        for (int n_steps : {10, 100}) {
            const EvolutionTrace trace = run_two_level(p, sigma, n_steps);
            const std::string tag = "two-level sigma=" + detail::format_double(sigma) +
                                    " N=" + std::to_string(n_steps);
            add(check_norm_monotonicity("norm decay, " + tag, trace));
            add(check_final_bound("a-priori bound, " + tag, p, trace));
        }
    }

    // --- three-level stability: energy decay for sigma > 0.25
    for (double sigma : {0.3, 0.5, sigma_opt(cfg.alpha)}) {
        for (int n_steps : {10, 100}) {
            const EvolutionTrace trace =
                run_three_level(p, sigma, n_steps, InitKind::Symmetric);
            add(check_energy_decay("energy decay, three-level sigma=" +
                                       detail::format_double(sigma) +
                                       " N=" + std::to_string(n_steps),
                                   trace));
        }
    }

    // --- oracle-side bounds: ||A^{-alpha} psi|| <= delta^{-alpha} ||psi||
    // and monotonicity of the exact evolution
    {
        const Vector v = fractional_apply(eig, p.mass, -cfg.alpha, p.psi);
        const double lhs = m_norm(p, v);
        const double rhs = std::pow(p.delta, -cfg.alpha) * m_norm(p, p.psi);
        add({"a-priori bound of the exact solution", lhs <= rhs * (1.0 + 1e-10),
             detail::format_double(lhs) + " <= " + detail::format_double(rhs)});

        const Vector w0 = initial_state(p);
        const double norm0 = m_norm(p, w0);
        double worst = 0.0;
        for (int i = 0; i <= 20; ++i) {
            const Vector wt = exact_evolution(eig, p.mass, p.delta, cfg.alpha, i / 20.0, w0);
            worst = std::max(worst, m_norm(p, wt) - norm0);
        }
        add({"exact evolution norm bound", worst <= 1e-10 * norm0,
             "worst excess " + detail::format_double(worst)});
    }

    // --- corrected explicit initializer: |R(d)| <= 1 for every generalized
    // eigenvalue d of (S, M) whenever tau <= tau0, and rejection above tau0
    {
        const double d_max = eig.lambdas.back() - p.delta;
        const double tau0 = 2.0 * p.delta / ((1.0 + cfg.alpha) * d_max);
        const double a = cfg.alpha / p.delta;
        const double b = cfg.alpha * (1.0 + cfg.alpha) / (2.0 * p.delta * p.delta);
        double worst = 0.0;
        for (double tau : {tau0, 0.5 * tau0, 0.25 * tau0}) {
            for (double lambda : eig.lambdas) {
                const double d = lambda - p.delta;
                const double r = 1.0 - a * tau * d + b * tau * tau * d * d;
                worst = std::max(worst, std::abs(r) - 1.0);
            }
        }
        add({"corrected explicit contraction", worst <= 1e-12,
             "worst |R|-1 = " + detail::format_double(worst)});

        bool rejected = false;
        double reported_tau0 = 0.0;
        try {
            init_corrected_explicit(p, 1.01 * tau0);
        } catch (const StepTooLarge& e) {
            rejected = true;
            reported_tau0 = e.tau0;
        }
        add({"corrected explicit rejects tau above tau0", rejected,
             "tau0 reported " + detail::format_double(reported_tau0) + ", oracle " +
                 detail::format_double(tau0)});
    }

    // --- observed convergence orders vs the oracle solution. The asymptotic
    // rates need spectrally smooth data; the symmetric-initializer ceiling is
    // what the rough model data exposes.
    {
        const std::vector<int> n_list{20, 40, 80, 160};
        RunConfig tight = cfg;
        tight.cg_tol = 1e-13;   // keep solver error below the N=160 fourth-order error

        BuiltProblem smooth_bp = build_problem(tight);
        CauchyProblem smooth = smooth_bp.problem;
        smooth.psi = low_mode_psi(eig);
        const Vector smooth_exact = fractional_apply(eig, p.mass, -cfg.alpha, smooth.psi);
        const CauchyProblem& model = smooth_bp.problem;
        const Vector model_exact = fractional_apply(eig, p.mass, -cfg.alpha, model.psi);

        auto order_check = [&](const std::string& name, const CauchyProblem& prob,
                               const Vector& exact, auto runner, double lo, double hi) {
            const double med = median(observed_orders(
                n_list, [&](int n_steps) { return runner(prob, n_steps); }, exact, p.mass));
            add({name, med >= lo && med <= hi,
                 "median observed order " + detail::format_double(med) + ", want [" +
                     detail::format_double(lo) + ", " + detail::format_double(hi) + "]"});
        };
        order_check("order, two-level sigma=0.5", smooth, smooth_exact,
                    [](const CauchyProblem& prob, int n_steps) {
                        return run_two_level(prob, 0.5, n_steps).w_final;
                    },
                    1.8, 2.2);
        order_check("order, two-level sigma=1.0", smooth, smooth_exact,
                    [](const CauchyProblem& prob, int n_steps) {
                        return run_two_level(prob, 1.0, n_steps).w_final;
                    },
                    0.8, 1.2);
        order_check("order, three-level sigma_opt fine-grid init", smooth, smooth_exact,
                    [&](const CauchyProblem& prob, int n_steps) {
                        return run_three_level(prob, sigma_opt(cfg.alpha), n_steps,
                                               InitKind::FineGrid, n_steps)
                            .w_final;
                    },
                    3.5, 4.5);
        order_check("order ceiling, three-level sigma_opt symmetric init", model,
                    model_exact,
                    [&](const CauchyProblem& prob, int n_steps) {
                        return run_three_level(prob, sigma_opt(cfg.alpha), n_steps,
                                               InitKind::Symmetric)
                            .w_final;
                    },
                    0.0, 2.7);
    }

    return results;
}

}   // namespace fracstep
