#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "elastotat/elastic_operator.hpp"
#include "elastotat/forward_solver.hpp"
#include "elastotat/time_reversal.hpp"

namespace elastotat {

/// Weighted L2 norm on trace space: surface quadrature in space, trapezoid in time.
template <int D>
double trace_norm(const BoundaryTrace<D>& trace) {
    const std::size_t ne = trace.entries.size();
    double s = 0.0;
    for (int step = 0; step <= trace.n_steps; ++step) {
        const double tau = (step == 0 || step == trace.n_steps) ? 0.5 * trace.dt : trace.dt;
        double row = 0.0;
        for (std::size_t e = 0; e < ne; ++e) {
            double v2 = 0.0;
            for (int c = 0; c < D; ++c) {
                const double v = trace.at(step, e, c);
                v2 += v * v;
            }
            row += trace.entries[e].weight * v2;
        }
        s += tau * row;
    }
    return std::sqrt(s);
}

/// difference = a - b, elementwise on the shared layout.
template <int D>
BoundaryTrace<D> trace_difference(const BoundaryTrace<D>& a, const BoundaryTrace<D>& b) {
    detail::require(a.entries.size() == b.entries.size() && a.n_steps == b.n_steps,
                    "trace layout mismatch");
    BoundaryTrace<D> out = a;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] -= b.samples[i];
    return out;
}

/// The error operator K f = f - A(Lambda f).
template <int D>
VectorField<D> apply_K(const Medium<D>& medium, const BoundarySet<D>& bset,
                       const VectorField<D>& f, double T, const SolverConfig& cfg,
                       double tol = 1e-10) {
    const auto trace = apply_lambda(medium, f, T, cfg, bset);
    const auto af = pseudo_inverse_A(medium, bset, trace, tol);
    return linear_combination(1.0, f, -1.0, af);
}

struct ContractionDiagnostic {
    double energy_ratio = 0.0;  // E_Omega(u,T) / E_Omega(u,0)
    double bound = 0.0;         // sqrt(energy_ratio), the induced bound on |K|
    double T_used = 0.0;
};

/// Measures the local energy decay that controls |K|.
template <int D>
ContractionDiagnostic contraction_estimate(const Medium<D>& medium, const BoundarySet<D>& bset,
                                           const VectorField<D>& f, double T,
                                           const SolverConfig& cfg) {
    const Region omega = Region::ball(bset.ball.radius);
    VectorField<D> zero(medium.grid);
    const double e0 = energy(medium, f, zero, omega).total;
    detail::require(e0 > 0.0, "contraction estimate needs nonzero initial data");

    ContractionDiagnostic out;
    out.T_used = T;
    if (T == 0.0) {
        out.energy_ratio = 1.0;  // same snapshot
        out.bound = 1.0;
        return out;
    }
    const auto fw = forward_solve(medium, f, T, cfg, &bset);
    const double eT = energy(medium, fw.final_state.u, fw.final_state.u_t, omega).total;
    out.energy_ratio = eT / e0;
    out.bound = std::sqrt(std::max(0.0, out.energy_ratio));
    return out;
}

template <int D>
struct ReconstructionResult {
    VectorField<D> reconstruction;         // last iterate produced
    std::vector<VectorField<D>> iterates;  // f_0.. when retention is on
    std::vector<double> residual_norms;    // |Lambda f_k - h| in trace norm
    std::vector<double> error_norms;       // |f_k - f_true|_{H_D(Omega)}, if truth given
    std::vector<double> update_norms;      // |f_{k+1} - f_k|_{H_D(Omega)}
    std::vector<double> update_ratios;     // update_norms[k]/update_norms[k-1]
    bool converged = false;
    int iterations_run = 0;
};

/**
 * Neumann-series reconstruction, realized as the fixed-point iteration
 *   f_0 = A h,   f_{k+1} = f_k + A(h - Lambda f_k).
 * Stops when the relative update |f_{k+1}-f_k| / |f_0| drops below stop_tol
 * or after max_iters iterations. The condition checker is advisory and not
 * consulted here, so unsupported regimes can be studied deliberately.
 */
template <int D>
ReconstructionResult<D> reconstruct(const Medium<D>& medium, const BoundarySet<D>& bset,
                                    const BoundaryTrace<D>& h, int max_iters, double stop_tol,
                                    const VectorField<D>* f_true = nullptr,
                                    bool keep_iterates = false, double tol = 1e-10) {
    detail::require(max_iters >= 1, "max_iters must be at least 1");
    const double T = h.duration();
    detail::require(T > 0.0, "trace duration must be positive");
    // Lambda must reproduce the trace's time grid exactly.
    SolverConfig cfg;
    cfg.n_steps = h.n_steps;

    const Region omega = Region::ball(bset.ball.radius);
    ReconstructionResult<D> out;

    VectorField<D> f_k = pseudo_inverse_A(medium, bset, h, tol);
    const double f0_norm = hd_norm(medium, f_k, omega);

    for (int k = 0; k < max_iters; ++k) {
        if (!all_finite(f_k))
            throw Error("reconstruction iterate " + std::to_string(k) + " is not finite");
        if (keep_iterates) out.iterates.push_back(f_k);
        if (f_true) {
            const auto diff = linear_combination(1.0, f_k, -1.0, *f_true);
            out.error_norms.push_back(hd_norm(medium, diff, omega));
        }

        const auto lf = apply_lambda(medium, f_k, T, cfg, bset);
        const auto residual = trace_difference(h, lf);
        out.residual_norms.push_back(trace_norm(residual));

        const auto correction = pseudo_inverse_A(medium, bset, residual, tol);
        const double upd = hd_norm(medium, correction, omega);
        out.update_norms.push_back(upd);
        if (out.update_norms.size() >= 2) {
            const double prevu = out.update_norms[out.update_norms.size() - 2];
            out.update_ratios.push_back(prevu > 0.0 ? upd / prevu : 0.0);
        }
        add_scaled(f_k, 1.0, correction);
        out.iterations_run = k + 1;
        if (f0_norm == 0.0 || upd <= stop_tol * f0_norm) {
            out.converged = true;
            break;
        }
    }
    out.reconstruction = std::move(f_k);
    return out;
}

}  // namespace elastotat
