#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "elastotat/boundary.hpp"
#include "elastotat/elastic_operator.hpp"
#include "elastotat/forward_solver.hpp"

namespace elastotat {

template <int D>
struct HarmonicExtension {
    VectorField<D> phi;       // matches the prescribed values exactly at collar nodes
    double residual = 0.0;    // relative interior residual of P_h phi = 0
    int iterations = 0;
};

namespace detail {

/// Interior unknowns of the ball Dirichlet problem: |x| < R - h, i.e. the
/// nodes strictly inside the boundary collar.
template <int D>
std::vector<std::size_t> solve_nodes(const Grid<D>& grid, const BallRegion& ball) {
    std::vector<std::size_t> out;
    const double h = grid.spacing();
    for (std::size_t i = 0; i < grid.num_nodes(); ++i)
        if (grid.radius(i) < ball.radius - h) out.push_back(i);
    return out;
}

}  // namespace detail

/**
 * Solves P_h phi = 0 inside the ball with the given values prescribed at the
 * boundary collar, by plain conjugate gradients on the interior unknowns
 * (the lifted system is SPD there since P_h comes from the bilinear form).
 * `boundary_values` holds one D-vector per boundary entry, entry-major.
 */
template <int D>
HarmonicExtension<D> harmonic_extension(const Medium<D>& medium, const BoundarySet<D>& bset,
                                        const std::vector<double>& boundary_values,
                                        double tol = 1e-10, int max_iters = 0) {
    detail::require(bset.grid == medium.grid, "boundary set grid mismatch");
    detail::require(boundary_values.size() == bset.entries.size() * D,
                    "boundary values size mismatch");
    if (max_iters <= 0) max_iters = 50 * medium.grid.n_per_axis;

    const auto nodes = detail::solve_nodes(medium.grid, bset.ball);
    const std::size_t m = nodes.size() * D;

    OperatorWorkspace<D> ws(medium.grid);
    VectorField<D> full(medium.grid), pfull(medium.grid);

    auto lift_data = [&](VectorField<D>& f) {
        f.fill(0.0);
        for (const auto& [node, entry] : bset.collar)
            for (int c = 0; c < D; ++c) f.comp[c][node] = boundary_values[entry * D + c];
    };
    auto scatter = [&](const std::vector<double>& x, VectorField<D>& f) {
        f.fill(0.0);
        for (std::size_t k = 0; k < nodes.size(); ++k)
            for (int c = 0; c < D; ++c) f.comp[c][nodes[k]] = x[k * D + c];
    };
    auto gather = [&](const VectorField<D>& f, std::vector<double>& x) {
        for (std::size_t k = 0; k < nodes.size(); ++k)
            for (int c = 0; c < D; ++c) x[k * D + c] = f.comp[c][nodes[k]];
    };
    auto dot_packed = [](const std::vector<double>& a, const std::vector<double>& b) {
        return par::reduce_sum(static_cast<std::int64_t>(a.size()),
                               [&](std::int64_t lo, std::int64_t hi) {
                                   double s = 0.0;
                                   for (std::int64_t i = lo; i < hi; ++i) s += a[i] * b[i];
                                   return s;
                               });
    };

    // b = -(P_h lift(data)) gathered on the interior rows.
    std::vector<double> b(m, 0.0);
    lift_data(full);
    apply_P(medium, full, pfull, ws);
    gather(pfull, b);
    for (auto& v : b) v = -v;

    HarmonicExtension<D> out;
    out.phi = VectorField<D>(medium.grid);
    lift_data(out.phi);

    const double bnorm = std::sqrt(dot_packed(b, b));
    if (bnorm == 0.0) {
        out.residual = 0.0;
        out.iterations = 0;
        return out;
    }

    std::vector<double> x(m, 0.0), r = b, p = b, ap(m, 0.0);
    double rs = dot_packed(r, r);
    std::vector<double> history;
    int it = 0;
    for (; it < max_iters; ++it) {
        scatter(p, full);
        apply_P(medium, full, pfull, ws);
        gather(pfull, ap);
        const double pap = dot_packed(p, ap);
        detail::require(pap > 0.0, "harmonic extension system lost positive-definiteness");
        const double alpha = rs / pap;
        for (std::size_t i = 0; i < m; ++i) x[i] += alpha * p[i];
        for (std::size_t i = 0; i < m; ++i) r[i] -= alpha * ap[i];
        const double rs_new = dot_packed(r, r);
        history.push_back(std::sqrt(rs_new) / bnorm);
        if (std::sqrt(rs_new) <= tol * bnorm) {
            rs = rs_new;
            ++it;
            break;
        }
        const double beta = rs_new / rs;
        rs = rs_new;
        for (std::size_t i = 0; i < m; ++i) p[i] = r[i] + beta * p[i];
    }
    out.residual = history.empty() ? 0.0 : history.back();
    out.iterations = it;
    if (out.residual > tol)
        throw ConvergenceError("harmonic extension did not converge within " +
                                   std::to_string(max_iters) + " iterations (residual " +
                                   std::to_string(out.residual) + ")",
                               history);

    for (std::size_t k = 0; k < nodes.size(); ++k)
        for (int c = 0; c < D; ++c) out.phi.comp[c][nodes[k]] = x[k * D + c];
    return out;
}

/// Boundary values at the last trace sample, h(T, .), entry-major.
template <int D>
std::vector<double> terminal_values(const BoundaryTrace<D>& trace) {
    std::vector<double> out(trace.entries.size() * D);
    for (std::size_t e = 0; e < trace.entries.size(); ++e)
        for (int c = 0; c < D; ++c) out[e * D + c] = trace.at(trace.n_steps, e, c);
    return out;
}

/**
 * The pseudo-inverse A: harmonically extend h(T,.) to phi, solve the ball
 * Dirichlet problem backward from terminal data (phi, 0) with boundary data
 * h, and return v(0,.) restricted to the closed ball (zero outside). The
 * terminal boundary data is compatible to first order by construction.
 */
template <int D>
VectorField<D> pseudo_inverse_A(const Medium<D>& medium, const BoundarySet<D>& bset,
                                const BoundaryTrace<D>& trace, double tol = 1e-10) {
    detail::require(trace.grid == medium.grid, "trace grid mismatch");
    detail::require(trace.entries.size() == bset.entries.size(),
                    "trace does not match the boundary set");
    detail::require(trace.n_steps >= 1, "trace must contain at least one step");

    const auto ext = harmonic_extension(medium, bset, terminal_values(trace), tol);
    VectorField<D> zero_vel(medium.grid);
    auto res = dirichlet_solve(medium, bset, ext.phi, zero_vel, &trace.samples, trace.n_steps,
                               trace.dt, TimeDirection::Backward);
    restrict_to_ball(res.final_state.u, bset.ball);
    return std::move(res.final_state.u);
}

}  // namespace elastotat
