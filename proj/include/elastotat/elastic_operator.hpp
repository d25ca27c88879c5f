#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "elastotat/fields.hpp"
#include "elastotat/medium.hpp"
#include "elastotat/parallel.hpp"
#include "elastotat/stencil.hpp"

namespace elastotat {

/// Integration region for norms and energies: the whole grid or the ball.
struct Region {
    bool whole = true;
    double radius = 0.0;
    static Region full() { return Region{true, 0.0}; }
    static Region ball(double r) { return Region{false, r}; }
};

namespace detail {

/// Trapezoidal quadrature weights: h^D, halved once per face the node sits on.
template <int D>
std::vector<double> trapezoid_weights(const Grid<D>& g) {
    const double h = g.spacing();
    double cell = h;
    for (int d = 1; d < D; ++d) cell *= h;
    std::vector<double> w(g.num_nodes());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const auto idx = g.from_linear(i);
        double v = cell;
        for (int d = 0; d < D; ++d)
            if (idx[d] == 0 || idx[d] == g.n_per_axis - 1) v *= 0.5;
        w[i] = v;
    }
    return w;
}

/// 1 if the node is integrated over, else 0. A node is in Omega iff |x| < R.
template <int D>
bool in_region(const Grid<D>& g, std::size_t i, const Region& r) {
    return r.whole || g.radius(i) < r.radius;
}

}  // namespace detail

/// Per-node Jacobian samples: grad[i][j] = d u_i / d x_j.
template <int D>
struct DiscreteGradient {
    std::array<std::array<std::vector<double>, D>, D> grad;
};

template <int D>
DiscreteGradient<D> gradient(const VectorField<D>& u) {
    DiscreteGradient<D> out;
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) {
            out.grad[i][j].resize(u.num_nodes());
            diff_axis<D>(u.grid, u.comp[i].data(), j, out.grad[i][j].data());
        }
    return out;
}

/**
 * H_D inner product over a region:
 *   (f,g) = int lambda (div f)(div g)
 *           + mu tr((grad f)(grad g) + (grad f)^T (grad g)) dx
 * by trapezoidal quadrature with sharp node masking. Symmetric and bilinear
 * by construction; a seminorm (constants are in its kernel).
 */
template <int D>
double hd_inner(const Medium<D>& medium, const VectorField<D>& f, const VectorField<D>& g,
                const Region& region) {
    detail::require(f.grid == medium.grid && g.grid == medium.grid, "field grids differ");
    const auto gf = gradient(f);
    const auto gg = gradient(g);
    const auto w = detail::trapezoid_weights(medium.grid);
    const Grid<D>& gr = medium.grid;
    const std::int64_t n = static_cast<std::int64_t>(gr.num_nodes());

    return par::reduce_sum(n, [&](std::int64_t lo, std::int64_t hi) {
        double s = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            if (!detail::in_region(gr, ui, region)) continue;
            double divf = 0.0, divg = 0.0, tr_sum = 0.0;
            for (int a = 0; a < D; ++a) {
                divf += gf.grad[a][a][ui];
                divg += gg.grad[a][a][ui];
                for (int b = 0; b < D; ++b)
                    tr_sum += gf.grad[b][a][ui] * gg.grad[a][b][ui] +
                              gf.grad[a][b][ui] * gg.grad[a][b][ui];
            }
            s += w[ui] * (medium.lambda.v[ui] * divf * divg + medium.mu.v[ui] * tr_sum);
        }
        return s;
    });
}

template <int D>
double hd_norm(const Medium<D>& medium, const VectorField<D>& f, const Region& region) {
    return std::sqrt(std::max(0.0, hd_inner(medium, f, f, region)));
}

/// Weighted L2 inner product over a region (trapezoid + sharp mask).
template <int D>
double l2_inner(const Grid<D>& grid, const VectorField<D>& f, const VectorField<D>& g,
                const Region& region) {
    detail::require(f.grid == grid && g.grid == grid, "field grids differ");
    const auto w = detail::trapezoid_weights(grid);
    const std::int64_t n = static_cast<std::int64_t>(grid.num_nodes());
    return par::reduce_sum(n, [&](std::int64_t lo, std::int64_t hi) {
        double s = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            if (!detail::in_region(grid, ui, region)) continue;
            double dotv = 0.0;
            for (int c = 0; c < D; ++c) dotv += f.comp[c][ui] * g.comp[c][ui];
            s += w[ui] * dotv;
        }
        return s;
    });
}

/// Scratch buffers for matrix-free applications of P_h.
template <int D>
struct OperatorWorkspace {
    Grid<D> grid;
    std::vector<double> weights;
    std::array<std::array<std::vector<double>, D>, D> grad, stress;
    std::vector<double> tmp;

    explicit OperatorWorkspace(const Grid<D>& g) : grid(g) {
        weights = detail::trapezoid_weights(g);
        const std::size_t n = g.num_nodes();
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) {
                grad[i][j].assign(n, 0.0);
                stress[i][j].assign(n, 0.0);
            }
        tmp.assign(n, 0.0);
    }
};

/**
 * Discrete elastic operator, assembled from the bilinear form:
 *   P_h u = M^{-1} D^T M_c D u   (D = gradient stencil, M_c the
 * coefficient-weighted quadrature mass, M the lumped L2 mass), output zeroed
 * on the one-cell grid boundary layer. By construction
 *   <P_h f, g>_{L2,h} = (f,g)_{H_D}
 * exactly for g vanishing on that layer, which makes the discrete
 * self-adjointness identity hold to roundoff instead of O(h).
 */
template <int D>
void apply_P(const Medium<D>& medium, const VectorField<D>& u, VectorField<D>& out,
             OperatorWorkspace<D>& ws) {
    const Grid<D>& g = medium.grid;
    detail::require(u.grid == g && out.grid == g && ws.grid == g, "operator grid mismatch");
    const std::size_t n = g.num_nodes();

    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j)
            diff_axis<D>(g, u.comp[i].data(), j, ws.grad[i][j].data());

    // stress_ij = w (lambda div u delta_ij + mu (grad_ij + grad_ji))
    par::for_chunks(static_cast<std::int64_t>(n), 8192, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t k = lo; k < hi; ++k) {
            const auto i = static_cast<std::size_t>(k);
            double div = 0.0;
            for (int a = 0; a < D; ++a) div += ws.grad[a][a][i];
            const double lw = ws.weights[i] * medium.lambda.v[i] * div;
            const double mw = ws.weights[i] * medium.mu.v[i];
            for (int a = 0; a < D; ++a) {
                for (int b = 0; b < D; ++b) {
                    double s = mw * (ws.grad[a][b][i] + ws.grad[b][a][i]);
                    if (a == b) s += lw;
                    ws.stress[a][b][i] = s;
                }
            }
        }
    });

    for (int i = 0; i < D; ++i) {
        auto& oc = out.comp[i];
        std::fill(oc.begin(), oc.end(), 0.0);
        for (int j = 0; j < D; ++j) {
            diff_axis_transpose<D>(g, ws.stress[i][j].data(), j, ws.tmp.data());
            par::for_each_index(static_cast<std::int64_t>(n),
                                [&](std::int64_t k) { oc[static_cast<std::size_t>(k)] += ws.tmp[static_cast<std::size_t>(k)]; });
        }
        par::for_each_index(static_cast<std::int64_t>(n), [&](std::int64_t k) {
            oc[static_cast<std::size_t>(k)] /= ws.weights[static_cast<std::size_t>(k)];
        });
    }

    // Dirichlet walls: the operator does not move face nodes.
    for (std::size_t i = 0; i < n; ++i)
        if (g.on_face(g.from_linear(i)))
            for (int c = 0; c < D; ++c) out.comp[c][i] = 0.0;
}

template <int D>
VectorField<D> apply_P(const Medium<D>& medium, const VectorField<D>& u) {
    OperatorWorkspace<D> ws(medium.grid);
    VectorField<D> out(medium.grid);
    apply_P(medium, u, out, ws);
    return out;
}

/// Elastic + kinetic energy over a region (paper's convention, no 1/2).
struct EnergySnapshot {
    double elastic = 0.0;
    double kinetic = 0.0;
    double total = 0.0;
};

template <int D>
EnergySnapshot energy(const Medium<D>& medium, const VectorField<D>& u, const VectorField<D>& u_t,
                      const Region& region) {
    EnergySnapshot e;
    e.elastic = hd_inner(medium, u, u, region);
    e.kinetic = l2_inner(medium.grid, u_t, u_t, region);
    e.total = e.elastic + e.kinetic;
    return e;
}

}  // namespace elastotat
