#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "elastotat/grid.hpp"
#include "elastotat/parallel.hpp"

namespace elastotat {

/// Scalar samples, one value per grid node.
template <int D>
struct ScalarField {
    Grid<D> grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Grid<D>& g, double fill = 0.0) : grid(g), v(g.num_nodes(), fill) {}

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
};

/// D-component vector samples, one value per node per component.
template <int D>
struct VectorField {
    Grid<D> grid;
    std::array<std::vector<double>, D> comp;

    VectorField() = default;
    explicit VectorField(const Grid<D>& g) : grid(g) {
        for (int c = 0; c < D; ++c) comp[c].assign(g.num_nodes(), 0.0);
    }

    std::size_t num_nodes() const { return grid.num_nodes(); }

    void fill(double x) {
        for (int c = 0; c < D; ++c)
            for (auto& s : comp[c]) s = x;
    }
};

template <int D>
bool same_grid(const VectorField<D>& a, const VectorField<D>& b) {
    return a.grid == b.grid;
}

// ---- elementwise algebra (nodewise, exact linear algebra) ----

template <int D>
void scale(VectorField<D>& f, double a) {
    for (int c = 0; c < D; ++c) {
        auto& fc = f.comp[c];
        par::for_each_index(static_cast<std::int64_t>(fc.size()), [&](std::int64_t i) { fc[i] *= a; });
    }
}

/// y += a*x
template <int D>
void add_scaled(VectorField<D>& y, double a, const VectorField<D>& x) {
    detail::require(same_grid(y, x), "field grids differ");
    for (int c = 0; c < D; ++c) {
        auto& yc = y.comp[c];
        const auto& xc = x.comp[c];
        par::for_each_index(static_cast<std::int64_t>(yc.size()),
                            [&](std::int64_t i) { yc[i] += a * xc[i]; });
    }
}

/// out = a*x + b*y
template <int D>
VectorField<D> linear_combination(double a, const VectorField<D>& x, double b,
                                  const VectorField<D>& y) {
    detail::require(same_grid(x, y), "field grids differ");
    VectorField<D> out(x.grid);
    for (int c = 0; c < D; ++c) {
        auto& oc = out.comp[c];
        const auto& xc = x.comp[c];
        const auto& yc = y.comp[c];
        par::for_each_index(static_cast<std::int64_t>(oc.size()),
                            [&](std::int64_t i) { oc[i] = a * xc[i] + b * yc[i]; });
    }
    return out;
}

template <int D>
double max_abs(const VectorField<D>& f) {
    double m = 0.0;
    for (int c = 0; c < D; ++c)
        for (double s : f.comp[c]) m = std::max(m, std::abs(s));
    return m;
}

template <int D>
bool all_finite(const VectorField<D>& f) {
    for (int c = 0; c < D; ++c)
        for (double s : f.comp[c])
            if (!std::isfinite(s)) return false;
    return true;
}

/// Plain nodewise dot product (no quadrature weights), deterministic reduction.
template <int D>
double dot(const VectorField<D>& a, const VectorField<D>& b) {
    detail::require(same_grid(a, b), "field grids differ");
    const std::int64_t n = static_cast<std::int64_t>(a.num_nodes());
    return par::reduce_sum(n, [&](std::int64_t lo, std::int64_t hi) {
        double s = 0.0;
        for (int c = 0; c < D; ++c) {
            const double* pa = a.comp[c].data();
            const double* pb = b.comp[c].data();
            for (std::int64_t i = lo; i < hi; ++i) s += pa[i] * pb[i];
        }
        return s;
    });
}

// ---- ball masking ----

/// Zeroes samples strictly outside the closed ball; keeps |x| <= R.
template <int D>
void restrict_to_ball(VectorField<D>& f, const BallRegion& ball) {
    const std::size_t n = f.num_nodes();
    for (std::size_t i = 0; i < n; ++i) {
        if (f.grid.radius(i) > ball.radius)
            for (int c = 0; c < D; ++c) f.comp[c][i] = 0.0;
    }
}

template <int D>
VectorField<D> restricted(const VectorField<D>& f, const BallRegion& ball) {
    VectorField<D> out = f;
    restrict_to_ball(out, ball);
    return out;
}

/// Zero extension: identity on fields already supported in the ball.
template <int D>
VectorField<D> extend_by_zero(const VectorField<D>& f, const BallRegion& ball) {
    return restricted(f, ball);
}

}  // namespace elastotat
