#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "elastotat/errors.hpp"

namespace elastotat {

/**
 * Uniform Cartesian lattice over the cube [-L, L]^D.
 *
 * Node coordinates along each axis are x_i = -L + i*h with h = 2L/(n-1);
 * the linear node index runs with axis 0 fastest:
 *   linear = i0 + n*(i1 + n*i2).
 */
template <int D>
struct Grid {
    static_assert(D == 2 || D == 3, "only 2-D and 3-D grids are supported");

    double half_width = 1.0;
    int n_per_axis = 0;

    double spacing() const { return 2.0 * half_width / (n_per_axis - 1); }
    double coord(int i) const { return -half_width + i * spacing(); }

    std::size_t num_nodes() const {
        std::size_t n = static_cast<std::size_t>(n_per_axis);
        std::size_t t = n;
        for (int d = 1; d < D; ++d) t *= n;
        return t;
    }

    std::size_t to_linear(const std::array<int, D>& idx) const {
        std::size_t lin = static_cast<std::size_t>(idx[D - 1]);
        for (int d = D - 2; d >= 0; --d)
            lin = lin * static_cast<std::size_t>(n_per_axis) + static_cast<std::size_t>(idx[d]);
        return lin;
    }

    std::array<int, D> from_linear(std::size_t lin) const {
        std::array<int, D> idx{};
        const std::size_t n = static_cast<std::size_t>(n_per_axis);
        for (int d = 0; d < D; ++d) {
            idx[d] = static_cast<int>(lin % n);
            lin /= n;
        }
        return idx;
    }

    std::array<double, D> position(const std::array<int, D>& idx) const {
        std::array<double, D> p{};
        for (int d = 0; d < D; ++d) p[d] = coord(idx[d]);
        return p;
    }

    std::array<double, D> position(std::size_t lin) const { return position(from_linear(lin)); }

    /// Euclidean distance of a node from the origin.
    double radius(std::size_t lin) const {
        auto p = position(lin);
        double s = 0.0;
        for (int d = 0; d < D; ++d) s += p[d] * p[d];
        return std::sqrt(s);
    }

    bool on_face(const std::array<int, D>& idx) const {
        for (int d = 0; d < D; ++d)
            if (idx[d] == 0 || idx[d] == n_per_axis - 1) return true;
        return false;
    }

    bool operator==(const Grid&) const = default;
};

/// Ball region Omega = B(0, R), centered at the origin.
struct BallRegion {
    double radius = 1.0;
};

template <int D>
Grid<D> make_grid(double half_width, int n_per_axis) {
    detail::require(half_width > 0.0, "grid half_width must be positive");
    detail::require(n_per_axis >= 8, "grid needs at least 8 nodes per axis");
    return Grid<D>{half_width, n_per_axis};
}

/// Checks that the ball sits strictly inside the grid with a 3-cell margin
/// (enough for the boundary collar and every stencil used on it).
template <int D>
void require_interior(const Grid<D>& grid, const BallRegion& ball) {
    detail::require(ball.radius > 0.0, "ball radius must be positive");
    detail::require(ball.radius + 3.0 * grid.spacing() <= grid.half_width,
                    "ball must be interior to the grid (3-cell margin)");
}

}  // namespace elastotat
