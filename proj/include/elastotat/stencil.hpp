#pragma once

#include <cstddef>
#include <vector>

#include "elastotat/grid.hpp"
#include "elastotat/parallel.hpp"

namespace elastotat {

// Second-order first-derivative stencil along one axis: centered in the
// interior, one-sided (3-point) at the two grid faces. diff_axis_transpose
// applies the exact matrix transpose, which the weak-form operator needs.

namespace detail {

inline void diff_line(const double* in, double* out, int n, double inv2h) {
    out[0] = (-3.0 * in[0] + 4.0 * in[1] - in[2]) * inv2h;
    for (int k = 1; k < n - 1; ++k) out[k] = (in[k + 1] - in[k - 1]) * inv2h;
    out[n - 1] = (3.0 * in[n - 1] - 4.0 * in[n - 2] + in[n - 3]) * inv2h;
}

inline void diff_line_transpose(const double* in, double* out, int n, double inv2h) {
    for (int k = 2; k <= n - 3; ++k) out[k] = (in[k - 1] - in[k + 1]) * inv2h;
    out[0] = (-3.0 * in[0] - in[1]) * inv2h;
    out[1] = (4.0 * in[0] - in[2]) * inv2h;
    out[2] += (-in[0]) * inv2h;
    out[n - 3] += in[n - 1] * inv2h;
    out[n - 2] = (in[n - 3] - 4.0 * in[n - 1]) * inv2h;
    out[n - 1] = (in[n - 2] + 3.0 * in[n - 1]) * inv2h;
}

template <int D, typename LineFn>
void sweep_lines(const Grid<D>& g, const double* in, double* out, int axis, LineFn&& line_fn) {
    const int n = g.n_per_axis;
    std::size_t stride = 1;
    for (int d = 0; d < axis; ++d) stride *= static_cast<std::size_t>(n);
    const std::size_t n_lines = g.num_nodes() / static_cast<std::size_t>(n);

    par::for_chunks(static_cast<std::int64_t>(n_lines), 64, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> buf(static_cast<std::size_t>(n)), obuf(static_cast<std::size_t>(n));
        for (std::int64_t l = lo; l < hi; ++l) {
            // Base offset of line l: decompose l over the axes other than `axis`.
            std::size_t rem = static_cast<std::size_t>(l), base = 0, s = 1;
            for (int d = 0; d < D; ++d) {
                if (d == axis) {
                    s *= static_cast<std::size_t>(n);
                    continue;
                }
                base += (rem % static_cast<std::size_t>(n)) * s;
                rem /= static_cast<std::size_t>(n);
                s *= static_cast<std::size_t>(n);
            }
            if (stride == 1) {
                line_fn(in + base, obuf.data(), n);
                for (int k = 0; k < n; ++k) out[base + static_cast<std::size_t>(k)] = obuf[k];
            } else {
                for (int k = 0; k < n; ++k) buf[k] = in[base + static_cast<std::size_t>(k) * stride];
                line_fn(buf.data(), obuf.data(), n);
                for (int k = 0; k < n; ++k) out[base + static_cast<std::size_t>(k) * stride] = obuf[k];
            }
        }
    });
}

}  // namespace detail

/// out = D_axis(in), the second-order partial derivative stencil.
template <int D>
void diff_axis(const Grid<D>& g, const double* in, int axis, double* out) {
    const double inv2h = 1.0 / (2.0 * g.spacing());
    detail::sweep_lines<D>(g, in, out, axis,
                           [inv2h](const double* i, double* o, int n) { detail::diff_line(i, o, n, inv2h); });
}

/// out = D_axis^T(in), exact transpose of diff_axis.
template <int D>
void diff_axis_transpose(const Grid<D>& g, const double* in, int axis, double* out) {
    const double inv2h = 1.0 / (2.0 * g.spacing());
    detail::sweep_lines<D>(g, in, out, axis, [inv2h](const double* i, double* o, int n) {
        detail::diff_line_transpose(i, o, n, inv2h);
    });
}

}  // namespace elastotat
