#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "elastotat/fields.hpp"
#include "elastotat/grid.hpp"
#include "elastotat/medium.hpp"

namespace elastotat {

class RayError : public Error {
public:
    explicit RayError(const std::string& msg) : Error(msg) {}
};

/**
 * C^1 tensor-product cubic (Catmull-Rom) interpolant of a scalar field.
 * Reproduces quadratic polynomials exactly away from the grid faces, so
 * c(x) = |x| media give exact squared-speed values and gradients.
 */
template <int D>
class CubicInterpolant {
public:
    explicit CubicInterpolant(const ScalarField<D>& f) : grid_(f.grid), v_(f.v) {}

    double value(const std::array<double, D>& p) const {
        Weights w = weights(p);
        return accumulate(w, -1);
    }

    /// Value and gradient in one pass.
    double value_gradient(const std::array<double, D>& p, std::array<double, D>& grad) const {
        Weights w = weights(p);
        for (int d = 0; d < D; ++d) grad[d] = accumulate(w, d);
        return accumulate(w, -1);
    }

private:
    struct Weights {
        std::array<int, D> base;                    // index of tap -1
        std::array<std::array<double, 4>, D> w;     // value weights
        std::array<std::array<double, 4>, D> dw;    // d/dx weights
    };

    Weights weights(const std::array<double, D>& p) const {
        Weights out;
        const double h = grid_.spacing();
        const int n = grid_.n_per_axis;
        for (int d = 0; d < D; ++d) {
            const double s = (p[d] + grid_.half_width) / h;
            int i = static_cast<int>(std::floor(s));
            i = std::clamp(i, 0, n - 2);
            const double t = std::clamp(s - i, 0.0, 1.0);
            out.base[d] = i - 1;
            const double t2 = t * t, t3 = t2 * t;
            out.w[d] = {-0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1.0,
                        -1.5 * t3 + 2.0 * t2 + 0.5 * t, 0.5 * t3 - 0.5 * t2};
            out.dw[d] = {(-1.5 * t2 + 2.0 * t - 0.5) / h, (4.5 * t2 - 5.0 * t) / h,
                         (-4.5 * t2 + 4.0 * t + 0.5) / h, (1.5 * t2 - t) / h};
        }
        return out;
    }

    // diff_axis == -1 for the value, else the axis whose weight is differentiated.
    double accumulate(const Weights& w, int diff_axis) const {
        const int n = grid_.n_per_axis;
        double sum = 0.0;
        const int taps = 1 << (2 * D);  // 4^D corners
        for (int m = 0; m < taps; ++m) {
            double c = 1.0;
            std::array<int, D> idx{};
            int mm = m;
            for (int d = 0; d < D; ++d) {
                const int tap = mm & 3;
                mm >>= 2;
                idx[d] = std::clamp(w.base[d] + tap, 0, n - 1);
                c *= (d == diff_axis) ? w.dw[d][tap] : w.w[d][tap];
            }
            if (c != 0.0) sum += c * v_[grid_.to_linear(idx)];
        }
        return sum;
    }

    Grid<D> grid_;
    std::vector<double> v_;
};

template <int D>
struct RayState {
    double t;
    std::array<double, D> x;
    std::array<double, D> xi;
};

template <int D>
struct Ray {
    std::string speed_label;
    std::vector<RayState<D>> states;
    std::optional<double> exit_time;  // empty means TRAPPED(t_max)
    double t_max = 0.0;
    double hamiltonian_drift = 0.0;   // max |H - H0| / H0 along the path
    bool flagged = false;             // drift above the acceptance threshold
    bool trapped() const { return !exit_time.has_value(); }
};

struct RayOptions {
    double rel_tol = 1e-10;       // RK45 error control
    double drift_flag = 1e-6;     // above this the ray is flagged
    double drift_abort = 1e-4;    // above this integration aborts
    std::int64_t max_steps = 2000000;
};

namespace detail {

template <int D>
using RayVec = std::array<double, 2 * D>;

template <int D>
RayVec<D> ray_rhs(const CubicInterpolant<D>& c2, const RayVec<D>& y) {
    std::array<double, D> x{}, xi{};
    for (int d = 0; d < D; ++d) {
        x[d] = y[d];
        xi[d] = y[D + d];
    }
    std::array<double, D> grad{};
    const double c2v = c2.value_gradient(x, grad);
    double xi2 = 0.0;
    for (int d = 0; d < D; ++d) xi2 += xi[d] * xi[d];
    RayVec<D> f{};
    for (int d = 0; d < D; ++d) {
        f[d] = c2v * xi[d];
        f[D + d] = -0.5 * grad[d] * xi2;
    }
    return f;
}

// One Dormand-Prince 5(4) step; returns the 5th-order result and error estimate.
template <int D>
void dp45_step(const CubicInterpolant<D>& c2, const RayVec<D>& y, double h, RayVec<D>& y5,
               double& err_norm) {
    constexpr int N = 2 * D;
    const RayVec<D> k1 = ray_rhs<D>(c2, y);
    RayVec<D> k2, k3, k4, k5, k6, k7, t;
    auto stage = [&](std::initializer_list<std::pair<const RayVec<D>*, double>> terms) {
        for (int i = 0; i < N; ++i) {
            double s = y[i];
            for (const auto& [k, a] : terms) s += h * a * (*k)[i];
            t[i] = s;
        }
        return ray_rhs<D>(c2, t);
    };
    k2 = stage({{&k1, 1.0 / 5}});
    k3 = stage({{&k1, 3.0 / 40}, {&k2, 9.0 / 40}});
    k4 = stage({{&k1, 44.0 / 45}, {&k2, -56.0 / 15}, {&k3, 32.0 / 9}});
    k5 = stage({{&k1, 19372.0 / 6561}, {&k2, -25360.0 / 2187}, {&k3, 64448.0 / 6561},
                {&k4, -212.0 / 729}});
    k6 = stage({{&k1, 9017.0 / 3168}, {&k2, -355.0 / 33}, {&k3, 46732.0 / 5247},
                {&k4, 49.0 / 176}, {&k5, -5103.0 / 18656}});
    for (int i = 0; i < N; ++i)
        y5[i] = y[i] + h * ((35.0 / 384) * k1[i] + (500.0 / 1113) * k3[i] + (125.0 / 192) * k4[i] +
                            (-2187.0 / 6784) * k5[i] + (11.0 / 84) * k6[i]);
    k7 = ray_rhs<D>(c2, y5);

    err_norm = 0.0;
    for (int i = 0; i < N; ++i) {
        const double y4 = y[i] + h * ((5179.0 / 57600) * k1[i] + (7571.0 / 16695) * k3[i] +
                                      (393.0 / 640) * k4[i] + (-92097.0 / 339200) * k5[i] +
                                      (187.0 / 2100) * k6[i] + (1.0 / 40) * k7[i]);
        err_norm = std::max(err_norm, std::abs(y5[i] - y4));
    }
}

template <int D>
double norm2(const std::array<double, D>& x) {
    double s = 0.0;
    for (int d = 0; d < D; ++d) s += x[d] * x[d];
    return std::sqrt(s);
}

}  // namespace detail

/**
 * Integrates the bicharacteristic system
 *   x' = c^2(x) xi,   xi' = -1/2 grad(c^2)(x) |xi|^2
 * from (x0, xi0) until |x| > R or t_max, with the momentum rescaled so that
 * c(x0)|xi0| = 1 (reported times are physical transit times). The Hamiltonian
 * H = 1/2 c^2 |xi|^2 is the primary correctness monitor: relative drift above
 * drift_flag flags the ray, above drift_abort integration aborts.
 */
template <int D>
Ray<D> integrate_ray(const CubicInterpolant<D>& c2, const BallRegion& ball,
                     const std::array<double, D>& x0, const std::array<double, D>& xi0,
                     double t_max, const RayOptions& opts = {}, const std::string& label = "") {
    detail::require(detail::norm2<D>(x0) < ball.radius, "ray seed must start inside the ball");
    detail::require(t_max > 0.0, "t_max must be positive");

    const double c20 = c2.value(x0);
    detail::require(c20 > 0.0, "speed must be positive at the seed");
    const double xin = detail::norm2<D>(xi0);
    detail::require(xin > 0.0, "seed direction must be nonzero");

    detail::RayVec<D> y{};
    for (int d = 0; d < D; ++d) {
        y[d] = x0[d];
        y[D + d] = xi0[d] / (xin * std::sqrt(c20));  // c(x0)|xi| = 1
    }

    auto hamiltonian = [&](const detail::RayVec<D>& yy) {
        std::array<double, D> x{}, xi{};
        for (int d = 0; d < D; ++d) {
            x[d] = yy[d];
            xi[d] = yy[D + d];
        }
        double xi2 = 0.0;
        for (int d = 0; d < D; ++d) xi2 += xi[d] * xi[d];
        return 0.5 * c2.value(x) * xi2;
    };
    const double H0 = hamiltonian(y);

    Ray<D> ray;
    ray.speed_label = label;
    ray.t_max = t_max;
    auto push_state = [&](double t, const detail::RayVec<D>& yy) {
        RayState<D> st;
        st.t = t;
        for (int d = 0; d < D; ++d) {
            st.x[d] = yy[d];
            st.xi[d] = yy[D + d];
        }
        ray.states.push_back(st);
    };
    push_state(0.0, y);

    double t = 0.0;
    double hstep = 0.05 * ball.radius;  // unit physical speed: ~R/20 first try
    const double hmin = 1e-14 * std::max(1.0, t_max);
    std::int64_t steps = 0;

    while (t < t_max) {
        if (++steps > opts.max_steps) throw RayError("ray integration exceeded max_steps");
        hstep = std::min(hstep, t_max - t);
        detail::RayVec<D> ynew;
        double err;
        detail::dp45_step<D>(c2, y, hstep, ynew, err);
        double ymax = 1.0;
        for (double v : ynew) ymax = std::max(ymax, std::abs(v));
        const double tol = opts.rel_tol * ymax;
        if (err > tol && hstep > hmin) {
            hstep = std::max(hmin, 0.9 * hstep * std::pow(tol / (err + 1e-300), 0.2));
            continue;
        }
        // accepted
        const double h_used = hstep;
        const double drift = std::abs(hamiltonian(ynew) - H0) / H0;
        ray.hamiltonian_drift = std::max(ray.hamiltonian_drift, drift);
        if (ray.hamiltonian_drift > opts.drift_abort)
            throw RayError("Hamiltonian drift " + std::to_string(ray.hamiltonian_drift) +
                           " exceeds the abort threshold (interpolation too rough)");

        std::array<double, D> xnew{};
        for (int d = 0; d < D; ++d) xnew[d] = ynew[d];
        if (detail::norm2<D>(xnew) > ball.radius) {
            // Bisect the crossing within this step.
            double lo = 0.0, hi = h_used;
            detail::RayVec<D> ymid;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                double e2;
                detail::dp45_step<D>(c2, y, mid, ymid, e2);
                std::array<double, D> xm{};
                for (int d = 0; d < D; ++d) xm[d] = ymid[d];
                if (detail::norm2<D>(xm) > ball.radius)
                    hi = mid;
                else
                    lo = mid;
                if (hi - lo < 1e-15 * std::max(1.0, h_used)) break;
            }
            double e2;
            detail::dp45_step<D>(c2, y, hi, ymid, e2);
            t += hi;
            push_state(t, ymid);
            ray.exit_time = t;
            break;
        }

        t += h_used;
        y = ynew;
        push_state(t, y);
        if (err > 0.0) hstep = std::min(4.0 * h_used, 0.9 * h_used * std::pow(tol / err, 0.2));
        else hstep = 4.0 * h_used;
    }

    ray.flagged = ray.hamiltonian_drift > opts.drift_flag;
    return ray;
}

/// Convenience overload taking speed samples c (not squared).
template <int D>
Ray<D> integrate_ray(const ScalarField<D>& speed, const BallRegion& ball,
                     const std::array<double, D>& x0, const std::array<double, D>& xi0,
                     double t_max, const RayOptions& opts = {}, const std::string& label = "") {
    ScalarField<D> c2(speed.grid);
    for (std::size_t i = 0; i < c2.v.size(); ++i) c2.v[i] = speed.v[i] * speed.v[i];
    return integrate_ray(CubicInterpolant<D>(c2), ball, x0, xi0, t_max, opts, label);
}

// ---- seed generation and trapping reports ----

namespace detail {

inline double halton(std::int64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

}  // namespace detail

template <int D>
struct RaySeed {
    std::array<double, D> x0;
    std::array<double, D> dir;
};

/**
 * Deterministic low-discrepancy seeds over Omega x S^{d-1}. The first seed is
 * the canonical (origin, e1); later seeds come from a Halton sequence (points
 * outside the ball rejected), so seed sets are nested as n grows.
 */
template <int D>
std::vector<RaySeed<D>> ray_seeds(const BallRegion& ball, int n_seeds) {
    detail::require(n_seeds >= 1, "need at least one seed");
    std::vector<RaySeed<D>> seeds;
    seeds.reserve(n_seeds);
    RaySeed<D> first;
    first.x0.fill(0.0);
    first.dir.fill(0.0);
    first.dir[0] = 1.0;
    seeds.push_back(first);

    const int pos_bases[3] = {2, 3, 5};
    std::int64_t idx = 1;
    while (static_cast<int>(seeds.size()) < n_seeds) {
        RaySeed<D> s;
        double r2 = 0.0;
        for (int d = 0; d < D; ++d) {
            s.x0[d] = ball.radius * (2.0 * detail::halton(idx, pos_bases[d]) - 1.0);
            r2 += s.x0[d] * s.x0[d];
        }
        const bool inside = r2 < 0.96 * ball.radius * ball.radius;  // keep off the rim
        if (inside) {
            if constexpr (D == 2) {
                const double th = 2.0 * std::numbers::pi * detail::halton(idx, 7);
                s.dir = {std::cos(th), std::sin(th)};
            } else {
                const double z = 2.0 * detail::halton(idx, 7) - 1.0;
                const double phi = 2.0 * std::numbers::pi * detail::halton(idx, 11);
                const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
                s.dir = {rr * std::cos(phi), rr * std::sin(phi), z};
            }
            seeds.push_back(s);
        }
        ++idx;
    }
    return seeds;
}

struct SpeedTrappingStats {
    std::string label;
    double max_exit_time = 0.0;
    int trapped = 0;
    int flagged = 0;
};

struct TrappingReport {
    int samples = 0;
    double t_max = 0.0;
    double max_exit_time = 0.0;  // over accepted (unflagged, exited) rays
    int trapped_count = 0;
    int flagged_count = 0;
    bool non_trapping = false;
    std::vector<SpeedTrappingStats> per_speed;
};

/// Traces one speed field for every seed and aggregates the statistics.
template <int D>
SpeedTrappingStats trace_speed(const CubicInterpolant<D>& c2, const BallRegion& ball,
                               const std::vector<RaySeed<D>>& seeds, double t_max,
                               const RayOptions& opts, const std::string& label) {
    SpeedTrappingStats st;
    st.label = label;
    for (const auto& s : seeds) {
        Ray<D> ray;
        try {
            ray = integrate_ray<D>(c2, ball, s.x0, s.dir, t_max, opts, label);
        } catch (const RayError&) {
            st.flagged += 1;
            continue;
        }
        if (ray.flagged) {
            st.flagged += 1;
        } else if (ray.trapped()) {
            st.trapped += 1;
        } else {
            st.max_exit_time = std::max(st.max_exit_time, *ray.exit_time);
        }
    }
    return st;
}

/**
 * Samples exit times for both elastic speed fields and estimates T(Omega).
 * Sampling only bounds the supremum from below; callers wanting a safe
 * reconstruction time should multiply by a safety factor.
 */
template <int D>
TrappingReport estimate_T_Omega(const Medium<D>& medium, const BallRegion& ball, int n_seeds,
                                double t_max, const RayOptions& opts = {}) {
    const auto seeds = ray_seeds<D>(ball, n_seeds);

    ScalarField<D> c1sq(medium.grid), c2sq(medium.grid);
    for (std::size_t i = 0; i < medium.grid.num_nodes(); ++i) {
        c1sq.v[i] = medium.c1.v[i] * medium.c1.v[i];
        c2sq.v[i] = medium.c2.v[i] * medium.c2.v[i];
    }

    TrappingReport rep;
    rep.samples = n_seeds;
    rep.t_max = t_max;
    rep.per_speed.push_back(
        trace_speed(CubicInterpolant<D>(c1sq), ball, seeds, t_max, opts, "P"));
    rep.per_speed.push_back(
        trace_speed(CubicInterpolant<D>(c2sq), ball, seeds, t_max, opts, "S"));
    for (const auto& st : rep.per_speed) {
        rep.max_exit_time = std::max(rep.max_exit_time, st.max_exit_time);
        rep.trapped_count += st.trapped;
        rep.flagged_count += st.flagged;
    }
    rep.non_trapping = rep.trapped_count == 0;
    return rep;
}

}  // namespace elastotat
