#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "elastotat/boundary.hpp"
#include "elastotat/elastic_operator.hpp"
#include "elastotat/fields.hpp"
#include "elastotat/medium.hpp"

namespace elastotat {

template <int D>
struct WaveState {
    VectorField<D> u;
    VectorField<D> u_t;
    double time = 0.0;
};

struct SolverConfig {
    double cfl = 0.5;                      // dt = cfl * h / c+
    std::optional<int> n_steps;            // explicit step count (must satisfy CFL)
    std::optional<int> snapshot_stride;    // record every k-th step when set
};

/// Time series of displacement at the boundary entries; includes t=0 and t=T.
template <int D>
struct BoundaryTrace {
    Grid<D> grid;  // grid the boundary set was built on
    BallRegion ball;
    std::vector<BoundaryEntry<D>> entries;
    double dt = 0.0;
    int n_steps = 0;
    std::vector<double> samples;  // [step][entry][component]

    double duration() const { return dt * n_steps; }
    std::size_t sample_index(int step, std::size_t entry, int comp) const {
        return (static_cast<std::size_t>(step) * entries.size() + entry) * D +
               static_cast<std::size_t>(comp);
    }
    double at(int step, std::size_t entry, int comp) const {
        return samples[sample_index(step, entry, comp)];
    }
};

// ---- grid padding and transfer ----

/**
 * Grid large enough that outer-wall reflections cannot reach the sphere
 * within time T: half_width >= R + c+ T/2 + 4h (out-and-back argument).
 * The spacing is preserved and nodes of the base grid stay on the lattice.
 */
template <int D>
Grid<D> pad_for_free_space(const Grid<D>& base, const BallRegion& ball, double T,
                           const Medium<D>& medium) {
    detail::require(T >= 0.0, "T must be nonnegative");
    const double h = base.spacing();
    const double target = ball.radius + 0.5 * medium.c_plus * T + 4.0 * h;
    int k = 0;
    if (target > base.half_width)
        k = static_cast<int>(std::ceil((target - base.half_width) / h - 1e-12));
    return Grid<D>{base.half_width + k * h, base.n_per_axis + 2 * k};
}

template <int D>
int embed_offset(const Grid<D>& base, const Grid<D>& padded) {
    const int k = (padded.n_per_axis - base.n_per_axis) / 2;
    detail::require(padded.n_per_axis == base.n_per_axis + 2 * k && k >= 0,
                    "padded grid is not a symmetric extension of the base grid");
    return k;
}

template <int D>
VectorField<D> embed(const VectorField<D>& f, const Grid<D>& padded) {
    const int k = embed_offset(f.grid, padded);
    VectorField<D> out(padded);
    for (std::size_t lin = 0; lin < f.grid.num_nodes(); ++lin) {
        auto idx = f.grid.from_linear(lin);
        std::array<int, D> pidx{};
        for (int d = 0; d < D; ++d) pidx[d] = idx[d] + k;
        const std::size_t pl = padded.to_linear(pidx);
        for (int c = 0; c < D; ++c) out.comp[c][pl] = f.comp[c][lin];
    }
    return out;
}

template <int D>
VectorField<D> restrict_to_grid(const VectorField<D>& f_pad, const Grid<D>& base) {
    const int k = embed_offset(base, f_pad.grid);
    VectorField<D> out(base);
    for (std::size_t lin = 0; lin < base.num_nodes(); ++lin) {
        auto idx = base.from_linear(lin);
        std::array<int, D> pidx{};
        for (int d = 0; d < D; ++d) pidx[d] = idx[d] + k;
        const std::size_t pl = f_pad.grid.to_linear(pidx);
        for (int c = 0; c < D; ++c) out.comp[c][lin] = f_pad.comp[c][pl];
    }
    return out;
}

/// Extends Lame fields to a larger grid by clamping to the nearest base node.
template <int D>
Medium<D> clamp_extend(const Medium<D>& m, const Grid<D>& padded) {
    const int k = embed_offset(m.grid, padded);
    ScalarField<D> lam(padded), mu(padded);
    const int nb = m.grid.n_per_axis;
    for (std::size_t lin = 0; lin < padded.num_nodes(); ++lin) {
        auto idx = padded.from_linear(lin);
        std::array<int, D> bidx{};
        for (int d = 0; d < D; ++d) bidx[d] = std::clamp(idx[d] - k, 0, nb - 1);
        const std::size_t bl = m.grid.to_linear(bidx);
        lam.v[lin] = m.lambda.v[bl];
        mu.v[lin] = m.mu.v[bl];
    }
    return build_medium(padded, lam, mu);
}

// ---- multilinear interpolation ----

template <int D>
std::array<double, D> interpolate_at(const VectorField<D>& f, const std::array<double, D>& p) {
    const Grid<D>& g = f.grid;
    const double h = g.spacing();
    std::array<int, D> cell{};
    std::array<double, D> t{};
    for (int d = 0; d < D; ++d) {
        const double s = (p[d] + g.half_width) / h;
        int i = static_cast<int>(std::floor(s));
        i = std::clamp(i, 0, g.n_per_axis - 2);
        cell[d] = i;
        t[d] = std::clamp(s - i, 0.0, 1.0);
    }
    std::array<double, D> out{};
    const int corners = 1 << D;
    for (int m = 0; m < corners; ++m) {
        double w = 1.0;
        std::array<int, D> idx{};
        for (int d = 0; d < D; ++d) {
            const int bit = (m >> d) & 1;
            idx[d] = cell[d] + bit;
            w *= bit ? t[d] : 1.0 - t[d];
        }
        const std::size_t lin = g.to_linear(idx);
        for (int c = 0; c < D; ++c) out[c] += w * f.comp[c][lin];
    }
    return out;
}

// ---- leapfrog core ----

/// Two-level leapfrog stepper: next = 2 cur - prev - dt^2 P cur.
template <int D>
class Leapfrog {
public:
    Leapfrog(const Medium<D>& medium, double dt)
        : medium_(medium), dt_(dt), ws_(medium.grid), pu_(medium.grid) {}

    double dt() const { return dt_; }

    /// prev := next, then swapped so (prev, cur) -> (cur, next).
    void advance(VectorField<D>& prev, VectorField<D>& cur) {
        apply_P(medium_, cur, pu_, ws_);
        const double dt2 = dt_ * dt_;
        for (int c = 0; c < D; ++c) {
            auto& pc = prev.comp[c];
            const auto& cc = cur.comp[c];
            const auto& ac = pu_.comp[c];
            par::for_each_index(static_cast<std::int64_t>(pc.size()), [&](std::int64_t i) {
                pc[i] = 2.0 * cc[i] - pc[i] - dt2 * ac[i];
            });
        }
        std::swap(prev, cur);
    }

    /// First step consistent with the given initial velocity:
    /// u1 = u0 + dt ut0 - (dt^2/2) P u0.
    VectorField<D> first_step(const VectorField<D>& u0, const VectorField<D>& ut0) {
        apply_P(medium_, u0, pu_, ws_);
        VectorField<D> u1(medium_.grid);
        const double dt2h = 0.5 * dt_ * dt_;
        for (int c = 0; c < D; ++c) {
            auto& oc = u1.comp[c];
            const auto& u0c = u0.comp[c];
            const auto& vc = ut0.comp[c];
            const auto& ac = pu_.comp[c];
            par::for_each_index(static_cast<std::int64_t>(oc.size()), [&](std::int64_t i) {
                oc[i] = u0c[i] + dt_ * vc[i] - dt2h * ac[i];
            });
        }
        return u1;
    }

    /// One-sided second-order time derivative at the newest state.
    VectorField<D> end_velocity(const VectorField<D>& prev, const VectorField<D>& cur,
                                double sign) {
        apply_P(medium_, cur, pu_, ws_);
        VectorField<D> v(medium_.grid);
        for (int c = 0; c < D; ++c) {
            auto& vc = v.comp[c];
            const auto& pc = prev.comp[c];
            const auto& cc = cur.comp[c];
            const auto& ac = pu_.comp[c];
            par::for_each_index(static_cast<std::int64_t>(vc.size()), [&](std::int64_t i) {
                vc[i] = sign * ((cc[i] - pc[i]) / dt_ - 0.5 * dt_ * ac[i]);
            });
        }
        return v;
    }

private:
    const Medium<D>& medium_;
    double dt_;
    OperatorWorkspace<D> ws_;
    VectorField<D> pu_;
};

/// Leapfrog's exactly conserved discrete energy for two consecutive states
/// (paper normalization, elastic + kinetic without the 1/2).
template <int D>
double discrete_energy(const Medium<D>& medium, const VectorField<D>& u_a,
                       const VectorField<D>& u_b, double dt) {
    VectorField<D> diff = linear_combination(1.0 / dt, u_b, -1.0 / dt, u_a);
    return l2_inner(medium.grid, diff, diff, Region::full()) +
           hd_inner(medium, u_a, u_b, Region::full());
}

namespace detail {

template <int D>
double max_abs_outside(const VectorField<D>& f, const BallRegion& ball) {
    double m = 0.0;
    for (std::size_t i = 0; i < f.num_nodes(); ++i) {
        if (f.grid.radius(i) > ball.radius)
            for (int c = 0; c < D; ++c) m = std::max(m, std::abs(f.comp[c][i]));
    }
    return m;
}

template <int D>
void record_trace_step(BoundaryTrace<D>& trace, int step, const VectorField<D>& u,
                       const std::vector<std::size_t>& entry_nodes) {
    for (std::size_t e = 0; e < trace.entries.size(); ++e) {
        const std::size_t lin = entry_nodes[e];
        for (int c = 0; c < D; ++c)
            trace.samples[trace.sample_index(step, e, c)] = u.comp[c][lin];
    }
}

inline int resolve_steps(double T, double dt_max, const SolverConfig& cfg) {
    detail::require(cfg.cfl > 0.0 && cfg.cfl <= 1.0, "cfl must lie in (0, 1]");
    int n;
    if (cfg.n_steps) {
        n = *cfg.n_steps;
        detail::require(n >= 1, "n_steps must be at least 1");
        detail::require(T / n <= dt_max * (1.0 + 1e-12),
                        "CFL violation: dt too large for the fastest speed");
    } else {
        n = std::max(1, static_cast<int>(std::ceil(T / dt_max - 1e-12)));
    }
    return n;
}

}  // namespace detail

template <int D>
struct ForwardResult {
    BoundaryTrace<D> trace;  // empty entry list when no boundary set was given
    WaveState<D> final_state;           // restricted to the base grid
    std::vector<WaveState<D>> snapshots;  // on the padded grid, u only
    Grid<D> padded_grid;
};

/**
 * Solves the free-space Cauchy problem (u(0)=f, u_t(0)=0) over [0,T] on a
 * padded Dirichlet box and records the boundary trace Lambda f. Padding makes
 * the run exact free-space evolution near the sphere for t <= T by finite
 * speed of propagation.
 */
template <int D>
ForwardResult<D> forward_solve(const Medium<D>& medium, const VectorField<D>& f, double T,
                               const SolverConfig& cfg, const BoundarySet<D>* boundary) {
    detail::require(f.grid == medium.grid, "initial data must live on the medium grid");
    detail::require(T > 0.0, "T must be positive");
    if (boundary)
        detail::require(boundary->grid == medium.grid, "boundary set grid mismatch");

    const BallRegion ball = boundary ? boundary->ball : BallRegion{medium.grid.half_width};
    if (boundary) {
        const double peak = max_abs(f);
        detail::require(peak == 0.0 || detail::max_abs_outside(f, ball) <= 1e-12 * peak,
                        "initial data is not supported in the ball");
    }

    const double h = medium.grid.spacing();
    const double dt_max = cfg.cfl * h / medium.c_plus;
    const int n_steps = detail::resolve_steps(T, dt_max, cfg);
    const double dt = T / n_steps;

    ForwardResult<D> out;
    out.padded_grid = pad_for_free_space(medium.grid, ball, T, medium);
    const Medium<D> pm = clamp_extend(medium, out.padded_grid);

    // Trace samples are read directly at the entries' grid nodes, which keeps
    // the measurement and the backward collar prescription exactly consistent
    // (the entry's sphere position is where the sample is attributed).
    std::vector<std::size_t> entry_nodes;
    if (boundary) {
        out.trace.grid = medium.grid;
        out.trace.ball = ball;
        out.trace.entries = boundary->entries;
        out.trace.dt = dt;
        out.trace.n_steps = n_steps;
        out.trace.samples.assign(
            static_cast<std::size_t>(n_steps + 1) * boundary->entries.size() * D, 0.0);
        const int k = embed_offset(medium.grid, out.padded_grid);
        entry_nodes.reserve(boundary->entries.size());
        for (const auto& e : boundary->entries) {
            auto idx = medium.grid.from_linear(e.node);
            std::array<int, D> pidx{};
            for (int d = 0; d < D; ++d) pidx[d] = idx[d] + k;
            entry_nodes.push_back(out.padded_grid.to_linear(pidx));
        }
    }

    VectorField<D> prev = embed(f, out.padded_grid);
    if (boundary) detail::record_trace_step(out.trace, 0, prev, entry_nodes);
    if (cfg.snapshot_stride)
        out.snapshots.push_back({prev, VectorField<D>(out.padded_grid), 0.0});

    Leapfrog<D> lf(pm, dt);
    VectorField<D> cur = lf.first_step(prev, VectorField<D>(out.padded_grid));
    if (boundary) detail::record_trace_step(out.trace, 1, cur, entry_nodes);
    if (cfg.snapshot_stride && 1 % *cfg.snapshot_stride == 0)
        out.snapshots.push_back({cur, VectorField<D>(out.padded_grid), dt});

    for (int s = 2; s <= n_steps; ++s) {
        lf.advance(prev, cur);
        if (boundary) detail::record_trace_step(out.trace, s, cur, entry_nodes);
        if (cfg.snapshot_stride && (s % *cfg.snapshot_stride == 0 || s == n_steps))
            out.snapshots.push_back({cur, VectorField<D>(out.padded_grid), s * dt});
    }

    // Central-difference velocity at T via one extra (virtual) step.
    VectorField<D> u_prev_copy = prev;  // u^{N-1}
    VectorField<D> u_final = cur;       // u^N
    lf.advance(prev, cur);              // cur = u^{N+1}
    VectorField<D> ut(out.padded_grid);
    for (int c = 0; c < D; ++c) {
        par::for_each_index(static_cast<std::int64_t>(ut.comp[c].size()), [&](std::int64_t i) {
            ut.comp[c][i] = (cur.comp[c][i] - u_prev_copy.comp[c][i]) / (2.0 * dt);
        });
    }

    out.final_state.u = restrict_to_grid(u_final, medium.grid);
    out.final_state.u_t = restrict_to_grid(ut, medium.grid);
    out.final_state.time = T;
    return out;
}

/// The measurement operator: Lambda f = u restricted to [0,T] x dOmega.
template <int D>
BoundaryTrace<D> apply_lambda(const Medium<D>& medium, const VectorField<D>& f, double T,
                              const SolverConfig& cfg, const BoundarySet<D>& boundary) {
    SolverConfig c = cfg;
    c.snapshot_stride.reset();
    return forward_solve(medium, f, T, c, &boundary).trace;
}

// ---- Dirichlet initial-boundary solver on the ball ----

enum class TimeDirection { Forward, Backward };

struct DirichletOptions {
    std::optional<int> snapshot_stride;
    bool record_energy = false;
};

template <int D>
struct DirichletResult {
    WaveState<D> final_state;  // state at the end of the run (t=T forward, t=0 backward)
    std::vector<WaveState<D>> snapshots;
    std::vector<double> discrete_energy;  // conserved form, one value per step taken
};

/**
 * Leapfrog evolution on the nodes interior to the ball; at collar nodes the
 * value is prescribed from the boundary data each step, and nodes beyond the
 * collar are held at zero. `boundary_samples` uses the trace layout
 * [step][entry][component] with n_steps+1 sample rows (nullptr means zero
 * data). Backward runs consume the samples in reverse order.
 */
template <int D>
DirichletResult<D> dirichlet_solve(const Medium<D>& medium, const BoundarySet<D>& bset,
                                   const VectorField<D>& u0, const VectorField<D>& ut0,
                                   const std::vector<double>* boundary_samples, int n_steps,
                                   double dt, TimeDirection direction,
                                   const DirichletOptions& opt = {}) {
    detail::require(u0.grid == medium.grid && ut0.grid == medium.grid,
                    "initial data must live on the medium grid");
    detail::require(bset.grid == medium.grid, "boundary set grid mismatch");
    detail::require(n_steps >= 1, "n_steps must be at least 1");
    detail::require(dt > 0.0, "dt must be positive");
    detail::require(dt <= medium.grid.spacing() / medium.c_plus * (1.0 + 1e-9),
                    "CFL violation in dirichlet_solve");
    if (boundary_samples)
        detail::require(boundary_samples->size() ==
                            static_cast<std::size_t>(n_steps + 1) * bset.entries.size() * D,
                        "boundary data time grid mismatch");

    const double R = bset.ball.radius;
    const double h = medium.grid.spacing();
    std::vector<std::size_t> dead;
    for (std::size_t i = 0; i < medium.grid.num_nodes(); ++i)
        if (medium.grid.radius(i) > R + h) dead.push_back(i);

    // Sample index in solve order; backward runs read the data reversed.
    auto data_row = [&](int s) {
        return direction == TimeDirection::Forward ? s : n_steps - s;
    };
    auto impose = [&](VectorField<D>& u, int s) {
        if (boundary_samples) {
            const double* row =
                boundary_samples->data() +
                static_cast<std::size_t>(data_row(s)) * bset.entries.size() * D;
            for (const auto& [node, entry] : bset.collar)
                for (int c = 0; c < D; ++c) u.comp[c][node] = row[entry * D + c];
        } else {
            for (const auto& [node, entry] : bset.collar)
                for (int c = 0; c < D; ++c) u.comp[c][node] = 0.0;
        }
        for (std::size_t i : dead)
            for (int c = 0; c < D; ++c) u.comp[c][i] = 0.0;
    };

    DirichletResult<D> res;
    const double t_sign = direction == TimeDirection::Forward ? 1.0 : -1.0;
    const double t_start = direction == TimeDirection::Forward ? 0.0 : n_steps * dt;

    VectorField<D> prev = u0;
    impose(prev, 0);
    if (opt.snapshot_stride)
        res.snapshots.push_back({prev, VectorField<D>(medium.grid), t_start});

    Leapfrog<D> lf(medium, dt);
    VectorField<D> cur = lf.first_step(prev, ut0);
    impose(cur, 1);
    if (opt.record_energy) res.discrete_energy.push_back(discrete_energy(medium, prev, cur, dt));
    if (opt.snapshot_stride && 1 % *opt.snapshot_stride == 0)
        res.snapshots.push_back({cur, VectorField<D>(medium.grid), t_start + t_sign * dt});

    for (int s = 2; s <= n_steps; ++s) {
        lf.advance(prev, cur);
        impose(cur, s);
        if (opt.record_energy)
            res.discrete_energy.push_back(discrete_energy(medium, prev, cur, dt));
        if (opt.snapshot_stride && (s % *opt.snapshot_stride == 0 || s == n_steps))
            res.snapshots.push_back({cur, VectorField<D>(medium.grid), t_start + t_sign * s * dt});
    }

    res.final_state.u_t = lf.end_velocity(prev, cur, t_sign);
    res.final_state.u = std::move(cur);
    res.final_state.time = direction == TimeDirection::Forward ? n_steps * dt : 0.0;
    return res;
}

}  // namespace elastotat
