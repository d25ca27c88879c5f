#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "elastotat/fields.hpp"
#include "elastotat/grid.hpp"
#include "elastotat/stencil.hpp"

namespace elastotat {

/**
 * Lame parameter fields with the derived wave-speed data.
 *
 * c1 = sqrt(lambda + 2 mu) and c2 = sqrt(mu) are the P- and S-speeds;
 * a1 = 1/(lambda + 2 mu) and a2 = 1/mu are the reciprocal squared speeds.
 * The condition checker runs every test on both a-fields, so nothing
 * depends on which of the two carries which label.
 */
template <int D>
struct Medium {
    Grid<D> grid;
    ScalarField<D> lambda, mu;
    ScalarField<D> c1, c2, a1, a2;
    double c_plus = 0.0;   // sup c1 over grid nodes
    double c_minus = 0.0;  // inf c2 over grid nodes
};

template <int D>
Medium<D> build_medium(const Grid<D>& grid, const ScalarField<D>& lambda,
                       const ScalarField<D>& mu, double alpha0 = 1e-8) {
    detail::require(lambda.grid == grid && mu.grid == grid, "Lame fields must live on the grid");
    const std::size_t n = grid.num_nodes();
    detail::require(lambda.v.size() == n && mu.v.size() == n, "Lame field size mismatch");

    Medium<D> m;
    m.grid = grid;
    m.lambda = lambda;
    m.mu = mu;
    m.c1 = ScalarField<D>(grid);
    m.c2 = ScalarField<D>(grid);
    m.a1 = ScalarField<D>(grid);
    m.a2 = ScalarField<D>(grid);
    m.c_plus = 0.0;
    m.c_minus = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double l = lambda.v[i], u = mu.v[i];
        detail::require(std::isfinite(l) && std::isfinite(u), "Lame fields must be finite");
        detail::require(l > alpha0 && u > alpha0, "Lame fields must exceed alpha0 everywhere");
        const double p = l + 2.0 * u;
        m.c1.v[i] = std::sqrt(p);
        m.c2.v[i] = std::sqrt(u);
        m.a1.v[i] = 1.0 / p;
        m.a2.v[i] = 1.0 / u;
        m.c_plus = std::max(m.c_plus, m.c1.v[i]);
        m.c_minus = std::min(m.c_minus, m.c2.v[i]);
    }
    return m;
}

/// Worst-case witness of a pointwise condition: node, position, which a-field.
struct ConditionWitness {
    std::size_t node = 0;
    std::vector<double> position;
    int field = 0;  // 1 -> a1, 2 -> a2
    double margin = std::numeric_limits<double>::infinity();
};

struct ConditionReport {
    double c_plus = 0.0;
    double c_minus = 0.0;
    bool speed_ratio_ok = false;  // c+ < 3 c-

    double theta_window_lo = 0.0;  // (c+/3, c-)
    double theta_window_hi = 0.0;
    bool theta_window_nonempty = false;
    double theta_used = 0.0;
    bool theta_was_searched = false;
    std::vector<std::array<double, 2>> theta_margin_curve;  // (theta, worst margin), search only

    double epsilon_used = 0.0;
    double T_used = 0.0;
    double T_min = 0.0;  // 2(R+eps)/(3 theta - c+)
    bool T_ok = false;

    double evaluation_radius = 0.0;  // R + T c+/2 + eps, intersected with the grid
    bool gradient_condition_ok = false;
    ConditionWitness gradient_worst;
    bool condition2_ok = false;  // theta^2 a_j <= 1
    ConditionWitness condition2_worst;
    bool noncharacteristic_ok = false;  // theta^2 a_j < 1 away from the origin
    ConditionWitness noncharacteristic_worst;

    bool overall = false;
};

namespace detail {

template <int D>
std::array<ScalarField<D>, D> field_gradient(const ScalarField<D>& f) {
    std::array<ScalarField<D>, D> g;
    for (int d = 0; d < D; ++d) {
        g[d] = ScalarField<D>(f.grid);
        diff_axis<D>(f.grid, f.v.data(), d, g[d].v.data());
    }
    return g;
}

// Gradient condition of the unique-continuation theorem, as printed:
//   theta^2 a (a + a^{-1/2} |t grad a|) < a + 1/2 x . grad a
// evaluated with |t| = 3T/2 (the parameters are time-independent, so that is
// the worst case over the time slab).
template <int D>
double gradient_margin(double theta, double a, const std::array<double, D>& grad_a,
                       const std::array<double, D>& x, double t_abs) {
    double gnorm = 0.0, xdotg = 0.0;
    for (int d = 0; d < D; ++d) {
        gnorm += grad_a[d] * grad_a[d];
        xdotg += x[d] * grad_a[d];
    }
    gnorm = std::sqrt(gnorm);
    const double left = theta * theta * a * (a + t_abs * gnorm / std::sqrt(a));
    const double right = a + 0.5 * xdotg;
    return right - left;
}

}  // namespace detail

/**
 * Checks the sufficient conditions on the Lame parameters for a given
 * observation time T and slack epsilon. When theta is omitted, a 64-point
 * lattice over the open window (c+/3, c-) is searched and the theta with the
 * best worst-case gradient margin is used.
 */
template <int D>
ConditionReport check_conditions(const Medium<D>& medium, double R, double T, double epsilon,
                                 std::optional<double> theta = std::nullopt) {
    detail::require(R > 0.0 && T > 0.0 && epsilon > 0.0, "R, T, epsilon must be positive");

    ConditionReport rep;
    rep.c_plus = medium.c_plus;
    rep.c_minus = medium.c_minus;
    rep.speed_ratio_ok = medium.c_plus < 3.0 * medium.c_minus;
    rep.theta_window_lo = medium.c_plus / 3.0;
    rep.theta_window_hi = medium.c_minus;
    rep.theta_window_nonempty = rep.theta_window_lo < rep.theta_window_hi;
    rep.epsilon_used = epsilon;
    rep.T_used = T;
    rep.evaluation_radius = R + 0.5 * T * medium.c_plus + epsilon;

    const Grid<D>& g = medium.grid;
    const std::size_t n = g.num_nodes();
    const auto grad_a1 = detail::field_gradient(medium.a1);
    const auto grad_a2 = detail::field_gradient(medium.a2);
    for (int d = 0; d < D; ++d)
        for (std::size_t i = 0; i < n; ++i)
            detail::require(std::isfinite(grad_a1[d].v[i]) && std::isfinite(grad_a2[d].v[i]),
                            "NaN in grad a_j");

    // Nodes of the evaluation ball (the grid's coverage of it).
    std::vector<std::size_t> ball_nodes;
    ball_nodes.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (g.radius(i) <= rep.evaluation_radius) ball_nodes.push_back(i);

    const double t_abs = 1.5 * T;
    auto worst_gradient_margin = [&](double th) {
        ConditionWitness w;
        for (std::size_t i : ball_nodes) {
            const auto x = g.position(i);
            for (int j = 1; j <= 2; ++j) {
                const double a = (j == 1 ? medium.a1.v[i] : medium.a2.v[i]);
                std::array<double, D> ga{};
                for (int d = 0; d < D; ++d)
                    ga[d] = (j == 1 ? grad_a1[d].v[i] : grad_a2[d].v[i]);
                const double m = detail::gradient_margin<D>(th, a, ga, x, t_abs);
                if (m < w.margin) {
                    w.margin = m;
                    w.node = i;
                    w.field = j;
                    w.position.assign(x.begin(), x.end());
                }
            }
        }
        return w;
    };

    if (theta) {
        rep.theta_used = *theta;
        rep.theta_was_searched = false;
    } else {
        rep.theta_was_searched = true;
        detail::require(rep.theta_window_nonempty,
                        "empty theta window: cannot search (c+/3, c-); pass theta explicitly");
        double best_margin = -std::numeric_limits<double>::infinity();
        double best_theta = 0.0;
        const double lo = rep.theta_window_lo, hi = rep.theta_window_hi;
        for (int i = 1; i <= 64; ++i) {
            const double th = lo + (hi - lo) * static_cast<double>(i) / 65.0;
            const auto w = worst_gradient_margin(th);
            rep.theta_margin_curve.push_back({th, w.margin});
            if (w.margin > best_margin) {
                best_margin = w.margin;
                best_theta = th;
            }
        }
        rep.theta_used = best_theta;
    }

    const double th = rep.theta_used;
    const bool theta_in_window = rep.theta_window_nonempty && th > rep.theta_window_lo &&
                                 th < rep.theta_window_hi;

    const double denom = 3.0 * th - medium.c_plus;
    rep.T_min = denom > 0.0 ? 2.0 * (R + epsilon) / denom
                            : std::numeric_limits<double>::infinity();
    rep.T_ok = T > rep.T_min;

    rep.gradient_worst = worst_gradient_margin(th);
    rep.gradient_condition_ok = rep.gradient_worst.margin > 0.0;

    // Condition theta^2 a_j <= 1 on the same region.
    {
        ConditionWitness w;
        for (std::size_t i : ball_nodes) {
            for (int j = 1; j <= 2; ++j) {
                const double a = (j == 1 ? medium.a1.v[i] : medium.a2.v[i]);
                const double m = 1.0 - th * th * a;
                if (m < w.margin) {
                    w.margin = m;
                    w.node = i;
                    w.field = j;
                    const auto x = g.position(i);
                    w.position.assign(x.begin(), x.end());
                }
            }
        }
        rep.condition2_worst = w;
        rep.condition2_ok = w.margin >= 0.0;
    }

    // Noncharacteristic surface check: theta^2 a_j < 1 strictly, excluding a
    // one-cell neighborhood of the origin (handled separately in the theory).
    {
        ConditionWitness w;
        const double h = g.spacing();
        for (std::size_t i : ball_nodes) {
            if (g.radius(i) <= h) continue;
            for (int j = 1; j <= 2; ++j) {
                const double a = (j == 1 ? medium.a1.v[i] : medium.a2.v[i]);
                const double m = 1.0 - th * th * a;
                if (m < w.margin) {
                    w.margin = m;
                    w.node = i;
                    w.field = j;
                    const auto x = g.position(i);
                    w.position.assign(x.begin(), x.end());
                }
            }
        }
        rep.noncharacteristic_worst = w;
        rep.noncharacteristic_ok = w.margin > 0.0;
    }

    rep.overall = rep.speed_ratio_ok && rep.theta_window_nonempty && theta_in_window &&
                  rep.T_ok && rep.gradient_condition_ok && rep.condition2_ok &&
                  rep.noncharacteristic_ok;
    return rep;
}

}  // namespace elastotat
