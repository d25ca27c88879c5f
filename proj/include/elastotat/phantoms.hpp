#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "elastotat/fields.hpp"
#include "elastotat/grid.hpp"

namespace elastotat {

/// Result of phantom_library: exactly one member is engaged.
template <int D>
struct Phantom {
    std::optional<std::pair<ScalarField<D>, ScalarField<D>>> lame;  // (lambda, mu)
    std::optional<VectorField<D>> initial;
    std::optional<ScalarField<D>> speed;
};

using PhantomParams = std::map<std::string, double>;

namespace detail {

inline double param(const PhantomParams& p, const std::string& key, double dflt) {
    auto it = p.find(key);
    return it == p.end() ? dflt : it->second;
}

inline void check_params(const PhantomParams& p, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : p) {
        bool ok = false;
        for (const char* a : allowed)
            if (k == a) ok = true;
        detail::require(ok, "unknown phantom parameter: " + k);
    }
}

// C^inf bump: exp(1 - 1/(1-s^2)) on |s|<1, zero outside.
inline double bump(double s) {
    const double s2 = s * s;
    if (s2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s2));
}

}  // namespace detail

/**
 * Deterministic analytic test media and sources.
 *
 * Names: constant, radial_bump, smooth_gradient (Lame pairs),
 * gaussian_source (initial displacement), annulus_speed (scalar speed
 * c(x) = |x| for the ray tracer).
 */
template <int D>
Phantom<D> phantom_library(const std::string& name, const Grid<D>& grid,
                           const PhantomParams& params = {}) {
    Phantom<D> out;
    const std::size_t n = grid.num_nodes();
    const double L = grid.half_width;

    if (name == "constant") {
        detail::check_params(params, {"lambda", "mu"});
        ScalarField<D> lam(grid, detail::param(params, "lambda", 1.0));
        ScalarField<D> mu(grid, detail::param(params, "mu", 1.0));
        out.lame = {std::move(lam), std::move(mu)};
    } else if (name == "radial_bump") {
        detail::check_params(params, {"lambda", "mu", "amp_lambda", "amp_mu", "radius"});
        const double l0 = detail::param(params, "lambda", 1.0);
        const double m0 = detail::param(params, "mu", 1.0);
        const double al = detail::param(params, "amp_lambda", 0.3);
        const double am = detail::param(params, "amp_mu", 0.15);
        const double r0 = detail::param(params, "radius", 0.5 * L);
        ScalarField<D> lam(grid), mu(grid);
        for (std::size_t i = 0; i < n; ++i) {
            const double b = detail::bump(grid.radius(i) / r0);
            lam.v[i] = l0 * (1.0 + al * b);
            mu.v[i] = m0 * (1.0 + am * b);
        }
        out.lame = {std::move(lam), std::move(mu)};
    } else if (name == "smooth_gradient") {
        detail::check_params(params, {"lambda", "mu", "slope"});
        const double l0 = detail::param(params, "lambda", 1.0);
        const double m0 = detail::param(params, "mu", 1.0);
        const double s = detail::param(params, "slope", 0.2);
        ScalarField<D> lam(grid), mu(grid);
        for (std::size_t i = 0; i < n; ++i) {
            const double x1 = grid.position(i)[0];
            const double f = 1.0 + s * x1 / L;
            lam.v[i] = l0 * f;
            mu.v[i] = m0 * f;
        }
        out.lame = {std::move(lam), std::move(mu)};
    } else if (name == "gaussian_source") {
        detail::check_params(params, {"amplitude", "sigma", "component", "center0", "center1", "center2"});
        const double amp = detail::param(params, "amplitude", 1.0);
        const double sigma = detail::param(params, "sigma", L / 21.0);
        const int c = static_cast<int>(detail::param(params, "component", 0.0));
        detail::require(c >= 0 && c < D, "gaussian_source component out of range");
        std::array<double, D> x0{};
        x0[0] = detail::param(params, "center0", 0.0);
        x0[1] = detail::param(params, "center1", 0.0);
        if constexpr (D == 3) x0[2] = detail::param(params, "center2", 0.0);
        VectorField<D> f(grid);
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = grid.position(i);
            double r2 = 0.0;
            for (int d = 0; d < D; ++d) r2 += (x[d] - x0[d]) * (x[d] - x0[d]);
            f.comp[c][i] = amp * std::exp(-r2 / (2.0 * sigma * sigma));
        }
        out.initial = std::move(f);
    } else if (name == "annulus_speed") {
        detail::check_params(params, {});
        ScalarField<D> c(grid);
        for (std::size_t i = 0; i < n; ++i) c.v[i] = grid.radius(i);
        out.speed = std::move(c);
    } else {
        throw InvalidArgument("unknown phantom: " + name);
    }
    return out;
}

}  // namespace elastotat
