#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <unordered_map>
#include <utility>
#include <vector>

#include "elastotat/fields.hpp"
#include "elastotat/grid.hpp"

namespace elastotat {

template <int D>
struct BoundaryEntry {
    std::size_t node;                  // first generating grid node
    std::array<double, D> position;    // projection of the node onto the sphere
    std::array<double, D> normal;      // unit outward normal at the projection
    double weight;                     // surface quadrature weight
};

/**
 * Discretization of the sphere dOmega = {|x| = R}.
 *
 * Entries are grid nodes within one cell of the sphere, projected onto it and
 * deduplicated; `collar` maps every such grid node (including ones merged by
 * deduplication) to its entry, which is what the Dirichlet solver prescribes.
 */
template <int D>
struct BoundarySet {
    Grid<D> grid;
    BallRegion ball;
    std::vector<BoundaryEntry<D>> entries;
    std::vector<std::pair<std::size_t, std::size_t>> collar;  // (node, entry index)

    double surface_measure() const {
        double s = 0.0;
        for (const auto& e : entries) s += e.weight;
        return s;
    }
};

namespace detail {

template <int D>
std::vector<std::array<double, D>> sphere_samples(double R, std::size_t m);

template <>
inline std::vector<std::array<double, 2>> sphere_samples<2>(double R, std::size_t m) {
    std::vector<std::array<double, 2>> q(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double th = 2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(m);
        q[i] = {R * std::cos(th), R * std::sin(th)};
    }
    return q;
}

template <>
inline std::vector<std::array<double, 3>> sphere_samples<3>(double R, std::size_t m) {
    // Fibonacci sphere: deterministic, near-uniform.
    std::vector<std::array<double, 3>> q(m);
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(m);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = 2.0 * std::numbers::pi * golden * static_cast<double>(i);
        q[i] = {R * r * std::cos(phi), R * r * std::sin(phi), R * z};
    }
    return q;
}

template <int D>
double dist2(const std::array<double, D>& a, const std::array<double, D>& b) {
    double s = 0.0;
    for (int d = 0; d < D; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return s;
}

// Uniform spatial hash over entry positions, used to answer nearest-entry
// queries deterministically (all candidates in the scanned cell ring are
// compared; ties resolve to the lowest entry index).
template <int D>
class NearestEntry {
public:
    NearestEntry(const std::vector<BoundaryEntry<D>>& entries, double cell)
        : entries_(entries), cell_(cell) {
        for (std::size_t k = 0; k < entries.size(); ++k)
            buckets_[key(entries[k].position)].push_back(k);
    }

    std::size_t find(const std::array<double, D>& q) const {
        std::size_t best = static_cast<std::size_t>(-1);
        double best_d2 = std::numeric_limits<double>::infinity();
        const auto kq = key(q);
        for (int ring = 1; ring <= 64; ++ring) {
            scan_ring(kq, ring, q, best, best_d2);
            // Any entry outside the scanned block is at least (ring-1) cells away.
            const double safe = (ring - 1) * cell_;
            if (best != static_cast<std::size_t>(-1) && best_d2 <= safe * safe) break;
        }
        return best;
    }

private:
    using Key = std::array<std::int64_t, D>;

    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::size_t h = 1469598103934665603ull;
            for (auto v : k) {
                h ^= static_cast<std::size_t>(v);
                h *= 1099511628211ull;
            }
            return h;
        }
    };

    Key key(const std::array<double, D>& p) const {
        Key k{};
        for (int d = 0; d < D; ++d) k[d] = static_cast<std::int64_t>(std::floor(p[d] / cell_));
        return k;
    }

    void consider(const Key& k, const std::array<double, D>& q, std::size_t& best,
                  double& best_d2) const {
        auto it = buckets_.find(k);
        if (it == buckets_.end()) return;
        for (std::size_t idx : it->second) {
            const double d2 = dist2<D>(entries_[idx].position, q);
            if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                best_d2 = d2;
                best = idx;
            }
        }
    }

    void scan_ring(const Key& center, int ring, const std::array<double, D>& q, std::size_t& best,
                   double& best_d2) const {
        const int r = ring - 1;  // ring 1 scans the 3^D block, ring 2 the 5^D shell, ...
        Key k{};
        if constexpr (D == 2) {
            for (int i = -r; i <= r; ++i)
                for (int j = -r; j <= r; ++j) {
                    if (ring > 1 && std::abs(i) != r && std::abs(j) != r) continue;
                    k = {center[0] + i, center[1] + j};
                    consider(k, q, best, best_d2);
                }
        } else {
            for (int i = -r; i <= r; ++i)
                for (int j = -r; j <= r; ++j)
                    for (int l = -r; l <= r; ++l) {
                        if (ring > 1 && std::abs(i) != r && std::abs(j) != r && std::abs(l) != r)
                            continue;
                        k = {center[0] + i, center[1] + j, center[2] + l};
                        consider(k, q, best, best_d2);
                    }
        }
    }

    const std::vector<BoundaryEntry<D>>& entries_;
    double cell_;
    std::unordered_map<Key, std::vector<std::size_t>, KeyHash> buckets_;
};

}  // namespace detail

/// Builds the discrete boundary of the ball. Deterministic: identical inputs
/// give identical entry lists, positions, and weights.
template <int D>
BoundarySet<D> build_boundary_set(const Grid<D>& grid, const BallRegion& ball) {
    require_interior(grid, ball);
    const double h = grid.spacing();
    const double R = ball.radius;

    BoundarySet<D> bs;
    bs.grid = grid;
    bs.ball = ball;

    // Candidate nodes within one cell of the sphere, visited in linear order.
    // Each collar node carries its own entry (projection, normal, weight), so
    // the measurement samples and the Dirichlet prescription are a bijection.
    // Nodes collinear with the origin project to coincident positions; the
    // nearest-partition weighting splits the local area between them.
    const std::size_t n_nodes = grid.num_nodes();
    for (std::size_t lin = 0; lin < n_nodes; ++lin) {
        const double r = grid.radius(lin);
        if (std::abs(r - R) > h) continue;
        const auto x = grid.position(lin);
        std::array<double, D> p{}, nrm{};
        for (int d = 0; d < D; ++d) p[d] = x[d] * (R / r);
        double pn = 0.0;
        for (int d = 0; d < D; ++d) pn += p[d] * p[d];
        pn = std::sqrt(pn);
        for (int d = 0; d < D; ++d) nrm[d] = p[d] / pn;
        bs.collar.emplace_back(lin, bs.entries.size());
        bs.entries.push_back(BoundaryEntry<D>{lin, p, nrm, 0.0});
    }
    detail::require(!bs.entries.empty(), "boundary set is empty; grid too coarse for the ball");

    // Area weights: dense deterministic sphere sampling, each sample's share
    // of the surface measure assigned to its nearest entry.
    const std::size_t m = std::max<std::size_t>(4096, 40 * bs.entries.size());
    const auto samples = detail::sphere_samples<D>(R, m);
    const double total = (D == 2) ? 2.0 * std::numbers::pi * R : 4.0 * std::numbers::pi * R * R;
    const double share = total / static_cast<double>(m);
    detail::NearestEntry<D> nn(bs.entries, h);
    std::vector<std::int64_t> counts(bs.entries.size(), 0);
    for (const auto& q : samples) counts[nn.find(q)] += 1;
    // Weights must stay positive: a sample-starved entry borrows one share
    // from the closest entry that can spare it (sum of weights unchanged).
    for (std::size_t k = 0; k < bs.entries.size(); ++k) {
        if (counts[k] > 0) continue;
        std::size_t donor = static_cast<std::size_t>(-1);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < bs.entries.size(); ++j) {
            if (counts[j] < 2) continue;
            const double d2 = detail::dist2<D>(bs.entries[j].position, bs.entries[k].position);
            if (d2 < best) {
                best = d2;
                donor = j;
            }
        }
        detail::require(donor != static_cast<std::size_t>(-1), "degenerate boundary weighting");
        counts[donor] -= 1;
        counts[k] += 1;
    }
    for (std::size_t k = 0; k < bs.entries.size(); ++k)
        bs.entries[k].weight = share * static_cast<double>(counts[k]);

    return bs;
}

}  // namespace elastotat
