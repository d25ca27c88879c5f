#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "elastotat/boundary.hpp"
#include "elastotat/fields.hpp"
#include "elastotat/forward_solver.hpp"
#include "elastotat/ray_tracer.hpp"

namespace elastotat {

// Binary formats are raw little-endian IEEE doubles; files round-trip
// byte-for-byte.

namespace detail {

constexpr char kFieldMagic[8] = {'E', 'T', 'A', 'T', 'F', 'L', 'D', '\0'};
constexpr char kTraceMagic[8] = {'E', 'T', 'A', 'T', 'T', 'R', 'C', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
template <typename T>
void write_pod(std::ostream& os, const T& v) {
    write_bytes(os, &v, sizeof(T));
}
inline void read_bytes(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    require(static_cast<bool>(is), "unexpected end of file");
}
template <typename T>
void read_pod(std::istream& is, T& v) {
    read_bytes(is, &v, sizeof(T));
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), "cannot open for writing: " + path);
    return os;
}
inline std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), "cannot open for reading: " + path);
    return is;
}

}  // namespace detail

// ---- field container ----

template <int D>
void write_field(std::ostream& os, const VectorField<D>& f) {
    detail::write_bytes(os, detail::kFieldMagic, 8);
    detail::write_pod(os, detail::kFormatVersion);
    detail::write_pod(os, static_cast<std::uint32_t>(D));
    detail::write_pod(os, static_cast<std::uint32_t>(f.grid.n_per_axis));
    detail::write_pod(os, f.grid.half_width);
    detail::write_pod(os, static_cast<std::uint32_t>(D));  // component count
    for (int c = 0; c < D; ++c)
        detail::write_bytes(os, f.comp[c].data(), f.comp[c].size() * sizeof(double));
}

template <int D>
void write_field(const std::string& path, const VectorField<D>& f) {
    auto os = detail::open_out(path);
    write_field(os, f);
}

/// Peeks the dimension stored in a field file (for runtime dispatch).
inline int field_file_dim(const std::string& path) {
    auto is = detail::open_in(path);
    char magic[8];
    detail::read_bytes(is, magic, 8);
    detail::require(std::memcmp(magic, detail::kFieldMagic, 8) == 0, "not a field file: " + path);
    std::uint32_t version, dim;
    detail::read_pod(is, version);
    detail::require(version == detail::kFormatVersion, "unsupported field file version");
    detail::read_pod(is, dim);
    return static_cast<int>(dim);
}

template <int D>
VectorField<D> read_field(const std::string& path) {
    auto is = detail::open_in(path);
    char magic[8];
    detail::read_bytes(is, magic, 8);
    detail::require(std::memcmp(magic, detail::kFieldMagic, 8) == 0, "not a field file: " + path);
    std::uint32_t version, dim, n, ncomp;
    double half_width;
    detail::read_pod(is, version);
    detail::require(version == detail::kFormatVersion, "unsupported field file version");
    detail::read_pod(is, dim);
    detail::require(static_cast<int>(dim) == D, "field file dimension mismatch");
    detail::read_pod(is, n);
    detail::read_pod(is, half_width);
    detail::read_pod(is, ncomp);
    detail::require(ncomp == static_cast<std::uint32_t>(D), "field component count mismatch");
    VectorField<D> f(make_grid<D>(half_width, static_cast<int>(n)));
    for (int c = 0; c < D; ++c)
        detail::read_bytes(is, f.comp[c].data(), f.comp[c].size() * sizeof(double));
    return f;
}

// ---- boundary trace container ----

template <int D>
void write_trace(std::ostream& os, const BoundaryTrace<D>& tr) {
    detail::write_bytes(os, detail::kTraceMagic, 8);
    detail::write_pod(os, detail::kFormatVersion);
    detail::write_pod(os, static_cast<std::uint32_t>(D));
    detail::write_pod(os, tr.dt);
    detail::write_pod(os, static_cast<std::uint64_t>(tr.n_steps));
    detail::write_pod(os, tr.ball.radius);
    detail::write_pod(os, tr.grid.half_width);
    detail::write_pod(os, static_cast<std::uint32_t>(tr.grid.n_per_axis));
    detail::write_pod(os, static_cast<std::uint64_t>(tr.entries.size()));
    for (const auto& e : tr.entries) {
        for (int d = 0; d < D; ++d) detail::write_pod(os, e.position[d]);
        for (int d = 0; d < D; ++d) detail::write_pod(os, e.normal[d]);
        detail::write_pod(os, e.weight);
    }
    detail::write_bytes(os, tr.samples.data(), tr.samples.size() * sizeof(double));
}

template <int D>
void write_trace(const std::string& path, const BoundaryTrace<D>& tr) {
    auto os = detail::open_out(path);
    write_trace(os, tr);
}

inline int trace_file_dim(const std::string& path) {
    auto is = detail::open_in(path);
    char magic[8];
    detail::read_bytes(is, magic, 8);
    detail::require(std::memcmp(magic, detail::kTraceMagic, 8) == 0, "not a trace file: " + path);
    std::uint32_t version, dim;
    detail::read_pod(is, version);
    detail::require(version == detail::kFormatVersion, "unsupported trace file version");
    detail::read_pod(is, dim);
    return static_cast<int>(dim);
}

template <int D>
BoundaryTrace<D> read_trace(const std::string& path) {
    auto is = detail::open_in(path);
    char magic[8];
    detail::read_bytes(is, magic, 8);
    detail::require(std::memcmp(magic, detail::kTraceMagic, 8) == 0, "not a trace file: " + path);
    std::uint32_t version, dim, n_axis;
    std::uint64_t n_steps, n_entries;
    detail::read_pod(is, version);
    detail::require(version == detail::kFormatVersion, "unsupported trace file version");
    detail::read_pod(is, dim);
    detail::require(static_cast<int>(dim) == D, "trace file dimension mismatch");

    BoundaryTrace<D> tr;
    detail::read_pod(is, tr.dt);
    detail::read_pod(is, n_steps);
    tr.n_steps = static_cast<int>(n_steps);
    detail::read_pod(is, tr.ball.radius);
    detail::read_pod(is, tr.grid.half_width);
    detail::read_pod(is, n_axis);
    tr.grid.n_per_axis = static_cast<int>(n_axis);
    detail::read_pod(is, n_entries);
    tr.entries.resize(n_entries);
    for (auto& e : tr.entries) {
        e.node = 0;  // node indices are not stored; rebuilt from the grid when needed
        for (int d = 0; d < D; ++d) detail::read_pod(is, e.position[d]);
        for (int d = 0; d < D; ++d) detail::read_pod(is, e.normal[d]);
        detail::read_pod(is, e.weight);
    }
    tr.samples.resize(static_cast<std::size_t>(n_steps + 1) * n_entries * D);
    detail::read_bytes(is, tr.samples.data(), tr.samples.size() * sizeof(double));
    return tr;
}

// ---- CSV exports (plot-ready; %.17g so values round-trip) ----

namespace detail {
inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

template <int D>
void export_field_csv(const std::string& path, const VectorField<D>& f) {
    std::ofstream os(path);
    detail::require(static_cast<bool>(os), "cannot open for writing: " + path);
    for (int d = 0; d < D; ++d) os << "x" << d << ",";
    for (int c = 0; c < D; ++c) os << "u" << c << (c + 1 < D ? "," : "\n");
    for (std::size_t i = 0; i < f.num_nodes(); ++i) {
        const auto p = f.grid.position(i);
        for (int d = 0; d < D; ++d) os << detail::fmt17(p[d]) << ",";
        for (int c = 0; c < D; ++c)
            os << detail::fmt17(f.comp[c][i]) << (c + 1 < D ? "," : "\n");
    }
}

template <int D>
void export_trace_csv(const std::string& path, const BoundaryTrace<D>& tr) {
    std::ofstream os(path);
    detail::require(static_cast<bool>(os), "cannot open for writing: " + path);
    os << "step,t,entry";
    for (int d = 0; d < D; ++d) os << ",p" << d;
    for (int c = 0; c < D; ++c) os << ",u" << c;
    os << "\n";
    for (int s = 0; s <= tr.n_steps; ++s) {
        for (std::size_t e = 0; e < tr.entries.size(); ++e) {
            os << s << "," << detail::fmt17(s * tr.dt) << "," << e;
            for (int d = 0; d < D; ++d) os << "," << detail::fmt17(tr.entries[e].position[d]);
            for (int c = 0; c < D; ++c) os << "," << detail::fmt17(tr.at(s, e, c));
            os << "\n";
        }
    }
}

template <int D>
void export_ray_csv(const std::string& path, const Ray<D>& ray) {
    std::ofstream os(path);
    detail::require(static_cast<bool>(os), "cannot open for writing: " + path);
    os << "t";
    for (int d = 0; d < D; ++d) os << ",x" << d;
    os << "\n";
    for (const auto& st : ray.states) {
        os << detail::fmt17(st.t);
        for (int d = 0; d < D; ++d) os << "," << detail::fmt17(st.x[d]);
        os << "\n";
    }
}

// ---- content hashing (FNV-1a 64) ----

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string file_hash_hex(const std::string& path) {
    auto is = detail::open_in(path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace elastotat
