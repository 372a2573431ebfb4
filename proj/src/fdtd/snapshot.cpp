#include "nwpc/fdtd/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "nwpc/errors.hpp"

namespace nwpc::fdtd {

namespace {

constexpr std::uint32_t kVersion = 1;

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

template <class T>
void put(std::ostream& os, T v) {
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("snapshot: truncated header");
    return to_little(v);
}

}  // namespace

void write_snapshot(const std::string& path, const Snapshot& snap) {
    const std::size_t count = static_cast<std::size_t>(snap.dims[0]) * snap.dims[1] * snap.dims[2];
    if (snap.values.size() != count) throw std::invalid_argument("snapshot: sample count does not match dims");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("snapshot: cannot open " + path);
    os.write("NWFD", 4);
    put<std::uint32_t>(os, kVersion);
    for (int d : snap.dims) put<std::int32_t>(os, d);
    put<double>(os, snap.resolution);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(snap.component));
    put<double>(os, snap.frequency);
    put<std::uint32_t>(os, snap.complex_values ? 2u : 1u);
    put<double>(os, snap.dx_nm);
    for (double o : snap.origin_nm) put<double>(os, o);
    for (const auto& v : snap.values) {
        put<double>(os, v.real());
        if (snap.complex_values) put<double>(os, v.imag());
    }
    os.flush();
    if (!os) throw std::runtime_error("snapshot: write failed for " + path + " (disk full?)");
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("snapshot: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "NWFD", 4) != 0) throw std::runtime_error("snapshot: bad magic in " + path);
    if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("snapshot: unsupported version");
    Snapshot s;
    for (int& d : s.dims) {
        d = get<std::int32_t>(is);
        if (d < 1) throw std::runtime_error("snapshot: bad dims");
    }
    s.resolution = get<double>(is);
    const auto comp = get<std::uint32_t>(is);
    if (comp > 5) throw std::runtime_error("snapshot: bad component id");
    s.component = static_cast<Component>(comp);
    s.frequency = get<double>(is);
    const auto per = get<std::uint32_t>(is);
    if (per != 1 && per != 2) throw std::runtime_error("snapshot: bad sample kind");
    s.complex_values = per == 2;
    s.dx_nm = get<double>(is);
    for (double& o : s.origin_nm) o = get<double>(is);
    const std::size_t count = static_cast<std::size_t>(s.dims[0]) * s.dims[1] * s.dims[2];
    s.values.resize(count);
    for (auto& v : s.values) {
        const double re = get<double>(is);
        const double im = s.complex_values ? get<double>(is) : 0.0;
        v = {re, im};
    }
    return s;
}

Snapshot slice_mode(const ModeField& mode, Component c, Axis axis, int index, double resolution) {
    const int a = axis_index(axis);
    if (index < 0 || index >= mode.grid.n[a]) throw ConfigError("snapshot: slice index outside the profile");
    Snapshot s;
    s.dims = mode.grid.n;
    s.dims[a] = 1;
    s.resolution = resolution;
    s.component = c;
    s.frequency = mode.frequency;
    s.dx_nm = mode.grid.dx_nm;
    s.origin_nm = mode.grid.origin_nm;
    s.origin_nm[a] += index * mode.grid.dx_nm;
    s.values.reserve(static_cast<std::size_t>(s.dims[0]) * s.dims[1] * s.dims[2]);
    for (int k = 0; k < s.dims[2]; ++k)
        for (int j = 0; j < s.dims[1]; ++j)
            for (int i = 0; i < s.dims[0]; ++i) {
                std::array<int, 3> idx{i, j, k};
                idx[a] = index;
                s.values.push_back(mode.at(c, idx[0], idx[1], idx[2]));
            }
    return s;
}

Snapshot volume_mode(const ModeField& mode, Component c, double resolution) {
    Snapshot s;
    s.dims = mode.grid.n;
    s.resolution = resolution;
    s.component = c;
    s.frequency = mode.frequency;
    s.dx_nm = mode.grid.dx_nm;
    s.origin_nm = mode.grid.origin_nm;
    s.values = mode.fields[static_cast<int>(c)];
    return s;
}

}  // namespace nwpc::fdtd
