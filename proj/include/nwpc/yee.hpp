#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace nwpc {

enum class Axis : int { X = 0, Y = 1, Z = 2 };

enum class Component : int { Ex = 0, Ey = 1, Ez = 2, Hx = 3, Hy = 4, Hz = 5 };

constexpr int axis_index(Axis a) { return static_cast<int>(a); }
constexpr bool is_electric(Component c) { return static_cast<int>(c) < 3; }
/// Direction the component points along.
constexpr int component_axis(Component c) { return static_cast<int>(c) % 3; }

std::string_view to_string(Component c);
std::string_view to_string(Axis a);
Component component_from_string(std::string_view s);
Axis axis_from_string(std::string_view s);

/// Offset of a component's sample inside the Yee cell, in units of cells.
/// E_a sits half a cell along a; H_a sits half a cell along both other axes.
constexpr std::array<double, 3> yee_offset(Component c) {
    const int a = component_axis(c);
    std::array<double, 3> off{0.0, 0.0, 0.0};
    if (is_electric(c)) {
        off[a] = 0.5;
    } else {
        off[(a + 1) % 3] = 0.5;
        off[(a + 2) % 3] = 0.5;
    }
    return off;
}

/// Uniform cubic grid. Node (i,j,k) sits at origin + (i,j,k)*dx.
struct GridSpec {
    std::array<int, 3> n{1, 1, 1};
    double dx_nm = 1.0;
    std::array<double, 3> origin_nm{0.0, 0.0, 0.0};

    std::size_t cells() const {
        return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) *
               static_cast<std::size_t>(n[2]);
    }
    std::size_t linear(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(n[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(n[1]) * static_cast<std::size_t>(k));
    }
    /// Physical position (nm) of a component's sample at cell (i,j,k).
    std::array<double, 3> position(Component c, int i, int j, int k) const {
        const auto off = yee_offset(c);
        return {origin_nm[0] + (i + off[0]) * dx_nm, origin_nm[1] + (j + off[1]) * dx_nm,
                origin_nm[2] + (k + off[2]) * dx_nm};
    }
    double length_nm(int axis) const { return n[axis] * dx_nm; }
};

}  // namespace nwpc
