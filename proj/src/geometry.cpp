#include "nwpc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "nwpc/errors.hpp"

namespace nwpc {

std::string_view to_string(Component c) {
    switch (c) {
        case Component::Ex: return "Ex";
        case Component::Ey: return "Ey";
        case Component::Ez: return "Ez";
        case Component::Hx: return "Hx";
        case Component::Hy: return "Hy";
        case Component::Hz: return "Hz";
    }
    return "?";
}

std::string_view to_string(Axis a) {
    switch (a) {
        case Axis::X: return "x";
        case Axis::Y: return "y";
        case Axis::Z: return "z";
    }
    return "?";
}

Component component_from_string(std::string_view s) {
    for (int c = 0; c < 6; ++c) {
        if (to_string(static_cast<Component>(c)) == s) return static_cast<Component>(c);
    }
    throw ConfigError("unknown field component '" + std::string(s) + "'");
}

Axis axis_from_string(std::string_view s) {
    if (s == "x" || s == "X") return Axis::X;
    if (s == "y" || s == "Y") return Axis::Y;
    if (s == "z" || s == "Z") return Axis::Z;
    throw ConfigError("unknown axis '" + std::string(s) + "'");
}

void MaterialStack::validate() const {
    if (!(n_air >= 1.0 && n_dia > n_air && n_gap > n_dia)) {
        throw ConfigError("material stack must satisfy n_gap > n_dia > n_air >= 1");
    }
}

void DeviceSpec::validate() const {
    if (!(w > 0 && d > 0 && h >= 0)) throw ConfigError("device: w, d must be positive and h non-negative");
    if (!(a_c > 0 && a_c <= a_o)) throw ConfigError("device: need 0 < a_c <= a_o");
    if (!(r >= 0 && 2 * r < a_c)) throw ConfigError("device: holes overlap (2r >= a_c)");
    if (n_grading < 0 || n_mirror < 0) throw ConfigError("device: period counts must be non-negative");
    for (double s : termination_scalings) {
        if (!(s > 0 && s <= 1)) throw ConfigError("device: termination scalings must lie in (0, 1]");
    }
}

double HoleLayout::max_radius() const {
    double m = 0.0;
    for (const auto& hole : holes) m = std::max(m, hole.radius);
    return m;
}

std::vector<double> HoleLayout::gaps() const {
    std::vector<double> g;
    for (std::size_t i = 1; i < holes.size(); ++i) g.push_back(holes[i].x - holes[i - 1].x);
    return g;
}

void HoleLayout::validate() const {
    for (std::size_t i = 1; i < holes.size(); ++i) {
        const double gap = holes[i].x - holes[i - 1].x;
        if (!(gap > 0)) throw ConfigError("layout: hole centers must be strictly increasing");
        if (!(gap > holes[i].radius + holes[i - 1].radius)) {
            std::ostringstream msg;
            msg << "layout: holes " << i - 1 << " and " << i << " overlap (gap " << gap << " nm)";
            throw ConfigError(msg.str());
        }
    }
}

void HoleLayout::write_csv(std::ostream& os) const {
    os << "# hole_center_nm,radius_nm\n";
    os.precision(17);
    for (const auto& hole : holes) os << hole.x << ',' << hole.radius << '\n';
}

double graded_spacing(const DeviceSpec& spec, int i) {
    if (i < 0) throw ConfigError("graded_spacing: negative gap index");
    if (spec.n_grading == 0 || i >= spec.n_grading) return i == 0 && spec.n_grading == 0 ? spec.a_c : spec.a_o;
    const double t = static_cast<double>(i) / spec.n_grading;
    return spec.a_c + (spec.a_o - spec.a_c) * t * t;
}

HoleLayout build_cavity_layout(const DeviceSpec& spec) {
    spec.validate();
    // Right half: first hole half a center gap from the origin, then cumulative gaps.
    std::vector<double> right;
    double x = 0.5 * graded_spacing(spec, 0);
    right.push_back(x);
    for (int i = 1; i <= spec.n_grading; ++i) {
        x += graded_spacing(spec, i);
        right.push_back(x);
    }
    for (int m = 0; m < spec.n_mirror; ++m) {
        x += spec.a_o;
        right.push_back(x);
    }
    HoleLayout layout;
    layout.holes.reserve(2 * right.size());
    for (auto it = right.rbegin(); it != right.rend(); ++it) layout.holes.push_back({-*it, spec.r});
    for (double xr : right) layout.holes.push_back({xr, spec.r});
    layout.x_end = right.back() + 0.5 * spec.a_o;
    layout.x_begin = -layout.x_end;
    layout.validate();
    return layout;
}

HoleLayout build_periodic_layout(const DeviceSpec& spec, double a, int n_cells) {
    if (n_cells < 0) throw ConfigError("periodic layout: negative cell count");
    if (!(a > 0)) throw ConfigError("periodic layout: spacing must be positive");
    if (!(2 * spec.r < a)) throw ConfigError("periodic layout: holes overlap (2r >= a)");
    HoleLayout layout;
    for (int i = 0; i < n_cells; ++i) layout.holes.push_back({(i + 0.5) * a, spec.r});
    layout.x_begin = 0.0;
    layout.x_end = n_cells * a;
    layout.validate();
    return layout;
}

HoleLayout build_asymmetric_layout(const DeviceSpec& spec, int n_mirror_left, int n_wg_right) {
    spec.validate();
    if (n_mirror_left < 1 || n_wg_right < 1) throw ConfigError("asymmetric layout: counts must be >= 1");
    HoleLayout layout;
    std::vector<double> left;
    double x = -0.5 * spec.a_c;
    left.push_back(x);
    for (int m = 0; m < n_mirror_left; ++m) {
        x -= spec.a_o;
        left.push_back(x);
    }
    for (auto it = left.rbegin(); it != left.rend(); ++it) layout.holes.push_back({*it, spec.r});
    layout.x_begin = left.back() - 0.5 * spec.a_o;

    x = 0.5 * spec.a_c;
    layout.holes.push_back({x, spec.r});
    for (int m = 0; m < n_wg_right; ++m) {
        x += spec.a_c;
        layout.holes.push_back({x, spec.r});
    }
    double last_gap = spec.a_c;
    for (double s : spec.termination_scalings) {
        last_gap = spec.a_c * s;
        x += last_gap;
        layout.holes.push_back({x, spec.r * s});
    }
    layout.x_end = x + 0.5 * last_gap;
    layout.validate();
    return layout;
}

namespace {

bool in_any_hole(const std::vector<Hole>& holes, double max_r, double x, double y) {
    if (holes.empty()) return false;
    auto lo = std::lower_bound(holes.begin(), holes.end(), x - max_r,
                               [](const Hole& hole, double v) { return hole.x < v; });
    for (auto it = lo; it != holes.end() && it->x <= x + max_r; ++it) {
        const double dx = x - it->x;
        if (dx * dx + y * y < it->radius * it->radius) return true;
    }
    return false;
}

}  // namespace

HybridStructure::HybridStructure(HoleLayout layout, DeviceSpec spec)
    : layout_(std::move(layout)), spec_(std::move(spec)) {}

bool HybridStructure::in_hole(double x, double y) const {
    return in_any_hole(layout_.holes, layout_.max_radius(), x, y);
}

Material HybridStructure::material_at(double x, double y, double z) const {
    if (z <= -spec_.h) return Material::Diamond;
    if (z >= spec_.d) return Material::Air;
    if (std::abs(y) >= 0.5 * spec_.w) return Material::Air;
    if (in_hole(x, y)) return Material::Air;
    return z > 0 ? Material::GaP : Material::Diamond;
}

VerticalSlab::VerticalSlab(HoleLayout layout, double width)
    : layout_(std::move(layout)), half_width_(0.5 * width) {}

Material VerticalSlab::material_at(double x, double y, double) const {
    if (std::abs(y) >= half_width_) return Material::Air;
    if (in_any_hole(layout_.holes, layout_.max_radius(), x, y)) return Material::Air;
    return Material::Diamond;
}

PermittivityGrid sample_materials(const MaterialFn& material, const MaterialStack& stack, const GridSpec& grid,
                                  const SamplingOptions& opts, double min_feature_nm, double a_o_nm) {
    stack.validate();
    if (grid.n[0] < 1 || grid.n[1] < 1 || grid.n[2] < 1 || !(grid.dx_nm > 0) || !std::isfinite(grid.dx_nm)) {
        throw ConfigError("degenerate grid");
    }
    const std::array<double, 3> eps_of{stack.eps_air(), stack.eps_dia(), stack.eps_gap()};
    auto eps_at = [&](double x, double y, double z) { return eps_of[static_cast<int>(material(x, y, z))]; };

    PermittivityGrid out;
    out.grid = grid;
    out.resolution = a_o_nm / grid.dx_nm;
    if (min_feature_nm > 0 && min_feature_nm / grid.dx_nm < 4.0) {
        std::ostringstream msg;
        msg << "grid under-resolves holes: " << min_feature_nm / grid.dx_nm << " cells per diameter (< 4)";
        out.warnings.push_back(msg.str());
    }
    const int ns = std::max(1, opts.supersample);
    const double h = grid.dx_nm;
    for (int c = 0; c < 3; ++c) {
        auto& eps = out.eps[c];
        eps.assign(grid.cells(), 0.0);
        const auto comp = static_cast<Component>(c);
        for (int k = 0; k < grid.n[2]; ++k) {
            for (int j = 0; j < grid.n[1]; ++j) {
                for (int i = 0; i < grid.n[0]; ++i) {
                    const auto p = grid.position(comp, i, j, k);
                    const double centre = eps_at(p[0], p[1], p[2]);
                    double value = centre;
                    if (opts.smoothing) {
                        bool uniform = true;
                        for (int corner = 0; corner < 8 && uniform; ++corner) {
                            const double cx = p[0] + ((corner & 1) ? 0.5 : -0.5) * h;
                            const double cy = p[1] + ((corner & 2) ? 0.5 : -0.5) * h;
                            const double cz = p[2] + ((corner & 4) ? 0.5 : -0.5) * h;
                            uniform = eps_at(cx, cy, cz) == centre;
                        }
                        if (!uniform) {
                            double sum = 0.0;
                            for (int a = 0; a < ns; ++a)
                                for (int b = 0; b < ns; ++b)
                                    for (int e = 0; e < ns; ++e)
                                        sum += eps_at(p[0] + ((a + 0.5) / ns - 0.5) * h,
                                                      p[1] + ((b + 0.5) / ns - 0.5) * h,
                                                      p[2] + ((e + 0.5) / ns - 0.5) * h);
                            value = sum / (ns * ns * ns);
                        }
                    }
                    eps[grid.linear(i, j, k)] = value;
                }
            }
        }
    }
    return out;
}

PermittivityGrid sample_permittivity(const HoleLayout& layout, const DeviceSpec& spec, const MaterialStack& stack,
                                     const GridSpec& grid, const SamplingOptions& opts) {
    HybridStructure structure(layout, spec);
    MaterialFn fn;
    if (opts.x_period_nm > 0) {
        const double period = opts.x_period_nm;
        const double x0 = layout.x_begin;
        fn = [structure, period, x0](double x, double y, double z) {
            const double xw = x - std::floor((x - x0) / period) * period;
            return structure.material_at(xw, y, z);
        };
    } else {
        fn = [structure](double x, double y, double z) { return structure.material_at(x, y, z); };
    }
    const double min_feature = layout.holes.empty() ? 0.0 : 2.0 * [&] {
        double m = layout.holes.front().radius;
        for (const auto& hole : layout.holes) m = std::min(m, hole.radius);
        return m;
    }();
    return sample_materials(fn, stack, grid, opts, min_feature, spec.a_o);
}

PermittivityGrid build_vertical_slab(const DeviceSpec& spec, double a, const MaterialStack& stack,
                                     const VerticalSlabGrid& opts) {
    spec.validate();
    if (opts.cells_per_period < 1) throw ConfigError("vertical slab: need at least one cell per period");
    const HoleLayout cell = spec.r > 0 ? build_periodic_layout(spec, a, 1) : HoleLayout{{}, 0.0, a};
    const VerticalSlab slab(cell, spec.w);
    GridSpec grid;
    grid.dx_nm = a / opts.cells_per_period;
    const double half = opts.y_extent_nm > 0 ? opts.y_extent_nm : 0.5 * spec.w + 3.0 * a;
    const int ny_half = static_cast<int>(std::ceil(half / grid.dx_nm));
    grid.n = {opts.cells_per_period, opts.mirror_y ? ny_half : 2 * ny_half, 1};
    grid.origin_nm = {0.0, opts.mirror_y ? 0.0 : -ny_half * grid.dx_nm, 0.0};
    SamplingOptions so;
    so.smoothing = opts.smoothing;
    so.x_period_nm = a;
    const MaterialFn fn = [slab, a](double x, double y, double z) {
        return slab.material_at(x - std::floor(x / a) * a, y, z);
    };
    return sample_materials(fn, stack, grid, so, 2.0 * spec.r, spec.a_o);
}

}  // namespace nwpc
