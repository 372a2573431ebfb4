#pragma once

// Parametric description of the GaP-on-diamond nanowire photonic crystal and its
// discretization onto a Yee grid.
//
// Coordinates: x along the waveguide, y lateral, z vertical with z = 0 at the
// GaP/diamond interface (GaP occupies 0 < z < d). All lengths are in nm.

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nwpc/yee.hpp"

namespace nwpc {

struct MaterialStack {
    double n_gap = 3.3;
    double n_dia = 2.4;
    double n_air = 1.0;

    /// Throws ConfigError unless n_gap > n_dia > n_air >= 1.
    void validate() const;
    double eps_gap() const { return n_gap * n_gap; }
    double eps_dia() const { return n_dia * n_dia; }
    double eps_air() const { return n_air * n_air; }
};

struct DeviceSpec {
    double w = 192.0;    ///< GaP ridge width
    double d = 128.0;    ///< GaP thickness
    double h = 640.0;    ///< diamond etch depth
    double a_o = 160.0;  ///< bulk (mirror) hole spacing
    double a_c = 141.0;  ///< center hole spacing
    double r = 43.0;     ///< hole radius
    int n_grading = 6;   ///< graded gaps per side
    int n_mirror = 8;    ///< unperturbed gaps per side beyond the grading
    std::vector<double> termination_scalings{0.95, 0.86, 0.8, 0.75};

    /// Throws ConfigError on any violated invariant.
    void validate() const;
};

struct Hole {
    double x;       ///< center along the waveguide axis
    double radius;
};

struct HoleLayout {
    std::vector<Hole> holes;  ///< strictly increasing centers
    double x_begin = 0.0;     ///< start of the patterned region
    double x_end = 0.0;       ///< end of the patterned region

    double extent() const { return x_end - x_begin; }
    double max_radius() const;
    /// Gap widths between consecutive hole centers.
    std::vector<double> gaps() const;
    /// Throws ConfigError if centers are not increasing or holes overlap.
    void validate() const;
    /// `hole_center_nm,radius_nm` rows with a `#` header.
    void write_csv(std::ostream& os) const;
};

/// Spacing of the i-th gap counted from the cavity center (i = 0 is the gap
/// straddling x = 0). Parabolic from a_c to a_o over n_grading gaps.
double graded_spacing(const DeviceSpec& spec, int i);

/// Symmetric heterostructure cavity, gap-centered on x = 0.
HoleLayout build_cavity_layout(const DeviceSpec& spec);

/// n_cells holes with uniform spacing a, one centered in each cell of [0, n_cells*a).
HoleLayout build_periodic_layout(const DeviceSpec& spec, double a, int n_cells);

/// Mirror (a_o) section left of x = 0, waveguide (a_c) section right of it, then
/// a termination taper scaled by spec.termination_scalings. The gap
/// straddling x = 0 has width a_c so a source at x = 0 sits midway between holes.
HoleLayout build_asymmetric_layout(const DeviceSpec& spec, int n_mirror_left, int n_wg_right);

enum class Material : int { Air = 0, Diamond = 1, GaP = 2 };

/// Point-wise material of the hybrid structure: GaP ridge on a diamond ridge of
/// depth h on a diamond half-space, pierced by the layout's holes for -h < z < d.
/// The ridge is infinite along x.
class HybridStructure {
public:
    HybridStructure(HoleLayout layout, DeviceSpec spec);
    Material material_at(double x, double y, double z) const;
    const HoleLayout& layout() const { return layout_; }
    const DeviceSpec& spec() const { return spec_; }

private:
    bool in_hole(double x, double y) const;

    HoleLayout layout_;
    DeviceSpec spec_;
};

/// Infinitely tall diamond slab of width w (|y| < w/2) patterned with vertical air
/// holes. Invariant along z.
class VerticalSlab {
public:
    VerticalSlab(HoleLayout layout, double width);
    Material material_at(double x, double y, double z) const;

private:
    HoleLayout layout_;
    double half_width_;
};

struct PermittivityGrid {
    GridSpec grid;
    double resolution = 0.0;                 ///< cells per a_o
    std::array<std::vector<double>, 3> eps;  ///< per E-component Yee sample, x-fastest
    std::vector<std::string> warnings;

    double at(Component c, int i, int j, int k) const {
        return eps[component_axis(c)][grid.linear(i, j, k)];
    }
};

struct SamplingOptions {
    bool smoothing = true;
    int supersample = 4;  ///< sub-samples per axis in boundary cells
    /// Treat the grid as periodic along x with this period (nm) when looking up holes.
    /// Zero means no wrapping.
    double x_period_nm = 0.0;
};

/// Samples eps on every E-component Yee position. With smoothing, samples whose
/// cell straddles a material boundary get the arithmetic volume average.
PermittivityGrid sample_permittivity(const HoleLayout& layout, const DeviceSpec& spec,
                                     const MaterialStack& stack, const GridSpec& grid,
                                     const SamplingOptions& opts = {});

using MaterialFn = std::function<Material(double x, double y, double z)>;

/// Same, for an arbitrary point-wise material function. `min_feature_nm` drives the
/// under-resolution warning.
PermittivityGrid sample_materials(const MaterialFn& material, const MaterialStack& stack, const GridSpec& grid,
                                  const SamplingOptions& opts, double min_feature_nm, double a_o_nm);

struct VerticalSlabGrid {
    int cells_per_period = 20;
    double y_extent_nm = 0.0;  ///< half-width of the lateral domain; 0 picks w/2 + 3a
    bool mirror_y = true;      ///< domain starts at y = 0 (symmetry plane)
    bool smoothing = true;
};

/// The structured-lightline auxiliary structure: one period of the vertical slab on a
/// grid that is a single cell tall, since the slab is invariant along z.
PermittivityGrid build_vertical_slab(const DeviceSpec& spec, double a, const MaterialStack& stack = {},
                                     const VerticalSlabGrid& opts = {});

}  // namespace nwpc
