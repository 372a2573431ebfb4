#pragma once

// Description of one FDTD run. Units inside the engine: c = 1, lengths in units of
// `length_unit_nm` (normally a_o), so frequencies are normalized as f * a / c.

#include <array>
#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nwpc/geometry.hpp"
#include "nwpc/yee.hpp"

namespace nwpc::fdtd {

enum class BoundaryKind { Pec, Pml, Bloch, Mirror };

/// Symmetry of the tangential electric field across a mirror plane.
/// Even: tangential E even, tangential H vanishes on the plane (magnetic wall).
/// Odd: tangential E vanishes on the plane (electric wall).
enum class Parity { Even = 1, Odd = -1 };

struct AxisBoundary {
    BoundaryKind low = BoundaryKind::Pec;
    BoundaryKind high = BoundaryKind::Pec;
    double pml_low_nm = 0.0;
    double pml_high_nm = 0.0;
    double bloch_k = 0.0;  ///< rad/nm, Bloch axes only
    Parity parity = Parity::Even;

    static AxisBoundary pml(double thickness_nm) {
        return {BoundaryKind::Pml, BoundaryKind::Pml, thickness_nm, thickness_nm, 0.0, Parity::Even};
    }
    static AxisBoundary bloch(double k) {
        return {BoundaryKind::Bloch, BoundaryKind::Bloch, 0.0, 0.0, k, Parity::Even};
    }
    static AxisBoundary mirror(Parity p, double pml_high_nm) {
        return {BoundaryKind::Mirror, pml_high_nm > 0 ? BoundaryKind::Pml : BoundaryKind::Pec, 0.0, pml_high_nm,
                0.0, p};
    }
};

enum class PulseKind { Broadband, Narrowband };

/// Gaussian-envelope point current. `bandwidth` is the standard deviation of the
/// amplitude spectrum; the envelope peaks `cutoff` temporal widths after t = 0.
struct SourceSpec {
    std::array<double, 3> position_nm{0, 0, 0};
    Component component = Component::Ey;
    double center_frequency = 0.25;
    double bandwidth = 0.05;
    PulseKind kind = PulseKind::Broadband;
    std::complex<double> amplitude = 1.0;
    double cutoff = 5.0;

    double temporal_width() const;
    double peak_time() const { return cutoff * temporal_width(); }
    double end_time() const { return 2.0 * peak_time(); }
};

struct ProbeSpec {
    std::array<double, 3> position_nm{0, 0, 0};
    Component component = Component::Ey;
};

struct Box {
    std::array<double, 3> lo{0, 0, 0};
    std::array<double, 3> hi{0, 0, 0};
    bool contains(const std::array<double, 3>& p, double tol = 1e-9) const {
        for (int a = 0; a < 3; ++a)
            if (p[a] < lo[a] - tol || p[a] > hi[a] + tol) return false;
        return true;
    }
};

/// Axis-aligned flux plane. The extent along `normal` is ignored; `coordinate_nm`
/// fixes the plane. `sign` orients the reported power (+1 means flow toward +normal).
struct MonitorSpec {
    std::string name;
    Axis normal = Axis::X;
    double coordinate_nm = 0.0;
    Box extent;
    int sign = 1;
    std::vector<double> frequencies;  ///< DFT frequencies; empty = time-domain power only
};

/// Time window with optional Hann weighting for DFT accumulators.
struct TimeWindow {
    double start = 0.0;
    double end = 1e300;
    bool hann = false;
    bool contains(double t) const { return t >= start && t <= end; }
};

struct DftRegionSpec {
    std::string name;
    Box box;
    std::vector<double> frequencies;
    TimeWindow window;
};

struct SimulationPlan {
    std::shared_ptr<const PermittivityGrid> eps;
    double length_unit_nm = 160.0;
    double courant = 0.5 / 1.7320508075688772;
    std::array<AxisBoundary, 3> boundaries{};
    double pml_strength = 1.0;  ///< multiplier on the optimal cubic-profile conductivity
    double pml_alpha = 0.02;    ///< complex-frequency-shift parameter at the PML interface
    std::vector<SourceSpec> sources;
    std::vector<ProbeSpec> probes;
    std::vector<MonitorSpec> monitors;
    std::optional<Box> energy_box;
    std::vector<DftRegionSpec> dft_regions;
    TimeWindow average_window;  ///< window for time-averaged power and energy
    TimeWindow flux_window;     ///< window for monitor DFTs
    double t_max = 100.0;       ///< run length in engine time units
    int dft_stride = 1;         ///< accumulate DFTs and averages every n steps
    int nan_check_interval = 64;

    /// Engine-unit grid spacing.
    double dx() const { return eps->grid.dx_nm / length_unit_nm; }
    double dt() const { return courant * dx(); }
    /// Number of axes with more than one cell.
    int dimensions() const;
    bool needs_complex_fields() const;
    /// Run length expressed in optical periods at the given normalized frequency.
    void set_t_max_periods(double periods, double frequency) { t_max = periods / frequency; }
    /// Throws ConfigError on an unstable or inconsistent plan.
    void validate() const;
    /// Coordinates (nm) of the non-PML region.
    Box interior_nm() const;
};

/// Halves the domain on `axis` using a mirror plane at coordinate 0. The full
/// domain must be symmetric about 0 with the plane on a grid node; sources must lie
/// on the plane. Monitors, boxes and probes are clipped to the kept half.
SimulationPlan impose_mirror_symmetry(const SimulationPlan& plan, Axis axis, Parity parity);

}  // namespace nwpc::fdtd
