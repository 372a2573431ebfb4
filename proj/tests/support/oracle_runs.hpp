#pragma once

// FDTD runs compared against closed-form oracles. Shared by the unit tests and the
// acceptance report.

#include <algorithm>
#include <cmath>
#include <vector>

#include "../oracles/slab_waveguide.hpp"
#include "../oracles/transfer_matrix.hpp"
#include "grids.hpp"
#include "nwpc/experiment/unit_cell.hpp"
#include "nwpc/fdtd/simulation.hpp"

namespace nwpc::testing {

namespace detail {

constexpr double kUnit = 10.0;  // nm per engine length unit

/// 1D line along `axis` with PML at both ends.
inline fdtd::SimulationPlan line_plan(int axis, int n_cells, double dx_nm, double pml_nm) {
    std::array<int, 3> n{1, 1, 1};
    n[axis] = n_cells;
    std::array<double, 3> origin{0, 0, 0};
    origin[axis] = -0.5 * n_cells * dx_nm;
    fdtd::SimulationPlan p;
    p.eps = uniform_grid(n, dx_nm, 1.0, origin);
    p.length_unit_nm = kUnit;
    p.courant = 0.5;
    for (int a = 0; a < 3; ++a)
        p.boundaries[a] = a == axis ? fdtd::AxisBoundary::pml(pml_nm) : fdtd::AxisBoundary::bloch(0.0);
    return p;
}

inline std::array<double, 3> point_on(int axis, double s) {
    std::array<double, 3> p{0, 0, 0};
    p[axis] = s;
    return p;
}

inline double series_energy(const std::vector<fdtd::cplx>& v) {
    double e = 0;
    for (const auto& x : v) e += std::norm(x);
    return e;
}

}  // namespace detail

/// Worst |T_fdtd - T_tmm| over 0.15..0.35 c/(10 nm) for a three-layer stack.
inline double stack_transmittance_error() {
    using namespace fdtd;
    const double dx = 0.25;  // nm
    const std::vector<oracle::Layer> layers{{1.5, 30.0}, {3.0, 17.0}, {2.0, 24.0}};
    const double z0 = 0.0;

    auto build = [&](bool with_stack) {
        auto plan = detail::line_plan(2, 3200, dx, 60.0);
        auto grid = std::const_pointer_cast<PermittivityGrid>(plan.eps);
        auto eps_at = [&](double z) {
            double zc = z0;
            for (const auto& l : layers) {
                if (z >= zc && z < zc + l.thickness) return l.n * l.n;
                zc += l.thickness;
            }
            return 1.0;
        };
        if (with_stack) {
            for (int k = 0; k < grid->grid.n[2]; ++k) {
                // Ex lives on z nodes; average eps over the sample's cell.
                const double z = grid->grid.origin_nm[2] + k * dx;
                double acc = 0;
                const int sub = 64;
                for (int s = 0; s < sub; ++s) acc += eps_at(z - 0.5 * dx + (s + 0.5) * dx / sub);
                grid->eps[0][k] = acc / sub;
                grid->eps[1][k] = acc / sub;
                // Ez is never excited in this polarization.
                grid->eps[2][k] = eps_at(z + 0.5 * dx);
            }
        }
        SourceSpec src;
        src.position_nm = {0, 0, -200};
        src.component = Component::Ex;
        src.center_frequency = 0.25;
        src.bandwidth = 0.06;
        plan.sources.push_back(src);
        MonitorSpec mon;
        mon.name = "t";
        mon.normal = Axis::Z;
        mon.coordinate_nm = 200;
        mon.extent = Box{{-1, -1, 0}, {1, 1, 0}};
        for (double f = 0.15; f <= 0.351; f += 0.01) mon.frequencies.push_back(f);
        plan.monitors.push_back(mon);
        plan.t_max = src.end_time() + 400.0 / detail::kUnit + 100.0;
        return run(plan);
    };
    const auto ref = build(false);
    const auto stack = build(true);
    const auto& freqs = ref.monitors[0].spec.frequencies;
    double worst = 0;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const double t_fdtd = stack.monitors[0].flux[i] / ref.monitors[0].flux[i];
        const double lambda_nm = detail::kUnit / freqs[i];
        const double t_exact = oracle::stack_transmittance(layers, 1.0, 1.0, lambda_nm);
        worst = std::max(worst, std::abs(t_fdtd - t_exact));
    }
    return worst;
}

/// Energy fraction returned by the PML terminating a 1D line along `axis`.
inline double pml_reflection_fraction(int axis) {
    using namespace fdtd;
    const int pol = (axis + 1) % 3;
    auto make = [&](int cells) {
        auto plan = detail::line_plan(axis, cells, 1.0, 40.0);
        // Shift so the right PML face sits at the same place for both domains.
        auto grid = std::const_pointer_cast<PermittivityGrid>(plan.eps);
        grid->grid.origin_nm[axis] = 300.0 - cells * 1.0;
        SourceSpec src;
        src.position_nm = detail::point_on(axis, 0.0);
        src.component = static_cast<Component>(pol);
        src.center_frequency = 0.25;
        src.bandwidth = 0.08;
        plan.sources.push_back(src);
        plan.probes.push_back({detail::point_on(axis, 100.0), static_cast<Component>(pol)});
        plan.t_max = src.end_time() + 60.0;
        return run(plan);
    };
    // In the small domain the left face is 340 nm from the source; in the big one
    // it is far enough that nothing returns from it within the window.
    const auto small = make(640);
    const auto big = make(4000);
    const auto& a = small.probes[0].values;
    const auto& b = big.probes[0].values;
    if (a.size() != b.size()) return INFINITY;
    // The incident pulse is what the reference records; the difference is the
    // reflection from the right face plus the left face of the small domain.
    std::vector<cplx> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    return detail::series_energy(diff) / detail::series_energy(b);
}

struct SlabPoint {
    double k = 0, fdtd = NAN, exact = NAN;
    double relative_error() const { return std::abs(fdtd - exact) / exact; }
};

/// Lowest guided mode of the hole-free vertical diamond slab against the analytic
/// transcendental solution.
inline SlabPoint slab_dispersion_point(double k) {
    using namespace experiment;
    DeviceSpec spec;
    spec.r = 0.0;
    UnitCellOptions o;
    o.resolution = 20;
    o.margin_side_nm = 480;
    o.f_min = 0.05;
    o.f_max = 0.3;
    o.source_frequency = 0.15;
    o.source_bandwidth = 0.08;
    o.classify = false;
    const auto r = run_slab_cell(spec, MaterialStack{}, spec.a_o, k, o);
    SlabPoint p;
    p.k = k;
    for (const auto& m : r.modes.modes)
        if (m.q_wg > 1e3 && (std::isnan(p.fdtd) || m.frequency < p.fdtd)) p.fdtd = m.frequency;
    p.exact = oracle::slab_normal_e_frequency(k, spec.w / spec.a_o, 2.4, 1.0);
    return p;
}

}  // namespace nwpc::testing
