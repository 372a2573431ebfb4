#include "nwpc/experiment/unit_cell.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nwpc/analysis/modes.hpp"
#include "nwpc/errors.hpp"
#include "nwpc/fdtd/simulation.hpp"

namespace nwpc::experiment {

using namespace nwpc::fdtd;

std::string to_string(ModeClass c) { return c == ModeClass::TeLike ? "te" : "tm"; }

ModeClass mode_class_from_string(const std::string& s) {
    if (s == "te") return ModeClass::TeLike;
    if (s == "tm") return ModeClass::TmLike;
    throw ConfigError("unknown mode class '" + s + "' (expected te or tm)");
}

namespace {

struct CellSetup {
    SimulationPlan plan;
    Box interior;
    double source_end = 0.0;
};

SourceSpec broadband(const UnitCellOptions& o, std::array<double, 3> p, Component c, double amp) {
    SourceSpec s;
    s.position_nm = p;
    s.component = c;
    s.center_frequency = o.source_frequency;
    s.bandwidth = o.source_bandwidth;
    s.amplitude = amp;
    return s;
}

void check_options(const UnitCellOptions& o) {
    if (!(o.resolution > 0)) throw ConfigError("unit cell: resolution must be positive");
    if (!(o.pml_nm > 0)) throw ConfigError("unit cell: PML thickness must be positive");
    if (o.margin_side_nm < 0 || o.margin_top_nm < 0 || o.margin_bottom_nm < 0)
        throw ConfigError("unit cell: margins must be non-negative");
    if (!(o.record_time > 0) || !(o.dft_time > 0)) throw ConfigError("unit cell: run lengths must be positive");
}

int cells_along_x(double a_nm, double a_o, double resolution) {
    return std::max(1, static_cast<int>(std::lround(a_nm * resolution / a_o)));
}

template <class T>
UnitCellResult analyse(const CellSetup& setup, double k, const UnitCellOptions& o) {
    const double t_rec = setup.source_end;
    UnitCellResult out;
    out.modes.k = k;
    out.dx_nm = setup.plan.eps->grid.dx_nm;
    out.warnings = setup.plan.eps->warnings;

    SimulationPlan ring = setup.plan;
    ring.t_max = t_rec + o.record_time;
    Simulation<T> sim(ring);
    const RunResult rr = sim.run();
    out.steps += rr.steps;

    analysis::HarminvOptions ho;
    ho.f_min = o.f_min;
    ho.f_max = o.f_max;
    ho.amplitude_floor = 1e-5;
    std::vector<analysis::HarminvResult> per_probe;
    for (const auto& p : rr.probes) {
        const auto first = static_cast<std::size_t>(std::ceil((t_rec - p.t0) / p.dt));
        if (first >= p.values.size()) continue;
        std::vector<cplx> rec(p.values.begin() + static_cast<std::ptrdiff_t>(first), p.values.end());
        per_probe.push_back(analysis::harmonic_inversion(rec, p.dt, ho));
        for (const auto& w : per_probe.back().warnings) out.warnings.push_back(w);
    }
    std::vector<analysis::ResonanceEstimate> merged;
    for (const auto& m : merge_probe_modes(per_probe, 0.25 / o.record_time, o.record_time)) {
        if (m.strength < o.strength_min) continue;
        merged.push_back(m.estimate);
        analysis::BandMode b;
        b.k = k;
        b.frequency = m.estimate.frequency;
        b.q_wg = m.estimate.q;
        b.te_fraction = std::nan("");
        b.strength = m.strength;
        out.modes.modes.push_back(b);
    }
    std::vector<std::size_t> wanted;
    for (std::size_t i = 0; i < merged.size(); ++i)
        if (merged[i].q >= o.classify_q_min) wanted.push_back(i);
    if (!o.classify || wanted.empty()) return out;

    SimulationPlan pass = setup.plan;
    pass.t_max = t_rec + o.dft_time;
    pass.probes.clear();
    DftRegionSpec reg;
    reg.name = "cell";
    reg.box = setup.interior;
    for (auto i : wanted) reg.frequencies.push_back(merged[i].frequency);
    reg.window = {t_rec, t_rec + o.dft_time, true};
    pass.dft_regions = {reg};
    pass.dft_stride = 5;
    Simulation<T> sim2(pass);
    const RunResult r2 = sim2.run();
    out.steps += r2.steps;
    const auto& fields = r2.dft_regions.at(0).modes;
    for (std::size_t q = 0; q < fields.size(); ++q) {
        const std::size_t i = wanted[q];
        try {
            out.modes.modes[i].te_fraction = analysis::classify_mode(fields[q]);
        } catch (const ConfigError&) {
            out.warnings.push_back("unit cell: mode at f = " + std::to_string(merged[i].frequency) +
                                   " has no field in the DFT window");
        }
    }
    return out;
}

UnitCellResult dispatch(const CellSetup& setup, double k, const UnitCellOptions& o) {
    if (setup.plan.needs_complex_fields()) return analyse<cplx>(setup, k, o);
    return analyse<double>(setup, k, o);
}

}  // namespace

std::vector<MergedMode> merge_probe_modes(const std::vector<analysis::HarminvResult>& per_probe, double tolerance,
                                          double record_time) {
    auto weight = [&](const analysis::ResonanceEstimate& m) {
        const double life = m.decay > 0 ? std::min(1.0 / m.decay, record_time) : record_time;
        return std::norm(m.amplitude) * life;
    };
    std::vector<MergedMode> all;
    for (const auto& r : per_probe) {
        double peak = 0.0;
        for (const auto& m : r.modes) peak = std::max(peak, weight(m));
        if (peak <= 0) continue;
        for (const auto& m : r.modes) all.push_back({m, weight(m) / peak});
    }
    std::sort(all.begin(), all.end(), [](const MergedMode& a, const MergedMode& b) {
        return a.estimate.frequency < b.estimate.frequency;
    });
    std::vector<MergedMode> out;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i + 1;
        while (j < all.size() && all[j].estimate.frequency - all[j - 1].estimate.frequency <= tolerance) ++j;
        std::size_t best = i;
        for (std::size_t q = i; q < j; ++q)
            if (all[q].strength > all[best].strength) best = q;
        out.push_back(all[best]);
        i = j;
    }
    return out;
}

const analysis::BandMode* lowest_te_mode(const analysis::ModesAtK& modes, double q_min) {
    const analysis::BandMode* best = nullptr;
    for (const auto& m : modes.modes) {
        if (!(m.te_fraction > 0.5) || m.q_wg < q_min) continue;
        if (!best || m.frequency < best->frequency) best = &m;
    }
    return best;
}

UnitCellResult run_ridge_cell(const DeviceSpec& spec, const MaterialStack& stack, double a_nm, double k,
                              ModeClass cls, const UnitCellOptions& o) {
    spec.validate();
    stack.validate();
    check_options(o);
    const HoleLayout cell = spec.r > 0 ? build_periodic_layout(spec, a_nm, 1) : HoleLayout{{}, 0.0, a_nm};

    const int nx = cells_along_x(a_nm, spec.a_o, o.resolution);
    GridSpec g;
    g.dx_nm = a_nm / nx;
    const double dx = g.dx_nm;
    const int ny = static_cast<int>(std::ceil((0.5 * spec.w + o.margin_side_nm + o.pml_nm) / dx));
    const int nz_lo = static_cast<int>(std::ceil((spec.h + o.margin_bottom_nm + o.pml_nm) / dx));
    const int nz_hi = static_cast<int>(std::ceil((spec.d + o.margin_top_nm + o.pml_nm) / dx));
    g.n = {nx, ny, nz_lo + nz_hi};
    g.origin_nm = {0.0, 0.0, -nz_lo * dx};
    SamplingOptions so;
    so.smoothing = o.smoothing;
    so.x_period_nm = a_nm;
    auto eps = std::make_shared<PermittivityGrid>(sample_permittivity(cell, spec, stack, g, so));

    CellSetup s;
    auto& plan = s.plan;
    plan.eps = eps;
    plan.length_unit_nm = a_nm;
    plan.courant = o.courant;
    const double pml_y = std::lround(o.pml_nm / dx) * dx;
    const double z_lo = g.origin_nm[2], z_hi = z_lo + g.length_nm(2);
    const double pml_zlo = std::lround(o.pml_nm / dx) * dx;
    plan.boundaries[0] = AxisBoundary::bloch(2.0 * std::numbers::pi * k / a_nm);
    plan.boundaries[1] = AxisBoundary::mirror(cls == ModeClass::TeLike ? Parity::Odd : Parity::Even, pml_y);
    plan.boundaries[2] = AxisBoundary::pml(pml_zlo);
    plan.dft_stride = 2;

    const double a = a_nm, w = spec.w, d = spec.d;
    const double zr = -std::min(spec.h, 0.75 * d);
    if (cls == ModeClass::TeLike) {
        plan.sources = {broadband(o, {0.21 * a, 0.17 * w, 0.55 * d}, Component::Ey, 1.0),
                        broadband(o, {0.68 * a, 0.31 * w, 0.3 * d}, Component::Ey, 0.7),
                        broadband(o, {0.43 * a, 0.23 * w, 0.4 * zr}, Component::Ez, 0.5)};
        plan.probes = {{{0.36 * a, 0.11 * w, 0.5 * d}, Component::Ey},
                       {{0.83 * a, 0.27 * w, 0.6 * d}, Component::Ey},
                       {{0.07 * a, 0.21 * w, 0.45 * d}, Component::Ex},
                       {{0.55 * a, 0.19 * w, 0.6 * zr}, Component::Ey}};
    } else {
        plan.sources = {broadband(o, {0.21 * a, 0.17 * w, 0.55 * d}, Component::Hy, 1.0),
                        broadband(o, {0.68 * a, 0.31 * w, 0.3 * d}, Component::Hy, 0.7),
                        broadband(o, {0.43 * a, 0.23 * w, 0.4 * zr}, Component::Hz, 0.5)};
        plan.probes = {{{0.36 * a, 0.11 * w, 0.5 * d}, Component::Hy},
                       {{0.83 * a, 0.27 * w, 0.6 * d}, Component::Hy},
                       {{0.07 * a, 0.21 * w, 0.45 * d}, Component::Ez},
                       {{0.55 * a, 0.19 * w, 0.6 * zr}, Component::Hy}};
    }
    s.source_end = 0.0;
    for (const auto& src : plan.sources) s.source_end = std::max(s.source_end, src.end_time());
    s.interior.lo = {0.0, 0.0, z_lo + pml_zlo};
    s.interior.hi = {g.length_nm(0), g.length_nm(1) - pml_y, z_hi - pml_zlo};
    return dispatch(s, k, o);
}

UnitCellResult run_slab_cell(const DeviceSpec& spec, const MaterialStack& stack, double a_nm, double k,
                             const UnitCellOptions& o) {
    check_options(o);
    VerticalSlabGrid vg;
    vg.cells_per_period = cells_along_x(a_nm, spec.a_o, o.resolution);
    const double dx = a_nm / vg.cells_per_period;
    vg.y_extent_nm = 0.5 * spec.w + o.margin_side_nm + o.pml_nm;
    vg.mirror_y = true;
    vg.smoothing = o.smoothing;
    auto eps = std::make_shared<PermittivityGrid>(build_vertical_slab(spec, a_nm, stack, vg));
    const auto& g = eps->grid;

    CellSetup s;
    auto& plan = s.plan;
    plan.eps = eps;
    plan.length_unit_nm = a_nm;
    plan.courant = o.courant;
    const double pml_y = std::lround(o.pml_nm / dx) * dx;
    plan.boundaries[0] = AxisBoundary::bloch(2.0 * std::numbers::pi * k / a_nm);
    plan.boundaries[1] = AxisBoundary::mirror(Parity::Odd, pml_y);
    plan.boundaries[2] = AxisBoundary::bloch(0.0);
    plan.dft_stride = 2;
    const double a = a_nm, w = spec.w;
    plan.sources = {broadband(o, {0.21 * a, 0.17 * w, 0.0}, Component::Ey, 1.0),
                    broadband(o, {0.68 * a, 0.33 * w, 0.0}, Component::Ey, 0.7)};
    plan.probes = {{{0.36 * a, 0.11 * w, 0.0}, Component::Ey},
                   {{0.83 * a, 0.27 * w, 0.0}, Component::Ey},
                   {{0.07 * a, 0.21 * w, 0.0}, Component::Ex}};
    s.source_end = 0.0;
    for (const auto& src : plan.sources) s.source_end = std::max(s.source_end, src.end_time());
    s.interior.lo = {0.0, 0.0, g.origin_nm[2]};
    s.interior.hi = {g.length_nm(0), g.length_nm(1) - pml_y, g.origin_nm[2] + g.length_nm(2)};
    return dispatch(s, k, o);
}

}  // namespace nwpc::experiment
