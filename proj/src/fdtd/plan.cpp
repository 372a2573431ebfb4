#include "nwpc/fdtd/plan.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "nwpc/errors.hpp"

namespace nwpc::fdtd {

double SourceSpec::temporal_width() const { return 1.0 / (2.0 * std::numbers::pi * bandwidth); }

int SimulationPlan::dimensions() const {
    int d = 0;
    for (int a = 0; a < 3; ++a) d += eps->grid.n[a] > 1 ? 1 : 0;
    return d == 0 ? 1 : d;
}

bool SimulationPlan::needs_complex_fields() const {
    for (int a = 0; a < 3; ++a) {
        const auto& b = boundaries[a];
        if (b.low != BoundaryKind::Bloch) continue;
        // Phases of +-1 (k = 0 or the zone edge) keep the fields real.
        if (std::abs(std::sin(b.bloch_k * eps->grid.length_nm(a))) > 1e-12) return true;
    }
    for (const auto& s : sources)
        if (s.amplitude.imag() != 0.0) return true;
    return false;
}

Box SimulationPlan::interior_nm() const {
    Box box;
    const auto& g = eps->grid;
    for (int a = 0; a < 3; ++a) {
        box.lo[a] = g.origin_nm[a];
        box.hi[a] = g.origin_nm[a] + g.length_nm(a);
        if (boundaries[a].low == BoundaryKind::Pml) box.lo[a] += boundaries[a].pml_low_nm;
        if (boundaries[a].high == BoundaryKind::Pml) box.hi[a] -= boundaries[a].pml_high_nm;
    }
    return box;
}

void SimulationPlan::validate() const {
    if (!eps) throw ConfigError("plan: no permittivity grid");
    const auto& g = eps->grid;
    for (int c = 0; c < 3; ++c) {
        if (eps->eps[c].size() != g.cells()) throw ConfigError("plan: permittivity array size mismatch");
    }
    if (!(length_unit_nm > 0)) throw ConfigError("plan: length unit must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(dimensions()));
    if (!(courant > 0 && courant <= bound)) {
        std::ostringstream msg;
        msg << "plan: Courant factor " << courant << " violates the stability bound " << bound;
        throw ConfigError(msg.str());
    }
    for (int a = 0; a < 3; ++a) {
        const auto& b = boundaries[a];
        const bool bloch_lo = b.low == BoundaryKind::Bloch, bloch_hi = b.high == BoundaryKind::Bloch;
        if (bloch_lo != bloch_hi) throw ConfigError("plan: Bloch boundaries must be set on both sides of an axis");
        if (b.high == BoundaryKind::Mirror) throw ConfigError("plan: mirror planes are only supported on the low side");
        if (g.n[a] == 1 && !bloch_lo) throw ConfigError("plan: single-cell axes must be periodic (Bloch)");
        if (b.low == BoundaryKind::Pml && b.pml_low_nm <= 0) throw ConfigError("plan: PML side needs a thickness");
        if (b.high == BoundaryKind::Pml && b.pml_high_nm <= 0) throw ConfigError("plan: PML side needs a thickness");
        const int cells = static_cast<int>(std::lround((b.low == BoundaryKind::Pml ? b.pml_low_nm : 0.0) / g.dx_nm) +
                                           std::lround((b.high == BoundaryKind::Pml ? b.pml_high_nm : 0.0) / g.dx_nm));
        if (cells >= g.n[a]) throw ConfigError("plan: PML layers fill the whole axis");
    }
    if (!(t_max > 0)) throw ConfigError("plan: run length must be positive");
    if (dft_stride < 1) throw ConfigError("plan: DFT stride must be >= 1");
    const Box inner = interior_nm();
    for (const auto& s : sources) {
        if (!(s.bandwidth > 0)) throw ConfigError("plan: source bandwidth must be positive");
        if (!inner.contains(s.position_nm, 0.5 * g.dx_nm)) throw ConfigError("plan: source lies inside a PML or outside the grid");
    }
    for (const auto& m : monitors) {
        const int a = axis_index(m.normal);
        if (!(m.coordinate_nm > inner.lo[a] && m.coordinate_nm < inner.hi[a]) &&
            boundaries[a].low != BoundaryKind::Bloch) {
            throw ConfigError("plan: monitor '" + m.name + "' does not lie strictly inside the non-PML region");
        }
        const double i0 = (m.coordinate_nm - g.origin_nm[a]) / g.dx_nm;
        if (i0 < 0.5 || i0 > g.n[a] - 0.5) throw ConfigError("plan: monitor '" + m.name + "' lies on the grid edge");
    }
    for (const auto& p : probes) {
        Box all{g.origin_nm, {g.origin_nm[0] + g.length_nm(0), g.origin_nm[1] + g.length_nm(1),
                              g.origin_nm[2] + g.length_nm(2)}};
        if (!all.contains(p.position_nm, g.dx_nm)) throw ConfigError("plan: probe outside the grid");
    }
}

namespace {

bool tangential(Component c, int axis) { return component_axis(c) != axis; }

}  // namespace

SimulationPlan impose_mirror_symmetry(const SimulationPlan& plan, Axis axis, Parity parity) {
    plan.validate();
    const int a = axis_index(axis);
    const auto& full = *plan.eps;
    const auto& g = full.grid;
    const double dx = g.dx_nm;
    if (g.n[a] % 2 != 0 || std::abs(g.origin_nm[a] + 0.5 * g.n[a] * dx) > 1e-9 * dx) {
        throw ConfigError("mirror: domain must be centered on the plane with an even cell count");
    }
    const auto& b = plan.boundaries[a];
    if (b.low == BoundaryKind::Bloch || b.low == BoundaryKind::Mirror) {
        throw ConfigError("mirror: axis is already periodic or halved");
    }
    const int m = g.n[a] / 2;

    // Geometric symmetry check on every sample pair.
    for (int c = 0; c < 3; ++c) {
        const bool offset_along = c == a;
        const auto& e = full.eps[c];
        for (int k = 0; k < g.n[2]; ++k)
            for (int j = 0; j < g.n[1]; ++j)
                for (int i = 0; i < g.n[0]; ++i) {
                    std::array<int, 3> idx{i, j, k};
                    std::array<int, 3> img = idx;
                    img[a] = offset_along ? 2 * m - 1 - idx[a] : 2 * m - idx[a];
                    if (img[a] < 0 || img[a] >= g.n[a]) continue;
                    const double v1 = e[g.linear(idx[0], idx[1], idx[2])];
                    const double v2 = e[g.linear(img[0], img[1], img[2])];
                    if (std::abs(v1 - v2) > 1e-9 * std::abs(v1)) {
                        throw ConfigError("mirror: geometry is not symmetric about the plane");
                    }
                }
    }

    auto half = std::make_shared<PermittivityGrid>();
    half->grid = g;
    half->grid.n[a] = m;
    half->grid.origin_nm[a] = 0.0;
    half->resolution = full.resolution;
    half->warnings = full.warnings;
    for (int c = 0; c < 3; ++c) {
        half->eps[c].resize(half->grid.cells());
        for (int k = 0; k < half->grid.n[2]; ++k)
            for (int j = 0; j < half->grid.n[1]; ++j)
                for (int i = 0; i < half->grid.n[0]; ++i) {
                    std::array<int, 3> idx{i, j, k};
                    idx[a] += m;
                    half->eps[c][half->grid.linear(i, j, k)] = full.eps[c][g.linear(idx[0], idx[1], idx[2])];
                }
    }

    SimulationPlan out = plan;
    out.eps = half;
    auto& nb = out.boundaries[a];
    nb.low = BoundaryKind::Mirror;
    nb.pml_low_nm = 0.0;
    nb.parity = parity;

    // A source just below the plane with a partner at the mirrored position is the
    // partner's image; the kept half only needs the partner.
    std::vector<SourceSpec> kept;
    for (const auto& s : out.sources) {
        if (std::abs(s.position_nm[a]) > 0.5 * dx + 1e-9) {
            throw ConfigError("mirror: source off the symmetry plane");
        }
        if (s.position_nm[a] < -1e-9 * dx) {
            bool has_partner = false;
            for (const auto& o : out.sources) {
                auto img = o.position_nm;
                img[a] = -img[a];
                if (o.component == s.component && std::abs(img[a] - s.position_nm[a]) < 1e-9 * dx &&
                    std::abs(img[(a + 1) % 3] - s.position_nm[(a + 1) % 3]) < 1e-9 * dx &&
                    std::abs(img[(a + 2) % 3] - s.position_nm[(a + 2) % 3]) < 1e-9 * dx) {
                    has_partner = true;
                }
            }
            if (has_partner) continue;
        }
        kept.push_back(s);
    }
    out.sources = kept;
    for (auto& s : out.sources) {
        s.position_nm[a] = std::max(s.position_nm[a], 0.0);
        const bool t = tangential(s.component, a);
        const bool killed = is_electric(s.component) ? (t == (parity == Parity::Odd))
                                                     : (t == (parity == Parity::Even));
        if (killed) throw ConfigError("mirror: source polarization is incompatible with the parity");
    }
    for (auto& p : out.probes) {
        if (p.position_nm[a] < -0.5 * dx) throw ConfigError("mirror: probe outside the kept half");
        p.position_nm[a] = std::max(p.position_nm[a], 0.0);
    }
    std::vector<MonitorSpec> monitors;
    for (auto mon : out.monitors) {
        if (axis_index(mon.normal) == a) {
            if (mon.coordinate_nm <= 0) continue;
        } else {
            mon.extent.lo[a] = std::max(mon.extent.lo[a], 0.0);
        }
        monitors.push_back(mon);
    }
    out.monitors = monitors;
    if (out.energy_box) out.energy_box->lo[a] = std::max(out.energy_box->lo[a], 0.0);
    for (auto& r : out.dft_regions) r.box.lo[a] = std::max(r.box.lo[a], 0.0);
    out.validate();
    return out;
}

}  // namespace nwpc::fdtd
