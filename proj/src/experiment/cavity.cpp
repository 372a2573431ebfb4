#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "common.hpp"
#include "nwpc/analysis/modes.hpp"
#include "nwpc/errors.hpp"
#include "nwpc/fdtd/snapshot.hpp"

namespace nwpc::experiment {

using namespace detail;
using namespace nwpc::fdtd;

namespace {

constexpr double kPi = std::numbers::pi;

struct CavityDomain {
    SimulationPlan plan;
    Box dft_box;
    double x_end_mon = 0, y_mon = 0, z_top_mon = 0, z_bot_mon = 0;
    HoleLayout layout;
};

// Quarter domain: the planes x = 0 and y = 0 are mirrors. The ridge runs past the
// last mirror hole for tail_nm before entering the x PML.
CavityDomain build_domain(const DeviceSpec& dev, const MaterialStack& mat, const CavitySettings& cs,
                          double resolution, double courant) {
    CavityDomain D;
    const double dx = dev.a_o / resolution;
    D.layout = build_cavity_layout(dev);
    const int n_pml = std::max(1, static_cast<int>(std::lround(cs.pml_nm / dx)));
    const double pml = n_pml * dx;
    const int nx = static_cast<int>(std::ceil((D.layout.x_end + cs.tail_nm) / dx)) + n_pml;
    const int ny = static_cast<int>(std::ceil((0.5 * dev.w + cs.y_margin_nm) / dx)) + n_pml;
    const int nz_lo = static_cast<int>(std::ceil((dev.h + cs.z_below_nm) / dx)) + n_pml;
    const int nz_hi = static_cast<int>(std::ceil(cs.z_above_nm / dx)) + n_pml;
    GridSpec g;
    g.n = {nx, ny, nz_lo + nz_hi};
    g.dx_nm = dx;
    g.origin_nm = {0.0, 0.0, -nz_lo * dx};
    SamplingOptions so;
    so.smoothing = true;
    auto eps = std::make_shared<PermittivityGrid>(sample_permittivity(D.layout, dev, mat, g, so));
    eps->resolution = resolution;

    auto& plan = D.plan;
    plan.eps = eps;
    plan.length_unit_nm = dev.a_o;
    plan.courant = courant;
    plan.boundaries[0] = AxisBoundary::mirror(Parity::Even, pml);
    plan.boundaries[1] = AxisBoundary::mirror(Parity::Odd, pml);
    plan.boundaries[2] = AxisBoundary::pml(pml);
    const Box in = plan.interior_nm();
    D.x_end_mon = in.hi[0] - cs.monitor_offset_nm;
    D.y_mon = in.hi[1] - cs.monitor_offset_nm;
    D.z_top_mon = in.hi[2] - cs.monitor_offset_nm;
    D.z_bot_mon = in.lo[2] + cs.monitor_offset_nm;
    D.dft_box.lo = {0.0, 0.0, D.z_bot_mon};
    D.dft_box.hi = {D.x_end_mon, D.y_mon, D.z_top_mon};
    return D;
}

std::vector<MonitorSpec> budget_monitors(const CavityDomain& D, double f) {
    auto plane = [&](const char* name, Axis normal, double coord, int sign) {
        MonitorSpec m;
        m.name = name;
        m.normal = normal;
        m.coordinate_nm = coord;
        m.extent = D.dft_box;
        m.sign = sign;
        m.frequencies = {f};
        return m;
    };
    return {plane("top", Axis::Z, D.z_top_mon, 1), plane("bottom", Axis::Z, D.z_bot_mon, -1),
            plane("end", Axis::X, D.x_end_mon, 1), plane("side", Axis::Y, D.y_mon, 1)};
}

json resonance_json(const analysis::ResonanceEstimate& r, double strength) {
    return {{"frequency", r.frequency}, {"q", number_or_null(r.q)}, {"decay", r.decay},
            {"q_saturated", r.q_saturated}, {"strength", strength}};
}

struct Excitation {
    double f_source = 0, bandwidth = 0, f_lo = 0, f_hi = 0;
    double f_mirror = 0, f_center = 0;  // band edges, c / a_o
};

json run_cavity_point(const DeviceSpec& dev, const MaterialStack& mat, const CavitySettings& cs, double resolution,
                      double courant, const Excitation& ex, const std::filesystem::path& dir) {
    CavityDomain D = build_domain(dev, mat, cs, resolution, courant);
    auto& plan = D.plan;
    SourceSpec src;
    src.position_nm = {0.0, 0.0, 0.5 * dev.d};
    src.component = Component::Ey;
    src.center_frequency = ex.f_source;
    src.bandwidth = ex.bandwidth;
    src.kind = PulseKind::Narrowband;
    plan.sources = {src};
    plan.probes = {{{0.0, 0.0, 0.45 * dev.d}, Component::Ey},
                   {{0.3 * dev.a_c, 0.25 * dev.w, 0.5 * dev.d}, Component::Ey},
                   {{0.4 * dev.a_c, 0.2 * dev.w, 0.5 * dev.d}, Component::Ex}};
    const double t_src = src.end_time();
    const double t_ring = t_src + cs.ring_time;
    plan.t_max = t_ring + cs.dft_time;
    plan.dft_stride = cs.dft_stride;

    Simulation<double> sim(plan);
    sim.run_until(t_ring);
    const RunResult r1 = sim.result();

    analysis::HarminvOptions ho;
    ho.f_min = ex.f_lo;
    ho.f_max = ex.f_hi;
    ho.amplitude_floor = 1e-5;
    std::vector<analysis::HarminvResult> per_probe;
    std::vector<std::string> warnings = plan.eps->warnings;
    for (const auto& p : r1.probes) {
        const auto first = static_cast<std::size_t>(std::ceil((t_src - p.t0) / p.dt));
        if (first >= p.values.size()) continue;
        std::vector<cplx> rec(p.values.begin() + static_cast<std::ptrdiff_t>(first), p.values.end());
        per_probe.push_back(analysis::harmonic_inversion(rec, p.dt, ho));
        for (const auto& w : per_probe.back().warnings) warnings.push_back(w);
    }
    const auto merged = merge_probe_modes(per_probe, 0.25 / cs.ring_time, cs.ring_time);
    const MergedMode* best = nullptr;
    json others = json::array();
    for (const auto& m : merged) {
        if (m.strength < 1e-3) continue;
        others.push_back(resonance_json(m.estimate, m.strength));
        if (!best || m.estimate.q > best->estimate.q) best = &m;
    }
    if (!best) {
        std::ostringstream msg;
        msg << "cavity: no resonance found between f = " << ex.f_lo << " and " << ex.f_hi
            << " c/a_o (band edges " << ex.f_mirror << ", " << ex.f_center << ")";
        throw NumericalError(msg.str());
    }
    const double fc = best->estimate.frequency;

    const TimeWindow window{t_ring, t_ring + cs.dft_time, true};
    sim.set_flux_window(window);
    for (const auto& m : budget_monitors(D, fc)) sim.add_monitor(m);
    DftRegionSpec reg;
    reg.name = "mode";
    reg.box = D.dft_box;
    reg.frequencies = {fc};
    reg.window = window;
    sim.add_dft_region(reg);
    sim.run_until(t_ring + cs.dft_time);
    sim.check_finite();
    const RunResult r2 = sim.result();

    const ModeField& mode = r2.dft_regions.at(0).modes.at(0);
    const double u = analysis::dft_stored_energy(mode, plan.dx());
    analysis::FacePowers fp;
    for (const auto& m : r2.monitors) {
        const double p = m.flux.at(0);
        if (m.spec.name == "top") fp.top = p;
        if (m.spec.name == "bottom") fp.bottom = p;
        if (m.spec.name == "end") fp.end = p;
        if (m.spec.name == "side") fp.side = p;
    }
    const auto budget = analysis::q_from_energy_flux(2.0 * kPi * fc, u, fp);
    const auto vol = analysis::mode_volume(mode, mat.n_gap);
    for (const auto& w : vol.warnings) warnings.push_back(w);

    // Field ratio on the axis x = y = 0, relative to the field at the energy peak.
    const auto e2 = analysis::node_field_sq(mode);
    const auto dens = analysis::node_energy_density(mode);
    const std::size_t peak = static_cast<std::size_t>(std::max_element(dens.begin(), dens.end()) - dens.begin());
    const double e0_sq = e2[peak];
    const auto& mg = mode.grid;
    const double dx = mg.dx_nm;
    const int k_surface = static_cast<int>(std::lround(-mg.origin_nm[2] / dx));
    std::ostringstream prof;
    prof << "# z_nm,abs_e_over_e0\n" << std::setprecision(10);
    std::vector<std::pair<double, double>> axis;
    for (int k = 0; k < mg.n[2]; ++k) {
        const double z = mg.origin_nm[2] + k * dx;
        const double r = std::sqrt(e2[mg.linear(0, 0, k)] / e0_sq);
        axis.emplace_back(z, r);
        prof << z << ',' << r << '\n';
    }
    write_file_atomic(dir / "vertical_profile.csv", prof.str());
    const double field_ratio = axis.at(static_cast<std::size_t>(k_surface)).second;
    double depth_01 = std::numeric_limits<double>::quiet_NaN();
    for (int k = k_surface; k > 0; --k) {
        const auto [z1, r1v] = axis[static_cast<std::size_t>(k)];
        const auto [z0, r0v] = axis[static_cast<std::size_t>(k - 1)];
        if (r1v >= 0.1 && r0v < 0.1 && r0v > 0) {
            const double t = std::log(r1v / 0.1) / std::log(r1v / r0v);
            depth_01 = -(z1 + t * (z0 - z1));
            break;
        }
    }

    json files = json::array({"vertical_profile.csv", "layout.csv", "probe_ey.csv"});
    {
        std::ostringstream lay;
        D.layout.write_csv(lay);
        write_file_atomic(dir / "layout.csv", lay.str());
        write_probe_csv(r1.probes.at(0), (dir / "probe_ey.csv").string());
    }
    if (cs.snapshots) {
        const int kz = static_cast<int>(std::lround((0.5 * dev.d - mg.origin_nm[2]) / dx));
        write_snapshot((dir / "ey_plane_z_mid_gap.nwfd").string(),
                       slice_mode(mode, Component::Ey, Axis::Z, kz, resolution));
        write_snapshot((dir / "ey_plane_x0.nwfd").string(), slice_mode(mode, Component::Ey, Axis::X, 0, resolution));
        files.push_back("ey_plane_z_mid_gap.nwfd");
        files.push_back("ey_plane_x0.nwfd");
    }

    auto sat = [&](int i) { return budget.saturated[static_cast<std::size_t>(i)]; };
    json qb{{"q_total", budget.q_total}, {"q_top", budget.q_top}, {"q_bot", budget.q_bot},
            {"q_end", budget.q_end},     {"q_side", budget.q_side},
            {"saturated", {sat(0), sat(1), sat(2), sat(3), sat(4)}},
            {"harmonic_residual", budget.harmonic_residual()},
            {"power_top", fp.top}, {"power_bottom", fp.bottom}, {"power_end", fp.end}, {"power_side", fp.side},
            {"stored_energy", u}};
    return {{"frequency", fc},
            {"lambda_nm", dev.a_o / fc},
            {"q", number_or_null(best->estimate.q)},
            {"q_saturated", best->estimate.q_saturated},
            {"resonance", resonance_json(best->estimate, best->strength)},
            {"modes_in_window", others},
            {"q_budget", qb},
            {"v_bar", vol.volume},
            {"mode_volume",
             {{"v_bar", vol.volume},
              {"volume_nm3", vol.volume_nm3},
              {"boundary_ratio", vol.boundary_ratio},
              {"peak_position_nm", vol.peak_position_nm}}},
            {"field_ratio", field_ratio},
            {"depth_tenth_field_nm", number_or_null(depth_01)},
            {"excitation",
             {{"f_source", ex.f_source},
              {"bandwidth", ex.bandwidth},
              {"f_window", {ex.f_lo, ex.f_hi}},
              {"band_edge_mirror", ex.f_mirror},
              {"band_edge_center", ex.f_center}}},
            {"dx_nm", plan.eps->grid.dx_nm},
            {"grid", plan.eps->grid.n},
            {"steps", sim.steps()},
            {"files", files},
            {"warnings", warnings}};
}

DeviceSpec variant(const DeviceSpec& base, const std::string& param, double v) {
    DeviceSpec d = base;
    if (param == "h") d.h = v;
    if (param == "a_c") d.a_c = v;
    if (param == "n_mirror") d.n_mirror = static_cast<int>(std::lround(v));
    return d;
}

std::vector<double> potential_spacings(const DeviceSpec& dev, bool full) {
    if (!full) return {dev.a_c, dev.a_o};
    std::set<double> s;
    for (double g : build_cavity_layout(dev).gaps()) s.insert(g);
    s.insert(dev.a_o);
    return {s.begin(), s.end()};
}

}  // namespace

RunSummary run_cavity(const ExperimentConfig& cfg, int jobs) {
    if (cfg.kind != ExperimentKind::Cavity) throw ConfigError("run_cavity needs a cavity configuration");
    cfg.validate();
    const std::string started = utc_timestamp();
    ResultStore store(cfg.output_dir);
    const auto& cs = cfg.simulation.cavity;
    UnitCellOptions be = cs.band_edge;
    be.resolution = cfg.simulation.resolution;
    be.courant = cfg.simulation.courant;
    const std::string param = cfg.sweep ? cfg.sweep->parameter : "";
    const std::vector<double> values = cfg.sweep ? cfg.sweep->values : std::vector<double>{0.0};
    std::vector<DeviceSpec> devices;
    for (double v : values) devices.push_back(cfg.sweep ? variant(cfg.device, param, v) : cfg.device);

    // Band edges first: every distinct (cross-section, spacing) pair once.
    std::vector<PointTask> cells;
    std::set<std::string> seen;
    for (const auto& dev : devices)
        for (double a : potential_spacings(dev, cs.full_potential)) {
            auto t = ridge_task(dev, cfg.materials, a, 0.5, ModeClass::TeLike, be,
                                "band edge h=" + fmt(dev.h) + " a=" + fmt(a));
            if (seen.insert(json_hash(t.spec)).second) cells.push_back(std::move(t));
        }
    RunSummary s;
    note_failures(s, cells, run_points(store, cells, jobs));

    auto edge = [&](const DeviceSpec& dev, double a) {
        auto stored = store.load(ridge_cell_spec(dev, cfg.materials, a, 0.5, ModeClass::TeLike, be));
        if (!stored) throw NumericalError("band edge at a = " + fmt(a) + " nm unavailable");
        const auto modes = modes_from_json(*stored);
        const auto* m = lowest_te_mode(modes, 0.0);
        if (!m) throw NumericalError("no TE-like band edge found at a = " + fmt(a) + " nm");
        return m->frequency * dev.a_o / a;
    };

    std::vector<PointTask> tasks;
    std::vector<std::size_t> task_of(values.size(), SIZE_MAX);
    std::vector<json> potentials(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const DeviceSpec dev = devices[i];
        const std::string label = cfg.sweep ? "cavity " + param + "=" + fmt(values[i]) : "cavity";
        Excitation ex;
        try {
            ex.f_mirror = edge(dev, dev.a_o);
            ex.f_center = edge(dev, dev.a_c);
            json pot = json::array();
            if (cs.full_potential) {
                for (const auto& p : analysis::band_edge_potential(build_cavity_layout(dev),
                                                                   [&](double a) { return edge(dev, a); }))
                    pot.push_back({{"x_nm", p.x_nm}, {"a_nm", p.a_cav_nm}, {"frequency", p.frequency}});
            }
            potentials[i] = pot;
        } catch (const NumericalError& e) {
            s.failures.push_back(label + ": " + e.what());
            continue;
        }
        // The resonance sits between the mirror edge and the centre edge, nearer the latter.
        const double depth = ex.f_center - ex.f_mirror;
        ex.bandwidth = std::max(0.5 * std::abs(depth), cs.min_bandwidth);
        ex.f_source = depth > 0 ? ex.f_center - 0.25 * depth : ex.f_center;
        ex.f_lo = ex.f_source - 3.0 * ex.bandwidth;
        ex.f_hi = ex.f_source + 3.0 * ex.bandwidth;
        json cav_json = to_json(cfg)["simulation"]["cavity"];
        cav_json.erase("band_edge");
        json spec{{"kind", "cavity"},
                  {"tool_version", tool_version},
                  {"device", to_json(dev)},
                  {"materials", to_json(cfg.materials)},
                  {"cavity", cav_json},
                  {"resolution", cfg.simulation.resolution},
                  {"courant", cfg.simulation.courant},
                  {"excitation", {ex.f_source, ex.bandwidth, ex.f_lo, ex.f_hi, ex.f_mirror, ex.f_center}}};
        const auto mat = cfg.materials;
        const double res = cfg.simulation.resolution, courant = cfg.simulation.courant;
        task_of[i] = tasks.size();
        tasks.push_back({spec, label, [=](const std::filesystem::path& dir) {
                             return run_cavity_point(dev, mat, cs, res, courant, ex, dir);
                         }});
    }
    note_failures(s, tasks, run_points(store, tasks, jobs));

    const std::string col = cfg.sweep ? param : "point";
    std::ostringstream csv;
    csv << "# " << col
        << ",frequency_c_over_a_o,lambda_nm,q,q_budget,q_top,q_bot,q_end,q_side,v_bar_lambda_over_n_cubed,field_ratio\n"
        << std::setprecision(10);
    json points = json::array();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (task_of[i] == SIZE_MAX) continue;
        auto stored = store.load(tasks[task_of[i]].spec);
        if (!stored) continue;
        json p = *stored;
        const json& qb = p["q_budget"];
        csv << values[i] << ',' << p["frequency"].get<double>() << ',' << p["lambda_nm"].get<double>() << ','
            << number_or_nan(p["q"]) << ',' << qb["q_total"].get<double>() << ',' << qb["q_top"].get<double>() << ','
            << qb["q_bot"].get<double>() << ',' << qb["q_end"].get<double>() << ',' << qb["q_side"].get<double>()
            << ',' << p["v_bar"].get<double>() << ',' << p["field_ratio"].get<double>() << '\n';
        p["parameter"] = cfg.sweep ? json(param) : json(nullptr);
        p["value"] = cfg.sweep ? json(values[i]) : json(nullptr);
        p["potential"] = potentials[i];
        const std::string rel = "points/" + json_hash(tasks[task_of[i]].spec).substr(0, 24);
        json files = json::array();
        for (const auto& f : p["files"]) files.push_back(rel + "/" + f.get<std::string>());
        p["files"] = files;
        points.push_back(p);
    }
    emit(s, store, "cavity.csv", csv.str());
    if (!cfg.sweep && !potentials[0].is_null()) {
        std::ostringstream pc;
        pc << "# x_nm,a_nm,band_edge_c_over_a_o\n" << std::setprecision(10);
        for (const auto& p : potentials[0])
            pc << p["x_nm"].get<double>() << ',' << p["a_nm"].get<double>() << ',' << p["frequency"].get<double>()
               << '\n';
        emit(s, store, "potential.csv", pc.str());
    }
    json report = report_header(cfg);
    report["parameter"] = cfg.sweep ? json(param) : json(nullptr);
    report["points"] = points;
    report["failed_points"] = s.failures;
    emit(s, store, "cavity.json", report.dump(1) + "\n");
    s.report = report;
    finish(s, store, cfg, started);
    return s;
}

}  // namespace nwpc::experiment
