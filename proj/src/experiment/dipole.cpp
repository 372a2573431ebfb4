#include <cmath>
#include <sstream>

#include "common.hpp"
#include "nwpc/errors.hpp"
#include "nwpc/fdtd/simulation.hpp"

namespace nwpc::experiment {

using namespace detail;
using namespace nwpc::fdtd;

namespace {

std::vector<double> frequency_grid(const DipoleSettings& s) {
    std::vector<double> f(static_cast<std::size_t>(s.n_frequencies));
    for (int i = 0; i < s.n_frequencies; ++i)
        f[static_cast<std::size_t>(i)] = s.f_min + (s.f_max - s.f_min) * i / (s.n_frequencies - 1);
    return f;
}

SourceSpec dipole_source(const DipoleSettings& s) {
    SourceSpec src;
    src.position_nm = {0.0, 0.0, -s.depth_nm};
    src.component = Component::Ey;
    src.center_frequency = 0.5 * (s.f_min + s.f_max);
    src.bandwidth = s.source_bandwidth;
    src.amplitude = s.amplitude;
    return src;
}

MonitorSpec plane(const char* name, Axis normal, double coord, const Box& extent, int sign,
                  const std::vector<double>& f) {
    MonitorSpec m;
    m.name = name;
    m.normal = normal;
    m.coordinate_nm = coord;
    m.extent = extent;
    m.sign = sign;
    m.frequencies = f;
    return m;
}

/// Flux planes `offset` inside the PML on every open face. With a mirror at x = 0
/// the x_low plane is omitted.
std::vector<MonitorSpec> closed_box(const SimulationPlan& plan, double offset, const std::vector<double>& f,
                                    bool x_mirror) {
    const Box in = plan.interior_nm();
    Box b;
    b.lo = {x_mirror ? 0.0 : in.lo[0] + offset, 0.0, in.lo[2] + offset};
    b.hi = {in.hi[0] - offset, in.hi[1] - offset, in.hi[2] - offset};
    std::vector<MonitorSpec> out{plane("x_high", Axis::X, b.hi[0], b, 1, f),
                                 plane("side", Axis::Y, b.hi[1], b, 1, f),
                                 plane("top", Axis::Z, b.hi[2], b, 1, f),
                                 plane("bottom", Axis::Z, b.lo[2], b, -1, f)};
    if (!x_mirror) out.push_back(plane("x_low", Axis::X, b.lo[0], b, -1, f));
    return out;
}

json spectra_json(const RunResult& r) {
    json j = json::object();
    for (const auto& m : r.monitors) {
        std::vector<double> p = m.flux;
        for (double& v : p) v *= r.symmetry_factor;  // full-structure power
        j[m.spec.name] = p;
    }
    return j;
}

json run_structure(const ExperimentConfig& cfg) {
    const auto& s = cfg.simulation.dipole;
    const DeviceSpec& dev = cfg.device;
    const double dx = dev.a_o / cfg.simulation.resolution;
    const HoleLayout layout = build_asymmetric_layout(dev, s.n_mirror_left, s.n_wg_right);
    const int n_pml = std::max(1, static_cast<int>(std::lround(s.pml_nm / dx)));
    const double pml = n_pml * dx;
    const int nx_lo = static_cast<int>(std::ceil((s.tail_nm - layout.x_begin) / dx)) + n_pml;
    const int nx_hi = static_cast<int>(std::ceil((layout.x_end + s.tail_nm) / dx)) + n_pml;
    const int ny = static_cast<int>(std::ceil((0.5 * dev.w + s.y_margin_nm) / dx)) + n_pml;
    const int nz_lo = static_cast<int>(std::ceil((dev.h + s.z_below_nm) / dx)) + n_pml;
    const int nz_hi = static_cast<int>(std::ceil(s.z_above_nm / dx)) + n_pml;
    GridSpec g;
    g.n = {nx_lo + nx_hi, ny, nz_lo + nz_hi};
    g.dx_nm = dx;
    g.origin_nm = {-nx_lo * dx, 0.0, -nz_lo * dx};
    auto eps = std::make_shared<PermittivityGrid>(sample_permittivity(layout, dev, cfg.materials, g));
    eps->resolution = cfg.simulation.resolution;

    SimulationPlan plan;
    plan.eps = eps;
    plan.length_unit_nm = dev.a_o;
    plan.courant = cfg.simulation.courant;
    plan.boundaries[0] = AxisBoundary::pml(pml);
    plan.boundaries[1] = AxisBoundary::mirror(Parity::Odd, pml);
    plan.boundaries[2] = AxisBoundary::pml(pml);
    plan.sources = {dipole_source(s)};
    plan.t_max = s.run_time;
    plan.dft_stride = s.dft_stride;
    const auto f = frequency_grid(s);
    plan.monitors = closed_box(plan, s.monitor_offset_nm, f, false);
    // Waveguide ports: 2w x 2d windows centred on the GaP layer.
    const Box in = plan.interior_nm();
    Box port;
    port.lo = {in.lo[0], 0.0, 0.5 * dev.d - dev.d};
    port.hi = {in.hi[0], dev.w, 0.5 * dev.d + dev.d};
    plan.monitors.push_back(plane("wg_forward", Axis::X, in.hi[0] - s.monitor_offset_nm, port, 1, f));
    plan.monitors.push_back(plane("wg_backward", Axis::X, in.lo[0] + s.monitor_offset_nm, port, -1, f));
    const RunResult r = run(plan);
    return {{"frequencies", f}, {"power", spectra_json(r)}, {"steps", r.steps}, {"grid", g.n},
            {"warnings", eps->warnings}};
}

json run_reference(const ExperimentConfig& cfg) {
    const auto& s = cfg.simulation.dipole;
    const DeviceSpec& dev = cfg.device;
    const double dx = dev.a_o / cfg.simulation.resolution;
    const int n_pml = std::max(1, static_cast<int>(std::lround(s.pml_nm / dx)));
    const double pml = n_pml * dx;
    const int nxy = static_cast<int>(std::ceil((0.5 * dev.w + s.y_margin_nm) / dx)) + n_pml;
    const int nz_lo = static_cast<int>(std::ceil((dev.h + s.z_below_nm) / dx)) + n_pml;
    const int nz_hi = static_cast<int>(std::ceil(s.z_above_nm / dx)) + n_pml;
    GridSpec g;
    g.n = {nxy, nxy, nz_lo + nz_hi};
    g.dx_nm = dx;
    g.origin_nm = {0.0, 0.0, -nz_lo * dx};
    SamplingOptions so;
    auto bare = [](double, double, double z) { return z < 0 ? Material::Diamond : Material::Air; };
    auto eps = std::make_shared<PermittivityGrid>(sample_materials(bare, cfg.materials, g, so, dev.d, dev.a_o));
    eps->resolution = cfg.simulation.resolution;

    SimulationPlan plan;
    plan.eps = eps;
    plan.length_unit_nm = dev.a_o;
    plan.courant = cfg.simulation.courant;
    plan.boundaries[0] = AxisBoundary::mirror(Parity::Even, pml);
    plan.boundaries[1] = AxisBoundary::mirror(Parity::Odd, pml);
    plan.boundaries[2] = AxisBoundary::pml(pml);
    plan.sources = {dipole_source(s)};
    plan.t_max = s.run_time;
    plan.dft_stride = s.dft_stride;
    const auto f = frequency_grid(s);
    plan.monitors = closed_box(plan, s.monitor_offset_nm, f, true);
    const RunResult r = run(plan);
    return {{"frequencies", f}, {"power", spectra_json(r)}, {"steps", r.steps}, {"grid", g.n}};
}

std::vector<double> series(const json& power, const char* name) {
    return power.at(name).get<std::vector<double>>();
}

}  // namespace

RunSummary run_dipole_spectrum(const ExperimentConfig& cfg, int jobs) {
    if (cfg.kind != ExperimentKind::Dipole) throw ConfigError("run_dipole_spectrum needs a dipole configuration");
    cfg.validate();
    const std::string started = utc_timestamp();
    ResultStore store(cfg.output_dir);
    json common{{"tool_version", tool_version},
                {"device", to_json(cfg.device)},
                {"materials", to_json(cfg.materials)},
                {"dipole", to_json(cfg)["simulation"]["dipole"]},
                {"resolution", cfg.simulation.resolution},
                {"courant", cfg.simulation.courant}};
    json main_spec = common, ref_spec = common;
    main_spec["kind"] = "dipole_structure";
    ref_spec["kind"] = "dipole_reference";
    // The bare surface does not depend on the hole pattern.
    for (const char* k : {"a_c", "r", "n_grading", "n_mirror", "termination_scalings"}) ref_spec["device"].erase(k);
    for (const char* k : {"n_mirror_left", "n_wg_right", "tail_nm"}) ref_spec["dipole"].erase(k);
    std::vector<PointTask> tasks{
        {main_spec, "dipole structure", [cfg](const std::filesystem::path&) { return run_structure(cfg); }},
        {ref_spec, "dipole reference", [cfg](const std::filesystem::path&) { return run_reference(cfg); }}};
    RunSummary s;
    note_failures(s, tasks, run_points(store, tasks, jobs));

    auto main = store.load(main_spec);
    auto ref = store.load(ref_spec);
    json report = report_header(cfg);
    if (!main) {
        report["failed_points"] = s.failures;
        emit(s, store, "dipole.json", report.dump(1) + "\n");
        s.report = report;
        finish(s, store, cfg, started);
        return s;
    }
    const auto f = (*main)["frequencies"].get<std::vector<double>>();
    const json& p = (*main)["power"];
    const auto fwd = series(p, "wg_forward"), bwd = series(p, "wg_backward");
    const std::vector<std::vector<double>> faces{series(p, "x_high"), series(p, "x_low"), series(p, "side"),
                                                 series(p, "top"), series(p, "bottom")};
    std::vector<double> total(f.size(), 0.0);
    for (const auto& face : faces)
        for (std::size_t i = 0; i < f.size(); ++i) total[i] += face[i];

    std::ostringstream raw;
    raw << "# frequency_c_over_a_o,wavelength_nm,wg_forward,wg_backward,x_high,x_low,side,top,bottom,total,"
           "reference_total (engine power units)\n"
        << std::setprecision(10);
    std::vector<double> ref_total(f.size(), std::nan(""));
    if (ref) {
        const json& rp = (*ref)["power"];
        for (std::size_t i = 0; i < f.size(); ++i)
            ref_total[i] = rp["x_high"][i].get<double>() + rp["side"][i].get<double>() + rp["top"][i].get<double>() +
                           rp["bottom"][i].get<double>();
    }
    for (std::size_t i = 0; i < f.size(); ++i) {
        raw << f[i] << ',' << cfg.device.a_o / f[i] << ',' << fwd[i] << ',' << bwd[i];
        for (const auto& face : faces) raw << ',' << face[i];
        raw << ',' << total[i] << ',' << ref_total[i] << '\n';
    }
    emit(s, store, "dipole_raw.csv", raw.str());

    json rows = json::array();
    if (ref) {
        std::ostringstream csv;
        csv << "# frequency_c_over_a_o,wavelength_nm,wg_forward,wg_backward,waveguide,radiated,total "
               "(normalized to the bare-diamond dipole)\n"
            << std::setprecision(10);
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double n = ref_total[i];
            const double wg = fwd[i] + bwd[i];
            csv << f[i] << ',' << cfg.device.a_o / f[i] << ',' << fwd[i] / n << ',' << bwd[i] / n << ',' << wg / n
                << ',' << (total[i] - wg) / n << ',' << total[i] / n << '\n';
            rows.push_back({{"frequency", f[i]},
                            {"wavelength_nm", cfg.device.a_o / f[i]},
                            {"wg_forward", fwd[i] / n},
                            {"wg_backward", bwd[i] / n},
                            {"waveguide", wg / n},
                            {"radiated", (total[i] - wg) / n},
                            {"total", total[i] / n}});
        }
        emit(s, store, "dipole_spectrum.csv", csv.str());
    }
    report["normalized"] = ref ? json(rows) : json(nullptr);
    report["failed_points"] = s.failures;
    emit(s, store, "dipole.json", report.dump(1) + "\n");
    s.report = report;
    finish(s, store, cfg, started);
    return s;
}

}  // namespace nwpc::experiment
