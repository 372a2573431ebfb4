#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "common.hpp"
#include "nwpc/errors.hpp"
#include "nwpc/qed.hpp"

namespace nwpc::experiment {

using namespace detail;

namespace {

// Unit cells see only the cross-section, the hole radius and (through the
// resolution) a_o.
json cell_device_json(const DeviceSpec& d) {
    return {{"w", d.w}, {"d", d.d}, {"h", d.h}, {"r", d.r}, {"a_o", d.a_o}};
}

}  // namespace

PointTask detail::ridge_task(const DeviceSpec& dev, const MaterialStack& mat, double a, double k, ModeClass cls,
                             const UnitCellOptions& o, std::string label) {
    return {ridge_cell_spec(dev, mat, a, k, cls, o), std::move(label), [=](const std::filesystem::path&) {
                return unit_cell_result_json(run_ridge_cell(dev, mat, a, k, cls, o));
            }};
}

json ridge_cell_spec(const DeviceSpec& device, const MaterialStack& stack, double a_nm, double k, ModeClass cls,
                     const UnitCellOptions& opts) {
    json o = to_json(opts);
    o["resolution"] = opts.resolution;
    o["courant"] = opts.courant;
    return {{"kind", "ridge_cell"}, {"tool_version", tool_version}, {"device", cell_device_json(device)},
            {"materials", to_json(stack)}, {"a_nm", a_nm}, {"k", k}, {"class", to_string(cls)}, {"options", o}};
}

json slab_cell_spec(const DeviceSpec& device, const MaterialStack& stack, double a_nm, double k,
                    const UnitCellOptions& opts) {
    json o = to_json(opts);
    o["resolution"] = opts.resolution;
    o["courant"] = opts.courant;
    return {{"kind", "slab_cell"}, {"tool_version", tool_version}, {"device", cell_device_json(device)},
            {"materials", to_json(stack)}, {"a_nm", a_nm}, {"k", k}, {"options", o}};
}

json unit_cell_result_json(const UnitCellResult& r) {
    json modes = json::array();
    for (const auto& m : r.modes.modes)
        modes.push_back({{"frequency", m.frequency},
                         {"q_wg", number_or_null(m.q_wg)},
                         {"te_fraction", number_or_null(m.te_fraction)},
                         {"strength", m.strength}});
    return {{"k", r.modes.k}, {"dx_nm", r.dx_nm}, {"steps", r.steps}, {"warnings", r.warnings}, {"modes", modes}};
}

analysis::ModesAtK modes_from_json(const json& j) {
    analysis::ModesAtK out;
    out.k = j.at("k").get<double>();
    for (const auto& m : j.at("modes")) {
        analysis::BandMode b;
        b.k = out.k;
        b.frequency = m.at("frequency").get<double>();
        b.q_wg = number_or_nan(m.at("q_wg"));
        if (std::isnan(b.q_wg)) b.q_wg = std::numeric_limits<double>::infinity();
        b.te_fraction = number_or_nan(m.at("te_fraction"));
        b.strength = m.at("strength").get<double>();
        out.modes.push_back(b);
    }
    return out;
}

void emit(RunSummary& summary, const ResultStore& store, const std::string& name, const std::string& content) {
    write_file_atomic(store.root() / name, content);
    summary.outputs.push_back(name);
}

RunSummary run_band_structure(const ExperimentConfig& cfg, int jobs) {
    if (cfg.kind != ExperimentKind::Bands) throw ConfigError("run_band_structure needs a bands configuration");
    cfg.validate();
    const std::string started = utc_timestamp();
    ResultStore store(cfg.output_dir);
    const auto& bs = cfg.simulation.bands;
    const double a = bs.a_nm > 0 ? bs.a_nm : cfg.device.a_o;
    const UnitCellOptions opts = cfg.unit_cell_options();
    UnitCellOptions slab_opts = opts;
    slab_opts.classify = false;
    const std::vector<double> ks = cfg.sweep ? cfg.sweep->values : std::vector<double>{};

    std::vector<PointTask> tasks;
    for (double k : ks) {
        for (auto cls : bs.classes)
            tasks.push_back(ridge_task(cfg.device, cfg.materials, a, k, cls, opts,
                                       "bands " + to_string(cls) + " k=" + fmt(k)));
        if (bs.structured_lightline) {
            const auto dev = cfg.device;
            const auto mat = cfg.materials;
            tasks.push_back({slab_cell_spec(dev, mat, a, k, slab_opts), "slab k=" + fmt(k),
                             [=](const std::filesystem::path&) {
                                 return unit_cell_result_json(run_slab_cell(dev, mat, a, k, slab_opts));
                             }});
        }
    }
    RunSummary s;
    auto out = run_points(store, tasks, jobs);
    note_failures(s, tasks, out);

    // Re-read from disk so that resumed and uninterrupted runs see identical data.
    std::vector<analysis::ModesAtK> per_k;
    std::vector<std::pair<double, double>> structured;
    std::optional<analysis::ModesAtK> te_at_edge;
    std::size_t t = 0;
    for (double k : ks) {
        analysis::ModesAtK merged{k, {}};
        for (auto cls : bs.classes) {
            auto stored = store.load(tasks[t++].spec);
            if (!stored) continue;
            auto m = modes_from_json(*stored);
            merged.modes.insert(merged.modes.end(), m.modes.begin(), m.modes.end());
            if (cls == ModeClass::TeLike && std::abs(k - 0.5) < 1e-9) te_at_edge = m;
        }
        per_k.push_back(merged);
        if (bs.structured_lightline) {
            auto stored = store.load(tasks[t++].spec);
            if (!stored) continue;
            double lowest = std::numeric_limits<double>::infinity();
            for (const auto& m : modes_from_json(*stored).modes)
                if (m.q_wg >= bs.q_min) lowest = std::min(lowest, m.frequency);
            if (std::isfinite(lowest)) structured.emplace_back(k, lowest);
        }
    }
    const auto bands = analysis::assemble_band_structure(per_k, cfg.materials, structured, a, bs.q_min);

    std::ostringstream csv;
    bands.write_csv(csv);
    emit(s, store, "bands.csv", csv.str());
    std::ostringstream ll;
    ll << "# lightline,k_a_over_2pi,omega_a_over_2pi_c\n" << std::setprecision(10);
    json lightlines = json::object();
    for (const auto& l : bands.lightlines) {
        json pts = json::array();
        for (const auto& [k, f] : l.points) {
            ll << l.name << ',' << k << ',' << f << '\n';
            pts.push_back({k, f});
        }
        lightlines[l.name] = pts;
    }
    emit(s, store, "lightlines.csv", ll.str());

    json report = report_header(cfg);
    report["a_nm"] = a;
    json entries = json::array();
    for (const auto& e : bands.entries)
        entries.push_back({{"k", e.k}, {"frequency", e.frequency}, {"band", e.band}, {"ambiguous", e.ambiguous},
                           {"te_fraction", number_or_null(e.te_fraction)}, {"q_wg", number_or_null(e.q_wg)}});
    report["entries"] = entries;
    report["lightlines"] = lightlines;
    json edge = nullptr;
    if (te_at_edge) {
        if (const auto* m = lowest_te_mode(*te_at_edge, bs.q_min)) {
            const double f_struct = bands.lightline_at("structured", 0.5);
            const double f_dia = analysis::lightline_frequency(0.5, cfg.materials.n_dia);
            edge = {{"frequency", m->frequency},
                    {"frequency_c_over_a_o", m->frequency * cfg.device.a_o / a},
                    {"q_wg", number_or_null(m->q_wg)},
                    {"te_fraction", number_or_null(m->te_fraction)},
                    {"structured_lightline", number_or_null(f_struct)},
                    {"diamond_lightline", f_dia},
                    {"below_structured_lightline", std::isfinite(f_struct) && m->frequency < f_struct},
                    {"above_diamond_lightline", m->frequency > f_dia}};
        }
    }
    report["te1_zone_edge"] = edge;
    report["failed_points"] = s.failures;
    emit(s, store, "bands.json", report.dump(1) + "\n");
    s.report = report;
    finish(s, store, cfg, started);
    return s;
}

RunSummary run_qwg_vs_h(const ExperimentConfig& cfg, int jobs) {
    if (cfg.kind != ExperimentKind::QwgSweep) throw ConfigError("run_qwg_vs_h needs a qwg-sweep configuration");
    cfg.validate();
    const std::string started = utc_timestamp();
    ResultStore store(cfg.output_dir);
    const UnitCellOptions opts = cfg.unit_cell_options();
    const double a = cfg.device.a_c;
    const double k = cfg.simulation.qwg.k;
    const std::vector<double> hs = cfg.sweep ? cfg.sweep->values : std::vector<double>{cfg.device.h};

    std::vector<PointTask> tasks;
    for (double h : hs) {
        DeviceSpec dev = cfg.device;
        dev.h = h;
        tasks.push_back(ridge_task(dev, cfg.materials, a, k, ModeClass::TeLike, opts, "qwg h=" + fmt(h)));
    }
    RunSummary s;
    auto out = run_points(store, tasks, jobs);
    note_failures(s, tasks, out);

    std::ostringstream csv;
    csv << "# h_nm,q_wg,inv_q_wg,frequency_c_over_a\n" << std::setprecision(10);
    json rows = json::array();
    for (std::size_t i = 0; i < hs.size(); ++i) {
        auto stored = store.load(tasks[i].spec);
        if (!stored) continue;
        const auto modes = modes_from_json(*stored);
        const auto* m = lowest_te_mode(modes, 0.0);
        if (!m) {
            s.failures.push_back("qwg h=" + fmt(hs[i]) + ": no TE-like mode found");
            continue;
        }
        csv << hs[i] << ',' << m->q_wg << ',' << 1.0 / m->q_wg << ',' << m->frequency << '\n';
        rows.push_back({{"h_nm", hs[i]}, {"q_wg", number_or_null(m->q_wg)}, {"inv_q_wg", 1.0 / m->q_wg},
                        {"frequency", m->frequency}, {"te_fraction", number_or_null(m->te_fraction)}});
    }
    emit(s, store, "qwg_vs_h.csv", csv.str());
    json report = report_header(cfg);
    report["a_nm"] = a;
    report["k"] = k;
    report["points"] = rows;
    report["failed_points"] = s.failures;
    emit(s, store, "qwg_vs_h.json", report.dump(1) + "\n");
    s.report = report;
    finish(s, store, cfg, started);
    return s;
}

namespace {

json load_cavity_point(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const std::exception& e) {
        throw ConfigError("cannot read cavity result '" + path + "': " + e.what());
    }
    if (j.contains("points")) {
        if (j["points"].size() != 1)
            throw ConfigError("cavity result '" + path + "' holds " + std::to_string(j["points"].size()) +
                              " sweep points; pass a single point's result.json");
        j = j["points"][0];
    }
    return j;
}

}  // namespace

RunSummary run_qed(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::string started = utc_timestamp();
    const auto& in = cfg.simulation.qed;
    std::optional<double> q = in.q, v_bar = in.v_bar, ratio = in.field_ratio;
    json source = nullptr;
    if (!in.cavity_result.empty()) {
        json c = load_cavity_point(in.cavity_result);
        if (!q && c.contains("q") && c["q"].is_number()) q = c["q"].get<double>();
        if (!v_bar && c.contains("v_bar") && c["v_bar"].is_number()) v_bar = c["v_bar"].get<double>();
        if (!ratio && c.contains("field_ratio") && c["field_ratio"].is_number()) ratio = c["field_ratio"].get<double>();
        source = in.cavity_result;
    }
    std::vector<std::string> missing;
    if (!q) missing.push_back("q");
    if (!v_bar) missing.push_back("v_bar");
    if (!ratio && !in.z_nm) missing.push_back("field_ratio (or z_nm)");
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw ConfigError("qed: missing inputs: " + list);
    }
    qed::NvParams nv;
    qed::CavityInputs cav;
    cav.q = *q;
    cav.v_bar = *v_bar;
    cav.stack = cfg.materials;
    qed::FieldDecayModel model;
    if (ratio) {
        cav.field_ratio = *ratio;
        model.surface_ratio = *ratio;
    }
    const auto r = qed::qed_report(nv, cav, model, in.z_nm ? *in.z_nm : -1.0);

    ResultStore store(cfg.output_dir);
    RunSummary s;
    json report = report_header(cfg);
    report["inputs"] = {{"q", *q},
                        {"v_bar", *v_bar},
                        {"field_ratio", ratio ? json(*ratio) : json(nullptr)},
                        {"z_nm", in.z_nm ? json(*in.z_nm) : json(nullptr)},
                        {"cavity_result", source}};
    report["g_ghz"] = r.g_hz * 1e-9;
    report["kappa_ghz"] = r.kappa_hz * 1e-9;
    report["gamma_tot_ghz"] = r.gamma_tot_hz * 1e-9;
    report["purcell_factor"] = r.f_purcell;
    report["beta"] = r.beta;
    report["field_ratio_used"] = r.field_ratio;
    report["strong_coupling_candidate"] = r.strong_coupling_candidate;
    emit(s, store, "qed.json", report.dump(1) + "\n");
    s.report = report;
    finish(s, store, cfg, started);
    return s;
}

RunSummary run_experiment(const ExperimentConfig& cfg, int jobs) {
    switch (cfg.kind) {
        case ExperimentKind::Bands: return run_band_structure(cfg, jobs);
        case ExperimentKind::QwgSweep: return run_qwg_vs_h(cfg, jobs);
        case ExperimentKind::Cavity: return run_cavity(cfg, jobs);
        case ExperimentKind::Dipole: return run_dipole_spectrum(cfg, jobs);
        case ExperimentKind::Qed: return run_qed(cfg);
    }
    throw ConfigError("unknown experiment");
}

}  // namespace nwpc::experiment
