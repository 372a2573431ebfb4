#include "nwpc/experiment/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "nwpc/errors.hpp"

namespace nwpc::experiment {

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Bands: return "bands";
        case ExperimentKind::QwgSweep: return "qwg-sweep";
        case ExperimentKind::Cavity: return "cavity";
        case ExperimentKind::Dipole: return "dipole";
        case ExperimentKind::Qed: return "qed";
    }
    return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
    for (auto k : {ExperimentKind::Bands, ExperimentKind::QwgSweep, ExperimentKind::Cavity, ExperimentKind::Dipole,
                   ExperimentKind::Qed})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown experiment '" + s + "'");
}

namespace {

/// Reads the members of one JSON object, rejecting anything it was not asked about.
class Section {
public:
    Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
    }
    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, _] : j_.items())
            if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }

    void number(const char* key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw ConfigError(path(key) + ": expected a number");
            out = v->get<double>();
        }
    }
    void optional_number(const char* key, std::optional<double>& out) {
        if (const json* v = find(key)) {
            if (v->is_null()) {
                out.reset();
                return;
            }
            if (!v->is_number()) throw ConfigError(path(key) + ": expected a number");
            out = v->get<double>();
        }
    }
    void integer(const char* key, int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
            out = v->get<int>();
        }
    }
    void boolean(const char* key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(path(key) + ": expected true or false");
            out = v->get<bool>();
        }
    }
    void string(const char* key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw ConfigError(path(key) + ": expected a string");
            out = v->get<std::string>();
        }
    }
    void numbers(const char* key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) throw ConfigError(path(key) + ": expected an array of numbers");
            out.clear();
            for (const auto& x : *v) {
                if (!x.is_number()) throw ConfigError(path(key) + ": expected an array of numbers");
                out.push_back(x.get<double>());
            }
        }
    }
    void object(const char* key, const std::function<void(Section&)>& fn) {
        if (const json* v = find(key)) {
            Section sub(*v, path(key));
            fn(sub);
        }
    }
    const json* find(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    std::string path(const char* key) const { return where_ + "." + key; }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

void read_device(Section& s, DeviceSpec& d) {
    s.number("w", d.w);
    s.number("d", d.d);
    s.number("h", d.h);
    s.number("a_o", d.a_o);
    s.number("a_c", d.a_c);
    s.number("r", d.r);
    s.integer("n_grading", d.n_grading);
    s.integer("n_mirror", d.n_mirror);
    s.numbers("termination_scalings", d.termination_scalings);
}

json device_json(const DeviceSpec& d) {
    return {{"w", d.w},     {"d", d.d},
            {"h", d.h},     {"a_o", d.a_o},
            {"a_c", d.a_c}, {"r", d.r},
            {"n_grading", d.n_grading}, {"n_mirror", d.n_mirror},
            {"termination_scalings", d.termination_scalings}};
}

void read_unit_cell(Section& s, UnitCellOptions& o) {
    s.number("pml_nm", o.pml_nm);
    s.number("margin_side_nm", o.margin_side_nm);
    s.number("margin_top_nm", o.margin_top_nm);
    s.number("margin_bottom_nm", o.margin_bottom_nm);
    s.number("f_min", o.f_min);
    s.number("f_max", o.f_max);
    s.number("source_frequency", o.source_frequency);
    s.number("source_bandwidth", o.source_bandwidth);
    s.number("record_time", o.record_time);
    s.number("dft_time", o.dft_time);
    s.boolean("classify", o.classify);
    s.number("classify_q_min", o.classify_q_min);
    s.number("strength_min", o.strength_min);
    s.boolean("smoothing", o.smoothing);
}

json unit_cell_json(const UnitCellOptions& o) {
    return {{"pml_nm", o.pml_nm},
            {"margin_side_nm", o.margin_side_nm},
            {"margin_top_nm", o.margin_top_nm},
            {"margin_bottom_nm", o.margin_bottom_nm},
            {"f_min", o.f_min},
            {"f_max", o.f_max},
            {"source_frequency", o.source_frequency},
            {"source_bandwidth", o.source_bandwidth},
            {"record_time", o.record_time},
            {"dft_time", o.dft_time},
            {"classify", o.classify},
            {"classify_q_min", o.classify_q_min},
            {"strength_min", o.strength_min},
            {"smoothing", o.smoothing}};
}

void read_simulation(Section& s, SimulationSettings& sim) {
    s.string("preset", sim.preset);
    s.number("resolution", sim.resolution);
    s.number("courant", sim.courant);
    s.object("unit_cell", [&](Section& u) { read_unit_cell(u, sim.unit_cell); });
    s.object("bands", [&](Section& b) {
        b.number("a_nm", sim.bands.a_nm);
        b.boolean("structured_lightline", sim.bands.structured_lightline);
        b.number("q_min", sim.bands.q_min);
        if (const json* v = b.find("classes")) {
            if (!v->is_array()) throw ConfigError(b.path("classes") + ": expected an array of \"te\"/\"tm\"");
            sim.bands.classes.clear();
            for (const auto& c : *v) {
                if (!c.is_string()) throw ConfigError(b.path("classes") + ": expected strings");
                sim.bands.classes.push_back(mode_class_from_string(c.get<std::string>()));
            }
        }
    });
    s.object("qwg", [&](Section& q) { q.number("k", sim.qwg.k); });
    s.object("cavity", [&](Section& c) {
        auto& cv = sim.cavity;
        c.number("pml_nm", cv.pml_nm);
        c.number("y_margin_nm", cv.y_margin_nm);
        c.number("z_above_nm", cv.z_above_nm);
        c.number("z_below_nm", cv.z_below_nm);
        c.number("tail_nm", cv.tail_nm);
        c.number("monitor_offset_nm", cv.monitor_offset_nm);
        c.number("ring_time", cv.ring_time);
        c.number("dft_time", cv.dft_time);
        c.number("min_bandwidth", cv.min_bandwidth);
        c.integer("dft_stride", cv.dft_stride);
        c.boolean("snapshots", cv.snapshots);
        c.boolean("full_potential", cv.full_potential);
        c.object("band_edge", [&](Section& u) { read_unit_cell(u, cv.band_edge); });
    });
    s.object("dipole", [&](Section& d) {
        auto& dp = sim.dipole;
        d.integer("n_mirror_left", dp.n_mirror_left);
        d.integer("n_wg_right", dp.n_wg_right);
        d.number("tail_nm", dp.tail_nm);
        d.number("pml_nm", dp.pml_nm);
        d.number("y_margin_nm", dp.y_margin_nm);
        d.number("z_above_nm", dp.z_above_nm);
        d.number("z_below_nm", dp.z_below_nm);
        d.number("monitor_offset_nm", dp.monitor_offset_nm);
        d.number("depth_nm", dp.depth_nm);
        d.number("f_min", dp.f_min);
        d.number("f_max", dp.f_max);
        d.integer("n_frequencies", dp.n_frequencies);
        d.number("source_bandwidth", dp.source_bandwidth);
        d.number("run_time", dp.run_time);
        d.number("amplitude", dp.amplitude);
        d.integer("dft_stride", dp.dft_stride);
    });
    s.object("qed", [&](Section& q) {
        q.optional_number("q", sim.qed.q);
        q.optional_number("v_bar", sim.qed.v_bar);
        q.optional_number("field_ratio", sim.qed.field_ratio);
        q.optional_number("z_nm", sim.qed.z_nm);
        q.string("cavity_result", sim.qed.cavity_result);
    });
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json simulation_json(const SimulationSettings& s) {
    json classes = json::array();
    for (auto c : s.bands.classes) classes.push_back(to_string(c));
    const auto& cv = s.cavity;
    const auto& dp = s.dipole;
    return {{"preset", s.preset},
            {"resolution", s.resolution},
            {"courant", s.courant},
            {"unit_cell", unit_cell_json(s.unit_cell)},
            {"bands",
             {{"a_nm", s.bands.a_nm},
              {"classes", classes},
              {"structured_lightline", s.bands.structured_lightline},
              {"q_min", s.bands.q_min}}},
            {"qwg", {{"k", s.qwg.k}}},
            {"cavity",
             {{"pml_nm", cv.pml_nm},
              {"y_margin_nm", cv.y_margin_nm},
              {"z_above_nm", cv.z_above_nm},
              {"z_below_nm", cv.z_below_nm},
              {"tail_nm", cv.tail_nm},
              {"monitor_offset_nm", cv.monitor_offset_nm},
              {"ring_time", cv.ring_time},
              {"dft_time", cv.dft_time},
              {"min_bandwidth", cv.min_bandwidth},
              {"dft_stride", cv.dft_stride},
              {"snapshots", cv.snapshots},
              {"full_potential", cv.full_potential},
              {"band_edge", unit_cell_json(cv.band_edge)}}},
            {"dipole",
             {{"n_mirror_left", dp.n_mirror_left},
              {"n_wg_right", dp.n_wg_right},
              {"tail_nm", dp.tail_nm},
              {"pml_nm", dp.pml_nm},
              {"y_margin_nm", dp.y_margin_nm},
              {"z_above_nm", dp.z_above_nm},
              {"z_below_nm", dp.z_below_nm},
              {"monitor_offset_nm", dp.monitor_offset_nm},
              {"depth_nm", dp.depth_nm},
              {"f_min", dp.f_min},
              {"f_max", dp.f_max},
              {"n_frequencies", dp.n_frequencies},
              {"source_bandwidth", dp.source_bandwidth},
              {"run_time", dp.run_time},
              {"amplitude", dp.amplitude},
              {"dft_stride", dp.dft_stride}}},
            {"qed",
             {{"q", optional_json(s.qed.q)},
              {"v_bar", optional_json(s.qed.v_bar)},
              {"field_ratio", optional_json(s.qed.field_ratio)},
              {"z_nm", optional_json(s.qed.z_nm)},
              {"cavity_result", s.qed.cavity_result}}}};
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0; }

void validate_unit_cell(const UnitCellOptions& o, const std::string& where) {
    require(finite_positive(o.pml_nm), where + ".pml_nm must be positive");
    require(o.margin_side_nm >= 0 && o.margin_top_nm >= 0 && o.margin_bottom_nm >= 0,
            where + ": margins must be non-negative");
    require(o.f_min >= 0 && o.f_max > o.f_min && o.f_max < 1.0, where + ": need 0 <= f_min < f_max < 1");
    require(finite_positive(o.source_frequency) && finite_positive(o.source_bandwidth),
            where + ": source frequency and bandwidth must be positive");
    require(finite_positive(o.record_time) && finite_positive(o.dft_time), where + ": run lengths must be positive");
    require(o.strength_min >= 0 && o.strength_min < 1, where + ".strength_min must lie in [0, 1)");
}

/// Parameters a sweep may vary, per experiment.
const std::map<ExperimentKind, std::set<std::string>>& sweepable() {
    static const std::map<ExperimentKind, std::set<std::string>> m{
        {ExperimentKind::Bands, {"k"}},
        {ExperimentKind::QwgSweep, {"h"}},
        {ExperimentKind::Cavity, {"h", "n_mirror", "a_c"}},
        {ExperimentKind::Dipole, {}},
        {ExperimentKind::Qed, {}},
    };
    return m;
}

}  // namespace

UnitCellOptions ExperimentConfig::unit_cell_options() const {
    UnitCellOptions o = simulation.unit_cell;
    o.resolution = simulation.resolution;
    o.courant = simulation.courant;
    return o;
}

void ExperimentConfig::validate() const {
    device.validate();
    materials.validate();
    const auto& s = simulation;
    require(s.preset == "draft" || s.preset == "paper", "simulation.preset must be draft or paper");
    require(std::isfinite(s.resolution) && s.resolution >= 4 && s.resolution <= 64,
            "simulation.resolution must lie in [4, 64] cells per a_o");
    require(s.courant > 0 && s.courant <= 1.0 / std::sqrt(3.0) + 1e-12,
            "simulation.courant must lie in (0, 1/sqrt(3)]");
    validate_unit_cell(s.unit_cell, "simulation.unit_cell");
    validate_unit_cell(s.cavity.band_edge, "simulation.cavity.band_edge");
    require(s.bands.a_nm >= 0 && std::isfinite(s.bands.a_nm), "simulation.bands.a_nm must be >= 0");
    require(!s.bands.classes.empty(), "simulation.bands.classes must not be empty");
    require(s.qwg.k >= 0 && s.qwg.k <= 1, "simulation.qwg.k must lie in [0, 1]");
    const auto& c = s.cavity;
    require(finite_positive(c.pml_nm) && c.y_margin_nm >= 0 && finite_positive(c.z_above_nm) &&
                finite_positive(c.z_below_nm),
            "simulation.cavity: PML and extents must be positive");
    require(c.z_above_nm > device.d, "simulation.cavity.z_above_nm must exceed the GaP thickness");
    require(c.monitor_offset_nm > 0, "simulation.cavity.monitor_offset_nm must be positive");
    require(c.tail_nm > c.monitor_offset_nm, "simulation.cavity.tail_nm must exceed monitor_offset_nm");
    require(finite_positive(c.ring_time) && finite_positive(c.dft_time), "simulation.cavity: run lengths must be positive");
    require(finite_positive(c.min_bandwidth), "simulation.cavity.min_bandwidth must be positive");
    require(c.dft_stride >= 1, "simulation.cavity.dft_stride must be >= 1");
    const auto& d = s.dipole;
    require(d.n_mirror_left >= 1 && d.n_wg_right >= 1, "simulation.dipole: section lengths must be >= 1");
    require(d.tail_nm >= 0 && finite_positive(d.pml_nm) && d.y_margin_nm >= 0, "simulation.dipole: bad extents");
    require(d.z_above_nm > device.d && finite_positive(d.z_below_nm), "simulation.dipole: bad vertical extents");
    require(d.depth_nm > 0 && d.depth_nm < d.z_below_nm, "simulation.dipole.depth_nm must lie inside the substrate");
    require(d.f_min > 0 && d.f_max > d.f_min, "simulation.dipole: need 0 < f_min < f_max");
    require(d.n_frequencies >= 2, "simulation.dipole.n_frequencies must be >= 2");
    require(finite_positive(d.source_bandwidth) && finite_positive(d.run_time) && finite_positive(d.amplitude),
            "simulation.dipole: bandwidth, run time and amplitude must be positive");
    require(d.dft_stride >= 1, "simulation.dipole.dft_stride must be >= 1");
    const auto& q = s.qed;
    for (const auto& [name, v] : {std::pair{"q", q.q}, {"v_bar", q.v_bar}, {"field_ratio", q.field_ratio}})
        require(!v || finite_positive(*v), std::string("simulation.qed.") + name + " must be positive");
    require(!q.z_nm || (std::isfinite(*q.z_nm) && *q.z_nm >= 0), "simulation.qed.z_nm must be >= 0");

    if (sweep) {
        const auto& allowed = sweepable().at(kind);
        require(allowed.count(sweep->parameter) > 0,
                "sweep.parameter '" + sweep->parameter + "' is not sweepable for " + to_string(kind));
        for (double v : sweep->values) {
            require(std::isfinite(v), "sweep value is not finite");
            const std::string tag = "sweep value " + sweep->parameter + " = " + std::to_string(v);
            if (sweep->parameter == "k") {
                require(v >= 0 && v <= 1, tag + " outside [0, 1]");
                continue;
            }
            DeviceSpec probe = device;
            if (sweep->parameter == "h") probe.h = v;
            if (sweep->parameter == "a_c") probe.a_c = v;
            if (sweep->parameter == "n_mirror") {
                require(v == std::floor(v) && v >= 1, tag + " must be a positive integer");
                probe.n_mirror = static_cast<int>(v);
            }
            try {
                probe.validate();
            } catch (const ConfigError& e) {
                throw ConfigError(tag + ": " + e.what());
            }
        }
        std::vector<double> sorted = sweep->values;
        std::sort(sorted.begin(), sorted.end());
        require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "sweep values must be distinct");
    }
    require(!output_dir.empty(), "output.directory must not be empty");
}

ExperimentConfig preset_config(ExperimentKind kind, const std::string& preset) {
    ExperimentConfig c;
    c.kind = kind;
    auto& s = c.simulation;
    s.preset = preset;
    auto& u = s.unit_cell;
    u.f_min = 0.02;
    u.f_max = 0.40;
    u.source_frequency = 0.24;
    u.source_bandwidth = 0.10;
    if (preset == "draft") {
        s.resolution = 10.0;
        u.pml_nm = 240.0;
        u.margin_side_nm = 320.0;
        u.margin_top_nm = 320.0;
        u.margin_bottom_nm = 320.0;
        u.record_time = 600.0;
        u.dft_time = 150.0;
    } else if (preset == "paper") {
        s.resolution = 20.0;
        u.pml_nm = 320.0;
        u.margin_side_nm = 480.0;
        u.margin_top_nm = 672.0;
        u.margin_bottom_nm = 480.0;
        u.record_time = 1500.0;
        u.dft_time = 300.0;
        auto& cv = s.cavity;
        cv.pml_nm = 640.0;
        cv.y_margin_nm = 480.0;
        cv.z_above_nm = 800.0;
        cv.z_below_nm = 800.0;
        cv.tail_nm = 480.0;
        cv.ring_time = 800.0;
        cv.dft_time = 400.0;
        auto& dp = s.dipole;
        dp.pml_nm = 640.0;
        dp.y_margin_nm = 480.0;
        dp.z_above_nm = 800.0;
        dp.z_below_nm = 800.0;
        dp.n_wg_right = 12;
        dp.n_frequencies = 101;
        dp.run_time = 1000.0;
    } else {
        throw ConfigError("unknown preset '" + preset + "' (expected draft or paper)");
    }
    // Band edges only need the lowest TE mode at the zone boundary.
    auto& be = s.cavity.band_edge;
    be = u;
    be.f_min = 0.12;
    be.f_max = 0.40;
    be.source_frequency = 0.25;
    be.source_bandwidth = 0.08;
    be.record_time = preset == "draft" ? 400.0 : 800.0;
    be.dft_time = 150.0;

    if (kind == ExperimentKind::Bands) {
        c.sweep = SweepAxis{"k", preset == "draft" ? std::vector<double>{0.1, 0.2, 0.3, 0.35, 0.4, 0.45, 0.5}
                                                   : std::vector<double>{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35,
                                                                         0.4, 0.45, 0.5}};
    } else if (kind == ExperimentKind::QwgSweep) {
        c.sweep = SweepAxis{"h", {160.0, 320.0, 480.0, 640.0}};
    }
    return c;
}

void merge_config(ExperimentConfig& cfg, const json& j) {
    Section top(j, "config");
    top.object("device", [&](Section& s) { read_device(s, cfg.device); });
    top.object("materials", [&](Section& s) {
        s.number("n_gap", cfg.materials.n_gap);
        s.number("n_dia", cfg.materials.n_dia);
        s.number("n_air", cfg.materials.n_air);
    });
    top.object("simulation", [&](Section& s) { read_simulation(s, cfg.simulation); });
    if (const json* v = top.find("sweep")) {
        if (v->is_null()) {
            cfg.sweep.reset();
        } else {
            SweepAxis axis = cfg.sweep.value_or(SweepAxis{});
            Section s(*v, "config.sweep");
            s.string("parameter", axis.parameter);
            s.numbers("values", axis.values);
            if (axis.parameter.empty()) throw ConfigError("config.sweep.parameter is required");
            cfg.sweep = axis;
        }
    }
    top.object("output", [&](Section& s) {
        s.string("directory", cfg.output_dir);
        s.boolean("deterministic", cfg.deterministic);
    });
}

json to_json(const UnitCellOptions& o) { return unit_cell_json(o); }
json to_json(const DeviceSpec& d) { return device_json(d); }
json to_json(const MaterialStack& m) {
    return {{"n_gap", m.n_gap}, {"n_dia", m.n_dia}, {"n_air", m.n_air}};
}

json to_json(const ExperimentConfig& cfg) {
    json j;
    j["experiment"] = to_string(cfg.kind);
    j["device"] = device_json(cfg.device);
    j["materials"] = to_json(cfg.materials);
    j["simulation"] = simulation_json(cfg.simulation);
    j["sweep"] = cfg.sweep ? json{{"parameter", cfg.sweep->parameter}, {"values", cfg.sweep->values}} : json(nullptr);
    j["output"] = {{"directory", cfg.output_dir}, {"deterministic", cfg.deterministic}};
    return j;
}

ExperimentConfig load_config(ExperimentKind kind, const std::optional<std::string>& path,
                             const CliOverrides& overrides) {
    json file = json::object();
    if (path) {
        std::ifstream in(*path);
        if (!in) throw ConfigError("cannot open config file '" + *path + "'");
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file '" + *path + "' is not valid JSON: " + e.what());
        }
        // The experiment kind comes from the subcommand; a file may restate it.
        if (file.is_object() && file.contains("experiment")) {
            if (!file["experiment"].is_string() || file["experiment"].get<std::string>() != to_string(kind))
                throw ConfigError("config file is for a different experiment than '" + to_string(kind) + "'");
            file.erase("experiment");
        }
    }
    std::string preset = "draft";
    if (file.is_object() && file.contains("simulation") && file["simulation"].is_object() &&
        file["simulation"].contains("preset") && file["simulation"]["preset"].is_string())
        preset = file["simulation"]["preset"].get<std::string>();
    if (overrides.preset) preset = *overrides.preset;
    ExperimentConfig cfg = preset_config(kind, preset);
    merge_config(cfg, file);
    cfg.simulation.preset = preset;
    if (overrides.resolution) cfg.simulation.resolution = *overrides.resolution;
    if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
    cfg.validate();
    return cfg;
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 15]);
    }
    return out;
}

std::string json_hash(const json& j) { return sha256_hex(j.dump()); }

}  // namespace nwpc::experiment
