#pragma once

// Experiment configuration: a preset supplies every default, a JSON file overrides
// any subset, and command-line flags override both.
//
// File layout (all sections optional):
//   { "device": {...}, "materials": {...}, "simulation": {...},
//     "sweep": {"parameter": "h", "values": [...]}, "output": {...} }

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nwpc/experiment/unit_cell.hpp"
#include "nwpc/geometry.hpp"

namespace nwpc::experiment {

using json = nlohmann::json;

enum class ExperimentKind { Bands, QwgSweep, Cavity, Dipole, Qed };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct BandSettings {
    double a_nm = 0.0;  ///< lattice spacing; 0 means the device's a_o
    std::vector<ModeClass> classes{ModeClass::TeLike, ModeClass::TmLike};
    bool structured_lightline = true;
    double q_min = 100.0;  ///< display rule for assembled bands
};

struct QwgSettings {
    double k = 0.5;  ///< units of 2 pi / a_c
};

struct CavitySettings {
    double pml_nm = 240.0;
    double y_margin_nm = 320.0;         ///< ridge wall to lateral PML
    double z_above_nm = 480.0;          ///< diamond surface to top PML
    double z_below_nm = 480.0;          ///< ridge base (z = -h) to bottom PML
    double tail_nm = 320.0;             ///< unpatterned ridge between the last mirror hole and the x PML
    double monitor_offset_nm = 80.0;    ///< flux planes sit this far inside each PML
    double ring_time = 250.0;           ///< probe record after the source, a_o / c
    double dft_time = 150.0;            ///< mode-profile and flux window, a_o / c
    double min_bandwidth = 0.002;       ///< floor on the narrowband source width, c / a_o
    int dft_stride = 4;
    bool snapshots = true;
    /// Band edge at every graded spacing; false computes only a_o and a_c.
    bool full_potential = true;
    UnitCellOptions band_edge;  ///< unit cells for the optical potential
};

struct DipoleSettings {
    int n_mirror_left = 8;    ///< a_o periods left of the dipole
    int n_wg_right = 8;       ///< a_c periods right of the dipole, before the taper
    double tail_nm = 320.0;   ///< unpatterned ridge between the taper and the PML
    double pml_nm = 240.0;
    double y_margin_nm = 320.0;
    double z_above_nm = 480.0;
    double z_below_nm = 480.0;  ///< ridge base to bottom PML
    double monitor_offset_nm = 80.0;
    double depth_nm = 11.0;   ///< dipole depth below the diamond surface
    double f_min = 0.20;      ///< spectrum range, c / a_o
    double f_max = 0.30;
    int n_frequencies = 51;
    double source_bandwidth = 0.04;
    double run_time = 500.0;  ///< a_o / c
    double amplitude = 1.0;
    int dft_stride = 4;
};

struct QedSettings {
    std::optional<double> q;
    std::optional<double> v_bar;
    std::optional<double> field_ratio;
    std::optional<double> z_nm;  ///< NV depth; uses the evanescent decay model
    std::string cavity_result;   ///< path of a cavity result.json supplying q and v_bar
};

struct SimulationSettings {
    std::string preset = "draft";
    double resolution = 10.0;  ///< cells per a_o
    double courant = 0.5;
    UnitCellOptions unit_cell;  ///< resolution and courant are taken from above
    BandSettings bands;
    QwgSettings qwg;
    CavitySettings cavity;
    DipoleSettings dipole;
    QedSettings qed;
};

struct SweepAxis {
    std::string parameter;
    std::vector<double> values;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Bands;
    DeviceSpec device;
    MaterialStack materials;
    SimulationSettings simulation;
    std::optional<SweepAxis> sweep;
    std::string output_dir = "results";
    bool deterministic = true;

    /// Throws ConfigError on any invalid or out-of-range setting.
    void validate() const;
    /// Unit-cell options with the global resolution and Courant factor applied.
    UnitCellOptions unit_cell_options() const;
};

/// Defaults for an experiment under the named preset ("draft" or "paper").
ExperimentConfig preset_config(ExperimentKind kind, const std::string& preset);

/// Applies the fields present in `j`; unknown keys and type mismatches throw ConfigError.
void merge_config(ExperimentConfig& cfg, const json& j);

/// Full resolved configuration. Keys are emitted in sorted order, so dump() is canonical.
json to_json(const ExperimentConfig& cfg);
json to_json(const UnitCellOptions& o);
json to_json(const DeviceSpec& d);
json to_json(const MaterialStack& m);

struct CliOverrides {
    std::optional<std::string> preset;
    std::optional<double> resolution;
    std::optional<std::string> output_dir;
};

/// Preset (flag, else file, else draft), then the file, then the flags.
ExperimentConfig load_config(ExperimentKind kind, const std::optional<std::string>& path,
                             const CliOverrides& overrides);

/// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& data);
/// Hash of the canonical serialization of a JSON value.
std::string json_hash(const json& j);

}  // namespace nwpc::experiment
