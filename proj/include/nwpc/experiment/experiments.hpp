#pragma once

// The canonical experiments. Each writes its outputs under cfg.output_dir, with
// per-point results kept in a ResultStore there so that reruns resume.

#include <string>
#include <vector>

#include "nwpc/experiment/config.hpp"
#include "nwpc/experiment/store.hpp"

namespace nwpc::experiment {

struct RunSummary {
    std::vector<std::string> outputs;   ///< paths relative to the output directory
    std::vector<std::string> failures;  ///< one line per failed point
    json report;                        ///< same content as the main JSON output
};

/// Band structure: TE-like and TM-like unit cells per k, the structured lightline
/// from the vertical slab, bands.csv / lightlines.csv / bands.json.
RunSummary run_band_structure(const ExperimentConfig& cfg, int jobs);

/// Q_wg of the lowest TE-like mode at k = 0.5 (spacing a_c) per etch depth.
RunSummary run_qwg_vs_h(const ExperimentConfig& cfg, int jobs);

/// Cavity resonance, Q budget, mode volume and field snapshots; a sweep varies one
/// device parameter and produces one cavity per value.
RunSummary run_cavity(const ExperimentConfig& cfg, int jobs);

/// Dipole emission into the waveguide and free-space channels, normalized to the
/// same dipole under a bare diamond surface.
RunSummary run_dipole_spectrum(const ExperimentConfig& cfg, int jobs);

/// Cavity-QED figures from Q, normalized mode volume and field ratio.
RunSummary run_qed(const ExperimentConfig& cfg);

RunSummary run_experiment(const ExperimentConfig& cfg, int jobs);

// Building blocks shared by the experiments.

/// Point specification for a ridge unit cell; everything the result depends on.
json ridge_cell_spec(const DeviceSpec& device, const MaterialStack& stack, double a_nm, double k, ModeClass cls,
                     const UnitCellOptions& opts);
json slab_cell_spec(const DeviceSpec& device, const MaterialStack& stack, double a_nm, double k,
                    const UnitCellOptions& opts);
json unit_cell_result_json(const UnitCellResult& r);
analysis::ModesAtK modes_from_json(const json& j);

/// Writes a text output under the run directory and records its name.
void emit(RunSummary& summary, const ResultStore& store, const std::string& name, const std::string& content);

}  // namespace nwpc::experiment
