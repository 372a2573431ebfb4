#pragma once

// Bloch unit-cell runs: one period of the hybrid ridge (or of the vertical diamond
// slab) with Bloch walls along x, a mirror plane at y = 0 and PML elsewhere.
// Frequencies come back as omega a / 2 pi c for the run's own spacing a.

#include <cstdint>
#include <string>
#include <vector>

#include "nwpc/analysis/bands.hpp"
#include "nwpc/analysis/harminv.hpp"
#include "nwpc/geometry.hpp"

namespace nwpc::experiment {

/// y-mirror symmetry class. TeLike holds the Ey-dominant modes (Ex, Ez vanish on
/// the plane); TmLike holds the Hy-dominant ones.
enum class ModeClass { TeLike, TmLike };

std::string to_string(ModeClass c);
ModeClass mode_class_from_string(const std::string& s);

struct UnitCellOptions {
    double resolution = 10.0;  ///< cells per a_o; the x pitch is adjusted so a is a whole number of cells
    double courant = 0.5;
    double pml_nm = 240.0;
    double margin_side_nm = 320.0;    ///< lateral gap between the ridge wall and the PML
    double margin_top_nm = 320.0;     ///< air above the GaP layer
    double margin_bottom_nm = 320.0;  ///< substrate below the etched ridge
    double f_min = 0.12;              ///< harmonic-inversion window, c / a
    double f_max = 0.40;
    double source_frequency = 0.26;
    double source_bandwidth = 0.08;
    double record_time = 600.0;  ///< ring-down record after the source, a / c
    double dft_time = 150.0;     ///< DFT window for the polarization pass, a / c
    bool classify = true;        ///< run the DFT pass that measures te_fraction
    double classify_q_min = 50.0;  ///< modes below this Q are not classified
    double strength_min = 1e-4;    ///< weaker modes are discarded as fitting residue
    bool smoothing = true;
};

struct UnitCellResult {
    analysis::ModesAtK modes;  ///< q_wg from the ring-down; te_fraction from the DFT pass
    double dx_nm = 0.0;
    std::int64_t steps = 0;
    std::vector<std::string> warnings;
};

/// One period of the GaP-on-diamond ridge with spacing a_nm at Bloch wavevector
/// k (units of 2 pi / a).
UnitCellResult run_ridge_cell(const DeviceSpec& spec, const MaterialStack& stack, double a_nm, double k,
                              ModeClass cls, const UnitCellOptions& opts);

/// One period of the infinitely tall patterned diamond slab (two-dimensional run).
/// Reports Ey-polarized modes.
UnitCellResult run_slab_cell(const DeviceSpec& spec, const MaterialStack& stack, double a_nm, double k,
                             const UnitCellOptions& opts);

/// Lowest TE-like mode with q_wg >= q_min, or nullptr.
const analysis::BandMode* lowest_te_mode(const analysis::ModesAtK& modes, double q_min);

struct MergedMode {
    analysis::ResonanceEstimate estimate;
    /// |A|^2 min(1/decay, record) relative to the strongest mode of the same probe;
    /// the best probe's value is kept.
    double strength = 0.0;
};

/// Merges per-probe harmonic-inversion results into one mode list: estimates whose
/// frequencies agree within `tolerance` are taken as the same mode, represented by
/// the estimate with the largest relative strength.
std::vector<MergedMode> merge_probe_modes(const std::vector<analysis::HarminvResult>& per_probe, double tolerance,
                                          double record_time);

}  // namespace nwpc::experiment
