#pragma once

// Band-structure assembly, lightlines, group index and waveguide loss.
// Wavevectors are carried as k a / 2 pi and frequencies as omega a / 2 pi c, with a
// the lattice spacing of the run.

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nwpc/geometry.hpp"

namespace nwpc::analysis {

struct BandMode {
    double k = 0.0;          ///< k a / 2 pi
    double frequency = 0.0;  ///< omega a / 2 pi c
    double q_wg = 0.0;
    double te_fraction = 0.0;
    std::string band;        ///< e.g. "TE-1"; empty until assembled
    bool ambiguous = false;  ///< assignment was close to a competing one
    /// Share of the recorded signal energy, relative to the strongest mode of the run.
    double strength = 1.0;
};

struct ModesAtK {
    double k = 0.0;
    std::vector<BandMode> modes;
};

struct Lightline {
    std::string name;
    std::vector<std::pair<double, double>> points;  ///< (k, frequency)
};

struct BandStructure {
    double a_nm = 0.0;
    std::vector<BandMode> entries;
    std::vector<Lightline> lightlines;

    std::vector<BandMode> band(const std::string& name) const;
    /// Columns k·a/2π, ω·a/2πc, band, te_fraction, q_wg.
    void write_csv(std::ostream& os) const;
    /// Linear interpolation of a named lightline; NaN outside its k range.
    double lightline_at(const std::string& name, double k) const;
};

/// omega = c k / n in the normalized units.
inline double lightline_frequency(double k, double n) { return k / n; }

/// Connects per-k modes into bands by frequency continuity with a polarization
/// tiebreak, drops modes with q_wg < q_min, and appends air/diamond/GaP lightlines
/// plus the given structured lightline. Bands are labelled TE-n / TM-n by their
/// mean te_fraction and mean frequency.
BandStructure assemble_band_structure(const std::vector<ModesAtK>& per_k, const MaterialStack& stack,
                                      const std::vector<std::pair<double, double>>& structured, double a_nm,
                                      double q_min = 100.0);

/// n_g = dk/domega (normalized units) by second-order finite differences,
/// one-sided at the ends. Input (k, omega) with strictly increasing k; output
/// (omega, n_g). A flat band yields +infinity.
std::vector<std::pair<double, double>> group_index(const std::vector<std::pair<double, double>>& band);

struct Loss {
    double per_m = 0.0;
    double db_per_cm = 0.0;
};

/// alpha = omega / (q_wg v_g) with omega in rad/s and v_g in m/s.
Loss waveguide_loss(double omega_rad_s, double q_wg, double v_g_m_s);

constexpr double kDbPerNeper = 4.342944819032518;  // 10 log10(e)

struct PotentialPoint {
    double x_nm = 0.0;        ///< gap midpoint
    double a_cav_nm = 0.0;    ///< local spacing
    double frequency = 0.0;   ///< band-edge frequency, omega a_o / 2 pi c
};

/// Optical potential of a cavity layout: the band-edge frequency of a uniform
/// waveguide with spacing equal to each local gap. `band_edge(a)` returns the
/// edge in units of c / a_o and is evaluated once per distinct spacing.
std::vector<PotentialPoint> band_edge_potential(const HoleLayout& layout,
                                                const std::function<double(double a_nm)>& band_edge);

}  // namespace nwpc::analysis
