#pragma once

// Quantities derived from a single resonant mode: Q budget by radiation
// direction, mode volume and area, and polarization content.

#include <array>
#include <string>
#include <vector>

#include "nwpc/fdtd/simulation.hpp"

namespace nwpc::analysis {

/// Radiated power grouped by direction: top = +z, bottom = -z, end = +/-x, side = +/-y.
struct FacePowers {
    double top = 0.0;
    double bottom = 0.0;
    double end = 0.0;
    double side = 0.0;
    double total() const { return top + bottom + end + side; }
};

struct QBudget {
    double q_total = 0.0;
    double q_top = 0.0;
    double q_bot = 0.0;
    double q_end = 0.0;
    double q_side = 0.0;
    /// Per entry (total, top, bot, end, side): true when the power was zero or the cap hit.
    std::array<bool, 5> saturated{};

    /// 1/q_total - sum(1/q_i), counting saturated channels as zero loss.
    double harmonic_residual() const;
};

/// q_i = omega U / P_i. omega is angular frequency and U, P_i any consistent units.
QBudget q_from_energy_flux(double omega, double stored_energy, const FacePowers& powers, double q_cap = 1e10);

struct ModeVolume {
    double volume = 0.0;       ///< in (lambda / n_ref)^3
    double volume_nm3 = 0.0;   ///< full structure, mirrors unfolded
    double peak_density = 0.0;  ///< max eps |E|^2
    std::array<double, 3> peak_position_nm{0, 0, 0};
    double boundary_ratio = 0.0;  ///< max eps|E|^2 on open faces / peak
    std::vector<std::string> warnings;
};

/// eps |E|^2 at every node of the profile, with E components averaged onto the
/// node from their two Yee neighbours.
std::vector<double> node_energy_density(const fdtd::ModeField& mode);
/// |E|^2 at every node, averaged the same way.
std::vector<double> node_field_sq(const fdtd::ModeField& mode);

/// V = int eps|E|^2 / max(eps|E|^2), in units of (lambda/n_ref)^3 with
/// lambda = length_unit / frequency.
ModeVolume mode_volume(const fdtd::ModeField& mode, double n_ref);

/// A = (1/a) int eps|E|^2 / max over one unit cell of length a_nm along x,
/// in units of (lambda/n_ref)^2.
ModeVolume mode_area(const fdtd::ModeField& mode, double a_nm, double n_ref);

/// Stored energy 1/2 sum(eps|E|^2 + |H|^2) dV of a DFT profile over the simulated
/// block, with samples lying on a mirror plane half-weighted. Pairs with monitor
/// flux sum(Re E x H*) dA from the same DFT window as q = omega U / P.
/// dx is the grid pitch in engine length units.
double dft_stored_energy(const fdtd::ModeField& mode, double dx);

/// Ey share of the electric energy. Throws ConfigError for an all-zero profile.
double classify_mode(const fdtd::ModeField& mode);
inline bool is_te_like(double te_fraction) { return te_fraction > 0.5; }

}  // namespace nwpc::analysis
