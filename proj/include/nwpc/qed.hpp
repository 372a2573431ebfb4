#pragma once

// Closed-form NV-cavity figures of merit. All rates are frequencies over 2 pi, in Hz.

#include <vector>

#include "nwpc/geometry.hpp"

namespace nwpc::qed {

constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct NvParams {
    double gamma_tot_hz = 13e6;  ///< total spontaneous rate / 2 pi
    double zpl_fraction = 0.03;
    double lambda_zpl_nm = 637.0;

    void validate() const;
    double gamma_zpl_hz() const { return zpl_fraction * gamma_tot_hz; }
    double omega_rad_s() const;
};

struct CavityInputs {
    double q = 1.5e6;
    double v_bar = 0.52;        ///< V / (lambda / n_gap)^3
    double field_ratio = 0.72;  ///< |E(r_NV) / E_o|
    MaterialStack stack{};
    double orientation_cos = 1.0;  ///< dipole / field alignment factor

    void validate() const;
    double effective_ratio() const { return field_ratio * orientation_cos; }
};

/// Exponential evanescent decay through two anchor points.
struct FieldDecayModel {
    double surface_ratio = 0.72;
    double ref_depth_nm = 155.0;
    double ref_ratio = 0.10;

    void validate() const;
    double decay_length_nm() const;
};

struct CavityQedResult {
    double g_hz = 0.0;
    double kappa_hz = 0.0;
    double gamma_tot_hz = 0.0;
    double f_purcell = 0.0;
    double beta = 0.0;
    double field_ratio = 0.0;
    bool strong_coupling_candidate = false;
};

double coupling_rate(const NvParams& nv, const CavityInputs& cav);
double cavity_decay(double lambda_zpl_nm, double q);
double purcell_factor(const NvParams& nv, const CavityInputs& cav);
double emission_fraction(double f_purcell);
double field_at_depth(const FieldDecayModel& model, double z_nm);

struct CouplingSpectrum {
    std::vector<double> s2;        ///< |s|^2 per input frequency
    std::vector<bool> saturated;   ///< n_g hit the cap (band edge)
};

/// |s|^2 = (3 / 8 pi) ratio^2 ((lambda/n_gap)^2 / A) (n_g / n_dia). The mode area is
/// in units of (lambda / n_gap)^2, so that factor is 1 / area. Group indices beyond
/// ng_cap are clipped and flagged.
CouplingSpectrum waveguide_coupling_spectrum(double field_ratio, double mode_area, const std::vector<double>& n_g,
                                             const MaterialStack& stack, double ng_cap = 1e4);

/// Composes depth model, g, kappa, F and beta. A negative z_nm keeps cav.field_ratio.
CavityQedResult qed_report(const NvParams& nv, CavityInputs cav, const FieldDecayModel& model, double z_nm);

}  // namespace nwpc::qed
