#include "nwpc/qed.hpp"

#include <cmath>
#include <numbers>

#include "nwpc/errors.hpp"

namespace nwpc::qed {

namespace {
constexpr double kPi = std::numbers::pi;
}

void NvParams::validate() const {
    if (!(gamma_tot_hz > 0)) throw ConfigError("NV: gamma_tot must be positive");
    if (!(zpl_fraction >= 0 && zpl_fraction <= 1)) throw ConfigError("NV: ZPL fraction must lie in [0, 1]");
    if (!(lambda_zpl_nm > 0)) throw ConfigError("NV: ZPL wavelength must be positive");
}

double NvParams::omega_rad_s() const { return 2 * kPi * kSpeedOfLight / (lambda_zpl_nm * 1e-9); }

void CavityInputs::validate() const {
    stack.validate();
    if (!(q > 0)) throw ConfigError("cavity: Q must be positive");
    if (!(v_bar > 0)) throw ConfigError("cavity: mode volume must be positive");
    if (!(field_ratio >= 0 && field_ratio <= 1)) throw ConfigError("cavity: field ratio must lie in [0, 1]");
    if (!(std::abs(orientation_cos) <= 1)) throw ConfigError("cavity: orientation factor must lie in [-1, 1]");
}

void FieldDecayModel::validate() const {
    if (!(ref_depth_nm > 0)) throw ConfigError("field decay: reference depth must be positive");
    if (!(ref_ratio > 0 && ref_ratio < surface_ratio && surface_ratio <= 1))
        throw ConfigError("field decay: need 0 < ref_ratio < surface_ratio <= 1");
}

double FieldDecayModel::decay_length_nm() const { return ref_depth_nm / std::log(surface_ratio / ref_ratio); }

double coupling_rate(const NvParams& nv, const CavityInputs& cav) {
    nv.validate();
    cav.validate();
    const double gamma_zpl = 2 * kPi * nv.gamma_zpl_hz();  // rad/s
    const double index_ratio = cav.stack.n_gap / cav.stack.n_dia;
    return std::sqrt(3 * nv.omega_rad_s() * gamma_zpl / cav.v_bar * index_ratio) / (8 * kPi * kPi) *
           std::abs(cav.effective_ratio());
}

double cavity_decay(double lambda_zpl_nm, double q) {
    if (!(q > 0)) throw ConfigError("cavity decay: Q must be positive");
    if (!(lambda_zpl_nm > 0)) throw ConfigError("cavity decay: wavelength must be positive");
    return kSpeedOfLight / (lambda_zpl_nm * 1e-9) / (2 * q);
}

double purcell_factor(const NvParams& nv, const CavityInputs& cav) {
    nv.validate();
    cav.validate();
    const double r = cav.effective_ratio();
    return 3 / (4 * kPi * kPi) * cav.q / cav.v_bar * (cav.stack.n_gap / cav.stack.n_dia) * r * r * nv.zpl_fraction;
}

double emission_fraction(double f) {
    if (!(f >= 0)) throw ConfigError("emission fraction: Purcell factor must be non-negative");
    return f / (f + 1);
}

double field_at_depth(const FieldDecayModel& model, double z_nm) {
    model.validate();
    if (!(z_nm >= 0)) throw ConfigError("field decay: depth must be non-negative");
    if (z_nm == model.ref_depth_nm) return model.ref_ratio;
    return model.surface_ratio * std::exp(-z_nm / model.decay_length_nm());
}

CouplingSpectrum waveguide_coupling_spectrum(double field_ratio, double mode_area, const std::vector<double>& n_g,
                                             const MaterialStack& stack, double ng_cap) {
    stack.validate();
    if (!(mode_area > 0)) throw ConfigError("coupling spectrum: mode area must be positive");
    if (!(field_ratio >= 0)) throw ConfigError("coupling spectrum: field ratio must be non-negative");
    CouplingSpectrum out;
    for (double ng : n_g) {
        if (!(ng > 0)) throw ConfigError("coupling spectrum: group index must be positive");
        const bool sat = !(ng < ng_cap);
        const double g = sat ? ng_cap : ng;
        out.s2.push_back(3 / (8 * kPi) * field_ratio * field_ratio / mode_area * g / stack.n_dia);
        out.saturated.push_back(sat);
    }
    return out;
}

CavityQedResult qed_report(const NvParams& nv, CavityInputs cav, const FieldDecayModel& model, double z_nm) {
    if (z_nm >= 0) cav.field_ratio = field_at_depth(model, z_nm);
    CavityQedResult r;
    r.field_ratio = cav.field_ratio;
    r.g_hz = coupling_rate(nv, cav);
    r.kappa_hz = cavity_decay(nv.lambda_zpl_nm, cav.q);
    r.gamma_tot_hz = nv.gamma_tot_hz;
    r.f_purcell = purcell_factor(nv, cav);
    r.beta = emission_fraction(r.f_purcell);
    r.strong_coupling_candidate = r.g_hz > r.kappa_hz && r.g_hz > r.gamma_tot_hz;
    return r;
}

}  // namespace nwpc::qed
