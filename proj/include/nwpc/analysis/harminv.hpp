#pragma once

#include <complex>
#include <string>
#include <vector>

namespace nwpc::analysis {

using cplx = std::complex<double>;

/// One damped harmonic s(t) = amplitude * exp(-i 2 pi f t - decay t), t measured
/// from the first sample.
struct ResonanceEstimate {
    double frequency = 0.0;  ///< normalized, c / a
    double q = 0.0;
    double decay = 0.0;  ///< amplitude decay rate, 1 / time
    cplx amplitude{};
    bool q_saturated = false;  ///< Q at or beyond the cap

    double magnitude() const { return std::abs(amplitude); }
    double phase() const { return std::arg(amplitude); }
};

struct HarminvOptions {
    double f_min = 0.0;
    double f_max = 0.5;
    /// Modes weaker than this fraction of the strongest in-window mode are dropped.
    double amplitude_floor = 1e-6;
    double q_cap = 1e10;
    /// Basis functions per Fourier bin of the window.
    double basis_density = 1.1;
    int min_basis = 8;
    /// Relative singular-value cutoff for the overlap matrix.
    double svd_cutoff = 1e-11;
    /// Below this many samples the matrix-pencil method is used instead.
    int short_signal = 200;
};

struct HarminvResult {
    std::vector<ResonanceEstimate> modes;  ///< sorted by frequency
    std::vector<std::string> warnings;
};

/// Extracts damped harmonics inside [f_min, f_max] from uniformly sampled data.
HarminvResult harmonic_inversion(const std::vector<cplx>& series, double dt, const HarminvOptions& opts);
HarminvResult harmonic_inversion(const std::vector<double>& series, double dt, const HarminvOptions& opts);

/// Matrix-pencil (Prony-type) estimator, exposed for short records and testing.
HarminvResult matrix_pencil(const std::vector<cplx>& series, double dt, const HarminvOptions& opts);

/// Q from a normalized frequency and amplitude decay rate, with the cap applied.
double quality_factor(double frequency, double decay, double cap, bool* saturated = nullptr);

}  // namespace nwpc::analysis
