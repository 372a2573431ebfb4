#include "nwpc/analysis/harminv.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nwpc/errors.hpp"

namespace nwpc::analysis {

namespace {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Pole {
    cplx u;  // per-sample multiplier exp(-i w dt)
};

ResonanceEstimate estimate_from_pole(cplx u, cplx amp, double dt, double q_cap) {
    ResonanceEstimate r;
    r.frequency = -std::arg(u) / (kTwoPi * dt);
    r.decay = -std::log(std::abs(u)) / dt;
    r.amplitude = amp;
    r.q = quality_factor(r.frequency, r.decay, q_cap, &r.q_saturated);
    return r;
}

/// Least-squares amplitudes of fixed poles against the whole record.
Vec fit_amplitudes(const std::vector<cplx>& c, const std::vector<cplx>& poles) {
    const Eigen::Index n = static_cast<Eigen::Index>(c.size());
    const Eigen::Index k = static_cast<Eigen::Index>(poles.size());
    Mat v(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        cplx p = 1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i, j) = p;
            p *= poles[j];
        }
    }
    Vec rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) rhs(i) = c[i];
    return v.colPivHouseholderQr().solve(rhs);
}

HarminvResult finish(const std::vector<cplx>& series, std::vector<cplx> poles, double dt, const HarminvOptions& opts,
                     HarminvResult out) {
    // Growing poles cannot come from a passive system and would overflow the fit.
    std::vector<cplx> kept;
    for (const auto& u : poles) {
        if (!std::isfinite(u.real()) || !std::isfinite(u.imag())) continue;
        const double f = -std::arg(u) / (kTwoPi * dt);
        if (f < opts.f_min || f > opts.f_max) continue;
        if (std::abs(u) > 1.0 + 1e-9) {
            // Numerically neutral poles can sit a hair outside the unit circle.
            if (std::abs(u) > 1.0 + 1e-6) continue;
            kept.push_back(u / std::abs(u));
            continue;
        }
        kept.push_back(u);
    }
    if (kept.empty()) return out;
    const Vec amp = fit_amplitudes(series, kept);
    double strongest = 0.0;
    for (Eigen::Index i = 0; i < amp.size(); ++i) strongest = std::max(strongest, std::abs(amp(i)));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const cplx a = amp(static_cast<Eigen::Index>(i));
        if (!(std::abs(a) > opts.amplitude_floor * strongest)) continue;
        out.modes.push_back(estimate_from_pole(kept[i], a, dt, opts.q_cap));
    }
    std::sort(out.modes.begin(), out.modes.end(),
              [](const ResonanceEstimate& a, const ResonanceEstimate& b) { return a.frequency < b.frequency; });
    return out;
}

/// Reduced eigenproblem U1 b = u U0 b with the overlap matrix truncated by SVD.
std::vector<cplx> pencil_eigenvalues(const Mat& u0, const Mat& u1, double cutoff, HarminvResult& out) {
    Eigen::BDCSVD<Mat> svd(u0, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || !(s(0) > 0)) return {};
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > cutoff * s(0)) ++rank;
    if (rank < s.size()) {
        std::ostringstream msg;
        msg << "overlap matrix truncated to rank " << rank << " of " << s.size();
        out.warnings.push_back(msg.str());
    }
    if (rank == 0) return {};
    const Mat ur = svd.matrixU().leftCols(rank);
    const Mat vr = svd.matrixV().leftCols(rank);
    Mat reduced = ur.adjoint() * u1 * vr;
    for (Eigen::Index i = 0; i < rank; ++i) reduced.row(i) /= s(i);
    Eigen::ComplexEigenSolver<Mat> es(reduced, false);
    if (es.info() != Eigen::Success) {
        out.warnings.push_back("eigen-decomposition did not converge");
        return {};
    }
    std::vector<cplx> poles;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) poles.push_back(es.eigenvalues()(i));
    return poles;
}

void check_inputs(std::size_t n, double dt, const HarminvOptions& opts, HarminvResult& out) {
    if (!(dt > 0)) throw ConfigError("harmonic inversion: dt must be positive");
    if (!(opts.f_max > opts.f_min) || opts.f_min < 0) throw ConfigError("harmonic inversion: bad frequency window");
    if (opts.f_max * dt >= 0.5) throw ConfigError("harmonic inversion: window exceeds the Nyquist frequency");
    if (opts.f_min > 0 && n * dt * opts.f_min < 50.0) {
        out.warnings.push_back("record shorter than 50 periods of the lowest in-window frequency");
    }
}

}  // namespace

double quality_factor(double frequency, double decay, double cap, bool* saturated) {
    const double omega = kTwoPi * std::abs(frequency);
    double q = decay > 0 ? omega / (2.0 * decay) : cap;
    const bool sat = !(q < cap);
    if (sat) q = cap;
    if (saturated) *saturated = sat;
    return q;
}

HarminvResult matrix_pencil(const std::vector<cplx>& c, double dt, const HarminvOptions& opts) {
    HarminvResult out;
    check_inputs(c.size(), dt, opts, out);
    const Eigen::Index n = static_cast<Eigen::Index>(c.size());
    if (n < 6) {
        out.warnings.push_back("record too short for a pencil estimate");
        return out;
    }
    const Eigen::Index l = std::max<Eigen::Index>(2, n / 3);
    const Eigen::Index rows = n - l;
    Mat y0(rows, l), y1(rows, l);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < l; ++j) {
            y0(i, j) = c[i + j];
            y1(i, j) = c[i + j + 1];
        }
    // Least-squares pencil: pinv(Y0) Y1 restricted to the dominant subspace.
    Eigen::BDCSVD<Mat> svd(y0, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || !(s(0) > 0)) return out;
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > std::max(opts.svd_cutoff, 1e-10) * s(0)) ++rank;
    const Mat ur = svd.matrixU().leftCols(rank);
    const Mat vr = svd.matrixV().leftCols(rank);
    Mat reduced = ur.adjoint() * y1 * vr;
    for (Eigen::Index i = 0; i < rank; ++i) reduced.row(i) /= s(i);
    Eigen::ComplexEigenSolver<Mat> es(reduced, false);
    std::vector<cplx> poles;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) poles.push_back(es.eigenvalues()(i));
    return finish(c, std::move(poles), dt, opts, std::move(out));
}

HarminvResult harmonic_inversion(const std::vector<cplx>& c, double dt, const HarminvOptions& opts) {
    HarminvResult out;
    check_inputs(c.size(), dt, opts, out);
    if (c.size() < static_cast<std::size_t>(std::max(opts.short_signal, 8))) return matrix_pencil(c, dt, opts);

    const int m = static_cast<int>((c.size() - 2) / 2);
    // Basis on the unit circle, spanning the window plus one bin on each side.
    const double bin = kTwoPi / (m + 1);
    const double phi_lo = kTwoPi * opts.f_min * dt - bin;
    const double phi_hi = kTwoPi * opts.f_max * dt + bin;
    const int k = std::max(opts.min_basis, static_cast<int>(std::ceil(opts.basis_density * (phi_hi - phi_lo) / bin)));
    std::vector<cplx> a(k);  // a_j = 1 / z_j = exp(i phi_j)
    for (int j = 0; j < k; ++j) a[j] = std::polar(1.0, phi_lo + (phi_hi - phi_lo) * (j + 0.5) / k);

    std::array<Mat, 2> u{Mat(k, k), Mat(k, k)};
    for (int p = 0; p < 2; ++p) {
        std::vector<cplx> f(k), g(k), diag(k), apow(k);
        for (int j = 0; j < k; ++j) {
            cplx fs = 0, gs = 0, ds = 0;
            cplx x = 1.0;
            for (int s = 0; s <= 2 * m; ++s) {
                const cplx term = c[s + p] * x;
                if (s <= m) {
                    fs += term;
                    ds += static_cast<double>(s + 1) * term;
                } else {
                    ds += static_cast<double>(2 * m - s + 1) * term;
                }
                if (s == m) apow[j] = x * a[j];  // a^{m+1}
                x *= a[j];
            }
            // G(a) = sum_{s=m+1}^{2m} c_{s+p} a^{s-m-1}
            cplx y = 1.0;
            for (int s = m + 1; s <= 2 * m; ++s) {
                gs += c[s + p] * y;
                y *= a[j];
            }
            f[j] = fs;
            g[j] = gs;
            diag[j] = ds;
        }
        for (int j = 0; j < k; ++j) {
            u[p](j, j) = diag[j];
            for (int l = j + 1; l < k; ++l) {
                const cplx v = (a[j] * f[j] - a[l] * f[l] + apow[j] * a[l] * g[l] - apow[l] * a[j] * g[j]) / (a[j] - a[l]);
                u[p](j, l) = v;
                u[p](l, j) = v;
            }
        }
    }
    auto poles = pencil_eigenvalues(u[0], u[1], opts.svd_cutoff, out);
    out = finish(c, std::move(poles), dt, opts, std::move(out));
    if (out.modes.empty()) {
        // Nothing survived; a pencil estimate on the same data is a cheap second opinion.
        auto alt = matrix_pencil(std::vector<cplx>(c.begin(), c.begin() + std::min<std::size_t>(c.size(), 600)), dt, opts);
        if (!alt.modes.empty()) {
            alt.warnings.insert(alt.warnings.begin(), "filter diagonalization found no modes; used matrix pencil");
            return alt;
        }
    }
    return out;
}

HarminvResult harmonic_inversion(const std::vector<double>& series, double dt, const HarminvOptions& opts) {
    std::vector<cplx> c(series.begin(), series.end());
    return harmonic_inversion(c, dt, opts);
}

}  // namespace nwpc::analysis
