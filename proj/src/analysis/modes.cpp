#include "nwpc/analysis/modes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nwpc/errors.hpp"

namespace nwpc::analysis {

double QBudget::harmonic_residual() const {
    auto inv = [](double q, bool sat) { return sat ? 0.0 : 1.0 / q; };
    const double parts = inv(q_top, saturated[1]) + inv(q_bot, saturated[2]) + inv(q_end, saturated[3]) +
                         inv(q_side, saturated[4]);
    const double total = inv(q_total, saturated[0]);
    return total - parts;
}

QBudget q_from_energy_flux(double omega, double stored_energy, const FacePowers& p, double q_cap) {
    if (!(stored_energy > 0)) throw ConfigError("Q budget: stored energy must be positive");
    if (!(omega > 0)) throw ConfigError("Q budget: frequency must be positive");
    QBudget b;
    const double wu = omega * stored_energy;
    auto q_of = [&](double power, bool& sat) {
        if (!(power > 0) || wu / power >= q_cap) {
            sat = true;
            return q_cap;
        }
        sat = false;
        return wu / power;
    };
    b.q_total = q_of(p.total(), b.saturated[0]);
    b.q_top = q_of(p.top, b.saturated[1]);
    b.q_bot = q_of(p.bottom, b.saturated[2]);
    b.q_end = q_of(p.end, b.saturated[3]);
    b.q_side = q_of(p.side, b.saturated[4]);
    return b;
}

namespace {

/// |E_c|^2 at sample index i along the component's own axis, with the image rule at
/// a mirror face and clamping at open faces.
double sample_sq(const fdtd::ModeField& m, int c, std::array<int, 3> idx) {
    const int a = c;
    // Below a mirror plane the image sample has equal magnitude; open faces clamp.
    if (idx[a] < 0) idx[a] = 0;
    if (idx[a] >= m.grid.n[a]) idx[a] = m.grid.n[a] - 1;
    return std::norm(m.fields[c][m.grid.linear(idx[0], idx[1], idx[2])]);
}

double eps_sample(const fdtd::ModeField& m, int c, std::array<int, 3> idx) {
    const int a = c;
    idx[a] = std::clamp(idx[a], 0, m.grid.n[a] - 1);
    return m.eps[c][m.grid.linear(idx[0], idx[1], idx[2])];
}

struct Integrals {
    double integral = 0;  // over the simulated block, plane samples half-weighted on mirrors
    double peak = 0;
    std::array<int, 3> peak_idx{0, 0, 0};
    double boundary = 0;
    int mirrors = 0;
};

Integrals integrate(const fdtd::ModeField& m) {
    for (int c = 0; c < 3; ++c)
        if (m.fields[c].size() != m.grid.cells() || m.eps[c].size() != m.grid.cells())
            throw ConfigError("mode profile: array sizes do not match the grid");
    const auto u = node_energy_density(m);
    Integrals r;
    const auto& n = m.grid.n;
    for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
            for (int i = 0; i < n[0]; ++i) {
                const std::array<int, 3> idx{i, j, k};
                const double v = u[m.grid.linear(i, j, k)];
                if (!std::isfinite(v)) throw NumericalError("mode profile contains non-finite samples");
                double w = 1.0;
                bool open_face = false;
                for (int a = 0; a < 3; ++a) {
                    if (n[a] == 1) continue;
                    if (m.mirror[a] != 0 && idx[a] == 0) w *= 0.5;
                    if ((idx[a] == 0 && m.mirror[a] == 0) || idx[a] == n[a] - 1) open_face = true;
                }
                r.integral += w * v;
                if (v > r.peak) {
                    r.peak = v;
                    r.peak_idx = idx;
                }
                if (open_face) r.boundary = std::max(r.boundary, v);
            }
    for (int a = 0; a < 3; ++a)
        if (m.mirror[a] != 0) ++r.mirrors;
    return r;
}

}  // namespace

double dft_stored_energy(const fdtd::ModeField& m, double dx) {
    const auto& n = m.grid.n;
    double u = 0.0;
    for (int c = 0; c < 6; ++c) {
        const auto comp = static_cast<Component>(c);
        const auto off = yee_offset(comp);
        const auto& f = m.fields[c];
        if (f.size() != m.grid.cells()) throw ConfigError("stored energy: field array size mismatch");
        for (int k = 0; k < n[2]; ++k)
            for (int j = 0; j < n[1]; ++j)
                for (int i = 0; i < n[0]; ++i) {
                    const std::array<int, 3> idx{i, j, k};
                    double w = 1.0;
                    for (int a = 0; a < 3; ++a)
                        if (m.mirror[a] != 0 && idx[a] == 0 && off[a] == 0.0 && n[a] > 1) w *= 0.5;
                    const auto q = m.grid.linear(i, j, k);
                    u += w * std::norm(f[q]) * (c < 3 ? m.eps[c][q] : 1.0);
                }
    }
    return 0.5 * u * dx * dx * dx;
}

namespace {

std::vector<double> node_average(const fdtd::ModeField& m, bool weight_eps) {
    const auto& n = m.grid.n;
    std::vector<double> u(m.grid.cells(), 0.0);
    for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
            for (int i = 0; i < n[0]; ++i) {
                const std::array<int, 3> idx{i, j, k};
                double v = 0.0;
                for (int c = 0; c < 3; ++c) {
                    if (n[c] == 1) {
                        v += (weight_eps ? eps_sample(m, c, idx) : 1.0) * sample_sq(m, c, idx);
                        continue;
                    }
                    // E_c sits half a cell above node along c: neighbours are idx-1 and idx.
                    std::array<int, 3> lo = idx;
                    lo[c] -= 1;
                    const double e2 = 0.5 * (sample_sq(m, c, lo) + sample_sq(m, c, idx));
                    const double ep = weight_eps ? 0.5 * (eps_sample(m, c, lo) + eps_sample(m, c, idx)) : 1.0;
                    v += ep * e2;
                }
                u[m.grid.linear(i, j, k)] = v;
            }
    return u;
}

}  // namespace

std::vector<double> node_energy_density(const fdtd::ModeField& m) { return node_average(m, true); }

std::vector<double> node_field_sq(const fdtd::ModeField& m) { return node_average(m, false); }

ModeVolume mode_volume(const fdtd::ModeField& m, double n_ref) {
    if (!(m.frequency > 0)) throw ConfigError("mode volume: profile frequency must be positive");
    const auto r = integrate(m);
    if (!(r.peak > 0)) throw ConfigError("mode volume: profile has no energy");
    ModeVolume out;
    const double dv = m.grid.dx_nm * m.grid.dx_nm * m.grid.dx_nm;
    out.volume_nm3 = r.integral * dv * std::pow(2.0, r.mirrors) / r.peak;
    const double lambda_nm = m.length_unit_nm / m.frequency;
    out.volume = out.volume_nm3 / std::pow(lambda_nm / n_ref, 3);
    out.peak_density = r.peak;
    out.peak_position_nm = {m.grid.origin_nm[0] + r.peak_idx[0] * m.grid.dx_nm,
                            m.grid.origin_nm[1] + r.peak_idx[1] * m.grid.dx_nm,
                            m.grid.origin_nm[2] + r.peak_idx[2] * m.grid.dx_nm};
    out.boundary_ratio = r.boundary / r.peak;
    if (out.boundary_ratio > 1e-4) {
        std::ostringstream msg;
        msg << "profile not fully decayed: boundary energy density " << out.boundary_ratio << " of peak";
        out.warnings.push_back(msg.str());
    }
    return out;
}

ModeVolume mode_area(const fdtd::ModeField& m, double a_nm, double n_ref) {
    if (!(a_nm > 0)) throw ConfigError("mode area: cell length must be positive");
    const double cell = m.grid.n[0] * m.grid.dx_nm;
    ModeVolume v = mode_volume(m, n_ref);
    if (std::abs(cell - a_nm) > 0.5 * m.grid.dx_nm) v.warnings.push_back("profile does not span exactly one unit cell");
    ModeVolume out = v;
    out.volume_nm3 = v.volume_nm3 / a_nm;  // an area, nm^2
    const double lambda_nm = m.length_unit_nm / m.frequency;
    out.volume = out.volume_nm3 / std::pow(lambda_nm / n_ref, 2);
    return out;
}

double classify_mode(const fdtd::ModeField& m) {
    double total = 0, ey = 0;
    for (int c = 0; c < 3; ++c) {
        double s = 0;
        for (std::size_t i = 0; i < m.fields[c].size(); ++i) s += m.eps[c][i] * std::norm(m.fields[c][i]);
        total += s;
        if (c == 1) ey = s;
    }
    if (!(total > 0)) throw ConfigError("classify_mode: profile has no electric energy");
    return ey / total;
}

}  // namespace nwpc::analysis
