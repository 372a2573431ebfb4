#include "nwpc/fdtd/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <type_traits>

#include "nwpc/errors.hpp"

namespace nwpc::fdtd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class T>
inline double re(const T& v) {
    if constexpr (std::is_same_v<T, double>) return v;
    else return v.real();
}

template <class T>
inline double norm2(const T& v) {
    if constexpr (std::is_same_v<T, double>) return v * v;
    else return std::norm(v);
}

template <class T>
inline T from_complex(const cplx& v) {
    if constexpr (std::is_same_v<T, double>) return v.real();
    else return v;
}

template <class T>
inline cplx to_complex(const T& v) {
    return cplx(v);
}

/// Re(a * conj(b)).
template <class T>
inline double re_dot(const T& a, const T& b) {
    if constexpr (std::is_same_v<T, double>) return a * b;
    else return a.real() * b.real() + a.imag() * b.imag();
}

/// Weight of a sample coordinate along an axis whose low face is a mirror plane:
/// samples sitting on the plane are shared with their image.
inline double mirror_weight(bool mirrored, int index, double offset) {
    return (mirrored && index == 0 && offset == 0.0) ? 0.5 : 1.0;
}

struct IndexRange {
    std::array<int, 3> lo{0, 0, 0};
    std::array<int, 3> hi{0, 0, 0};  // exclusive
    std::size_t count() const {
        std::size_t c = 1;
        for (int a = 0; a < 3; ++a) c *= static_cast<std::size_t>(std::max(0, hi[a] - lo[a]));
        return c;
    }
};

/// Cell range whose samples of component c fall inside box.
IndexRange samples_in_box(const GridSpec& g, Component c, const Box& box) {
    IndexRange r;
    const auto off = yee_offset(c);
    for (int a = 0; a < 3; ++a) {
        const double lo = (box.lo[a] - g.origin_nm[a]) / g.dx_nm - off[a];
        const double hi = (box.hi[a] - g.origin_nm[a]) / g.dx_nm - off[a];
        r.lo[a] = std::clamp(static_cast<int>(std::ceil(lo - 1e-9)), 0, g.n[a]);
        r.hi[a] = std::clamp(static_cast<int>(std::floor(hi + 1e-9)) + 1, 0, g.n[a]);
        if (r.hi[a] < r.lo[a]) r.hi[a] = r.lo[a];
    }
    return r;
}

IndexRange cells_in_box(const GridSpec& g, const Box& box) {
    IndexRange r;
    for (int a = 0; a < 3; ++a) {
        const double lo = (box.lo[a] - g.origin_nm[a]) / g.dx_nm;
        const double hi = (box.hi[a] - g.origin_nm[a]) / g.dx_nm;
        r.lo[a] = std::clamp(static_cast<int>(std::floor(lo + 1e-9)), 0, g.n[a]);
        r.hi[a] = std::clamp(static_cast<int>(std::ceil(hi - 1e-9)), 0, g.n[a]);
        if (r.hi[a] <= r.lo[a]) r.hi[a] = std::min(g.n[a], r.lo[a] + 1);
    }
    return r;
}

double window_weight(const TimeWindow& w, double t) {
    if (!w.contains(t)) return 0.0;
    if (!w.hann || !(w.end < 1e299)) return 1.0;
    const double x = (t - w.start) / (w.end - w.start);
    const double s = std::sin(std::numbers::pi * x);
    return s * s;
}

}  // namespace

template <class T>
struct Simulation<T>::Impl {
    struct PmlSlab {
        int axis = 0;
        int start = 0;  // first index along axis
        int thickness = 0;
        std::vector<double> b_e, c_e, b_h, c_h;
        std::array<std::vector<T>, 2> psi_e, psi_h;
    };

    struct PointSource {
        SourceSpec spec;
        Component comp;
        std::size_t index;
        double coef;
        double width, t0;
    };

    struct Probe {
        ProbeSpec spec;
        Component comp;
        std::size_t index;
        std::vector<cplx> values;
    };

    struct FluxSample {
        std::size_t e, h0, h1;
        double weight;
    };

    struct Monitor {
        MonitorSpec spec;
        // pair 0: (E_b, H_c) enters with +, pair 1: (E_c, H_b) with -
        std::array<std::vector<FluxSample>, 2> samples;
        std::array<Component, 2> e_comp, h_comp;
        double area = 0.0;
        std::vector<std::array<std::vector<cplx>, 2>> e_hat, h_hat;  // [freq][pair][sample]
        double power_sum = 0.0;
        std::int64_t power_count = 0;
        std::vector<double> trace, trace_t;
    };

    struct DftRegion {
        DftRegionSpec spec;
        IndexRange cells;
        std::vector<std::array<std::vector<cplx>, 6>> acc;  // [freq][component]
    };

    std::array<int, 3> n{};
    std::array<std::size_t, 3> stride{};
    double dx = 0, dtdx = 0, dv = 0;
    std::array<std::vector<double>, 3> coef_e;  // dt / (eps dx), padded layout
    std::array<T, 3> phase{};
    std::array<bool, 3> bloch{}, mirror{}, pec_low{};
    std::vector<PmlSlab> slabs;
    std::vector<PointSource> sources;
    std::vector<Probe> probes;
    std::vector<Monitor> monitors;
    std::vector<DftRegion> regions;
    TimeWindow average_window, flux_window;
    double energy_sum = 0.0;
    std::int64_t energy_count = 0;
    std::optional<Box> energy_box;
};

template <class T>
Simulation<T>::~Simulation() = default;

template <class T>
Simulation<T>::Simulation(SimulationPlan plan) : plan_(std::move(plan)), impl_(std::make_unique<Impl>()) {
    plan_.validate();
    if constexpr (std::is_same_v<T, double>) {
        if (plan_.needs_complex_fields()) throw ConfigError("plan needs complex fields (Bloch phase or complex source)");
    }
    auto& im = *impl_;
    const auto& grid = plan_.eps->grid;
    im.n = grid.n;
    state_.n = grid.n;
    const std::size_t padded = static_cast<std::size_t>(im.n[0] + 2) * (im.n[1] + 2) * (im.n[2] + 2);
    for (auto& f : state_.f) f.assign(padded, T{});
    im.stride = {1, static_cast<std::size_t>(im.n[0] + 2),
                 static_cast<std::size_t>(im.n[0] + 2) * static_cast<std::size_t>(im.n[1] + 2)};
    im.dx = plan_.dx();
    dt_ = plan_.dt();
    im.dtdx = dt_ / im.dx;
    im.dv = im.dx * im.dx * im.dx;

    for (int a = 0; a < 3; ++a) {
        const auto& b = plan_.boundaries[a];
        im.bloch[a] = b.low == BoundaryKind::Bloch;
        im.mirror[a] = b.low == BoundaryKind::Mirror;
        im.pec_low[a] = b.low == BoundaryKind::Pec || b.low == BoundaryKind::Pml ||
                        (im.mirror[a] && b.parity == Parity::Odd);
        const double phi = b.bloch_k * grid.length_nm(a);
        if constexpr (std::is_same_v<T, double>) im.phase[a] = im.bloch[a] && std::cos(phi) < 0 ? -1.0 : 1.0;
        else im.phase[a] = im.bloch[a] ? std::polar(1.0, phi) : T(1.0);
    }

    for (int c = 0; c < 3; ++c) {
        auto& ce = im.coef_e[c];
        ce.assign(padded, 0.0);
        const auto& eps = plan_.eps->eps[c];
        for (int k = 0; k < im.n[2]; ++k)
            for (int j = 0; j < im.n[1]; ++j)
                for (int i = 0; i < im.n[0]; ++i) {
                    const std::array<int, 3> idx{i, j, k};
                    bool wall = false;
                    for (int a = 0; a < 3; ++a)
                        if (a != c && im.pec_low[a] && idx[a] == 0) wall = true;
                    ce[state_.index(i, j, k)] = wall ? 0.0 : im.dtdx / eps[grid.linear(i, j, k)];
                }
    }

    // CPML slabs with a cubic conductivity profile.
    for (int a = 0; a < 3; ++a) {
        const auto& b = plan_.boundaries[a];
        for (int side = 0; side < 2; ++side) {
            const bool is_pml = side == 0 ? b.low == BoundaryKind::Pml : b.high == BoundaryKind::Pml;
            if (!is_pml) continue;
            const double thick = side == 0 ? b.pml_low_nm : b.pml_high_nm;
            typename Impl::PmlSlab slab;
            slab.axis = a;
            slab.thickness = std::max(1, static_cast<int>(std::lround(thick / grid.dx_nm)));
            slab.start = side == 0 ? 0 : im.n[a] - slab.thickness;
            const int L = slab.thickness;
            const double sigma_max = plan_.pml_strength * 0.8 * 4.0 / im.dx;
            auto coeffs = [&](double depth, double& bb, double& cc) {
                const double u = std::clamp(depth / L, 0.0, 1.0);
                const double sigma = sigma_max * u * u * u;
                const double alpha = plan_.pml_alpha * (1.0 - u);
                const double s = sigma + alpha;
                bb = std::exp(-s * dt_);
                cc = s > 0 ? sigma / s * (bb - 1.0) : 0.0;
            };
            slab.b_e.resize(L);
            slab.c_e.resize(L);
            slab.b_h.resize(L);
            slab.c_h.resize(L);
            for (int l = 0; l < L; ++l) {
                const double pe = slab.start + l, ph = slab.start + l + 0.5;
                const double de = side == 0 ? L - pe : pe - (im.n[a] - L);
                const double dh = side == 0 ? L - ph : ph - (im.n[a] - L);
                coeffs(de, slab.b_e[l], slab.c_e[l]);
                coeffs(dh, slab.b_h[l], slab.c_h[l]);
            }
            std::size_t size = static_cast<std::size_t>(L);
            for (int o = 0; o < 3; ++o)
                if (o != a) size *= static_cast<std::size_t>(im.n[o]);
            for (auto& v : slab.psi_e) v.assign(size, T{});
            for (auto& v : slab.psi_h) v.assign(size, T{});
            im.slabs.push_back(std::move(slab));
        }
    }

    auto nearest = [&](Component c, const std::array<double, 3>& p) {
        const auto off = yee_offset(c);
        std::array<int, 3> idx{};
        for (int a = 0; a < 3; ++a) {
            idx[a] = static_cast<int>(std::lround((p[a] - grid.origin_nm[a]) / grid.dx_nm - off[a]));
            idx[a] = std::clamp(idx[a], 0, im.n[a] - 1);
        }
        return idx;
    };

    for (const auto& s : plan_.sources) {
        const auto idx = nearest(s.component, s.position_nm);
        typename Impl::PointSource ps;
        ps.spec = s;
        ps.comp = s.component;
        ps.index = state_.index(idx[0], idx[1], idx[2]);
        ps.coef = is_electric(s.component) ? im.coef_e[component_axis(s.component)][ps.index] * im.dx : dt_;
        ps.width = s.temporal_width();
        ps.t0 = s.peak_time();
        im.sources.push_back(ps);
    }
    for (const auto& p : plan_.probes) {
        const auto idx = nearest(p.component, p.position_nm);
        im.probes.push_back({p, p.component, state_.index(idx[0], idx[1], idx[2]), {}});
    }
    im.average_window = plan_.average_window;
    im.flux_window = plan_.flux_window;
    im.energy_box = plan_.energy_box;
    for (const auto& m : plan_.monitors) add_monitor(m);
    for (const auto& r : plan_.dft_regions) add_dft_region(r);
}

template <class T>
void Simulation<T>::add_monitor(const MonitorSpec& spec) {
    auto& im = *impl_;
    const auto& grid = plan_.eps->grid;
    typename Impl::Monitor mon;
    mon.spec = spec;
    const int a = axis_index(spec.normal);
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    const int i0 = static_cast<int>(std::lround((spec.coordinate_nm - grid.origin_nm[a]) / grid.dx_nm));
    if (i0 < 1 || i0 > im.n[a] - 1) throw ConfigError("monitor '" + spec.name + "' too close to the grid edge");
    mon.e_comp = {static_cast<Component>(b), static_cast<Component>(c)};
    mon.h_comp = {static_cast<Component>(3 + c), static_cast<Component>(3 + b)};
    for (int pair = 0; pair < 2; ++pair) {
        const Component ec = mon.e_comp[pair];
        Box box = spec.extent;
        box.lo[a] = box.hi[a] = grid.origin_nm[a] + i0 * grid.dx_nm;
        IndexRange r = samples_in_box(grid, ec, box);
        r.lo[a] = i0;
        r.hi[a] = i0 + 1;
        const auto off = yee_offset(ec);
        for (int k = r.lo[2]; k < r.hi[2]; ++k)
            for (int j = r.lo[1]; j < r.hi[1]; ++j)
                for (int i = r.lo[0]; i < r.hi[0]; ++i) {
                    std::array<int, 3> idx{i, j, k};
                    double w = 1.0;
                    for (int o = 0; o < 3; ++o)
                        if (o != a) w *= mirror_weight(im.mirror[o], idx[o], off[o]);
                    std::array<int, 3> lower = idx;
                    lower[a] -= 1;
                    typename Impl::FluxSample s{state_.index(i, j, k), state_.index(lower[0], lower[1], lower[2]),
                                                state_.index(i, j, k), w};
                    mon.samples[pair].push_back(s);
                }
    }
    mon.area = im.dx * im.dx;
    mon.e_hat.resize(spec.frequencies.size());
    mon.h_hat.resize(spec.frequencies.size());
    for (std::size_t f = 0; f < spec.frequencies.size(); ++f)
        for (int pair = 0; pair < 2; ++pair) {
            mon.e_hat[f][pair].assign(mon.samples[pair].size(), cplx{});
            mon.h_hat[f][pair].assign(mon.samples[pair].size(), cplx{});
        }
    im.monitors.push_back(std::move(mon));
}

template <class T>
void Simulation<T>::add_dft_region(const DftRegionSpec& spec) {
    auto& im = *impl_;
    typename Impl::DftRegion reg;
    reg.spec = spec;
    reg.cells = cells_in_box(plan_.eps->grid, spec.box);
    reg.acc.resize(spec.frequencies.size());
    for (auto& per_f : reg.acc)
        for (auto& comp : per_f) comp.assign(reg.cells.count(), cplx{});
    im.regions.push_back(std::move(reg));
}

template <class T>
void Simulation<T>::set_average_window(const TimeWindow& w) {
    impl_->average_window = w;
}

template <class T>
void Simulation<T>::set_flux_window(const TimeWindow& w) {
    impl_->flux_window = w;
}

namespace {

/// Visits padded indices of the plane `fixed` along axis a, over the interior of the
/// other two axes.
template <class FieldStateT, class Fn>
void for_face(const FieldStateT& st, int a, int fixed, Fn&& fn) {
    const int b = (a + 1) % 3, c = (a + 2) % 3;
    std::array<int, 3> idx{};
    idx[a] = fixed;
    for (int q = 0; q < st.n[c]; ++q) {
        idx[c] = q;
        for (int p = 0; p < st.n[b]; ++p) {
            idx[b] = p;
            fn(st.index(idx[0], idx[1], idx[2]));
        }
    }
}

}  // namespace

template <class T>
void Simulation<T>::step() {
    auto& im = *impl_;
    auto& st = state_;
    const auto& n = im.n;
    const std::size_t sy = im.stride[1], sz = im.stride[2];
    auto& ex = st.f[0];
    auto& ey = st.f[1];
    auto& ez = st.f[2];
    auto& hx = st.f[3];
    auto& hy = st.f[4];
    auto& hz = st.f[5];

    // E ghosts on the high faces.
    for (int a = 0; a < 3; ++a) {
        const std::size_t sa = im.stride[a];
        const std::size_t span = static_cast<std::size_t>(n[a]) * sa;
        if (im.bloch[a]) {
            const T ph = im.phase[a];
            for (int c = 0; c < 3; ++c) {
                auto& f = st.f[c];
                for_face(st, a, n[a], [&](std::size_t g) { f[g] = f[g - span] * ph; });
            }
        } else {
            for (int c = 0; c < 3; ++c) {
                auto& f = st.f[c];
                for_face(st, a, n[a], [&](std::size_t g) { f[g] = T{}; });
            }
        }
    }

    // H update.
    const double dtdx = im.dtdx;
    for (int k = 0; k < n[2]; ++k) {
        for (int j = 0; j < n[1]; ++j) {
            const std::size_t base = st.index(0, j, k);
            for (int i = 0; i < n[0]; ++i) {
                const std::size_t p = base + static_cast<std::size_t>(i);
                hx[p] -= dtdx * ((ez[p + sy] - ez[p]) - (ey[p + sz] - ey[p]));
                hy[p] -= dtdx * ((ex[p + sz] - ex[p]) - (ez[p + 1] - ez[p]));
                hz[p] -= dtdx * ((ey[p + 1] - ey[p]) - (ex[p + sy] - ex[p]));
            }
        }
    }
    for (auto& slab : im.slabs) {
        const int a = slab.axis;
        const std::size_t sa = im.stride[a];
        const int h1 = (a + 2) % 3, e1 = (a + 1) % 3;  // H_{a+2} -= dt/dx * (+d_a E_{a+1})
        const int h2 = (a + 1) % 3, e2 = (a + 2) % 3;  // H_{a+1} -= dt/dx * (-d_a E_{a+2})
        auto& H1 = st.f[3 + h1];
        auto& H2 = st.f[3 + h2];
        const auto& E1 = st.f[e1];
        const auto& E2 = st.f[e2];
        std::array<int, 3> lo{0, 0, 0}, hi = n;
        lo[a] = slab.start;
        hi[a] = slab.start + slab.thickness;
        std::size_t q = 0;
        for (int k = lo[2]; k < hi[2]; ++k)
            for (int j = lo[1]; j < hi[1]; ++j) {
                const int row_l = (a == 1 ? j : k) - slab.start;
                const std::size_t p0 = st.index(lo[0], j, k);
                T* ps1 = slab.psi_h[0].data() + q;
                T* ps2 = slab.psi_h[1].data() + q;
                const int len = hi[0] - lo[0];
                q += static_cast<std::size_t>(len);
                for (int i = 0; i < len; ++i) {
                    const int l = a == 0 ? i : row_l;
                    const double b = slab.b_h[l], cc = slab.c_h[l];
                    const std::size_t p = p0 + static_cast<std::size_t>(i);
                    ps1[i] = b * ps1[i] + cc * (E1[p + sa] - E1[p]);
                    ps2[i] = b * ps2[i] + cc * (E2[p + sa] - E2[p]);
                    H1[p] -= dtdx * ps1[i];
                    H2[p] += dtdx * ps2[i];
                }
            }
    }
    const double t_h = (st.step + 0.5) * dt_;
    const double t_m = st.step * dt_;
    for (const auto& s : im.sources) {
        if (is_electric(s.comp)) continue;
        const double x = (t_m - s.t0) / s.width;
        if (std::abs(x) > s.spec.cutoff) continue;
        const cplx wave = cplx(0, 1) * std::exp(cplx(0, -kTwoPi * s.spec.center_frequency * (t_m - s.t0))) *
                          std::exp(-0.5 * x * x) * s.spec.amplitude;
        st.f[static_cast<int>(s.comp)][s.index] -= s.coef * from_complex<T>(wave);
    }

    // H ghosts on the low faces.
    for (int a = 0; a < 3; ++a) {
        const std::size_t sa = im.stride[a];
        const std::size_t span = static_cast<std::size_t>(n[a]) * sa;
        for (int c = 0; c < 3; ++c) {
            auto& f = st.f[3 + c];
            if (im.bloch[a]) {
                const T ph = im.phase[a];
                T inv;
                if constexpr (std::is_same_v<T, double>) inv = 1.0 / ph;
                else inv = std::conj(ph);
                for_face(st, a, -1, [&](std::size_t g) { f[g] = f[g + span] * inv; });
            } else if (im.mirror[a]) {
                const bool even = plan_.boundaries[a].parity == Parity::Even;
                if (c != a) {
                    const double sgn = even ? -1.0 : 1.0;
                    for_face(st, a, -1, [&](std::size_t g) { f[g] = sgn * f[g + sa]; });
                } else {
                    const double sgn = even ? 1.0 : -1.0;
                    for_face(st, a, -1, [&](std::size_t g) { f[g] = sgn * f[g + 2 * sa]; });
                }
            } else {
                for_face(st, a, -1, [&](std::size_t g) { f[g] = T{}; });
            }
        }
    }

    // E update.
    const auto& cx = im.coef_e[0];
    const auto& cy = im.coef_e[1];
    const auto& cz = im.coef_e[2];
    for (int k = 0; k < n[2]; ++k) {
        for (int j = 0; j < n[1]; ++j) {
            const std::size_t base = st.index(0, j, k);
            for (int i = 0; i < n[0]; ++i) {
                const std::size_t p = base + static_cast<std::size_t>(i);
                ex[p] += cx[p] * ((hz[p] - hz[p - sy]) - (hy[p] - hy[p - sz]));
                ey[p] += cy[p] * ((hx[p] - hx[p - sz]) - (hz[p] - hz[p - 1]));
                ez[p] += cz[p] * ((hy[p] - hy[p - 1]) - (hx[p] - hx[p - sy]));
            }
        }
    }
    for (auto& slab : im.slabs) {
        const int a = slab.axis;
        const std::size_t sa = im.stride[a];
        const int e1 = (a + 2) % 3, h1 = (a + 1) % 3;  // E_{a+2} += c * (+d_a H_{a+1})
        const int e2 = (a + 1) % 3, h2 = (a + 2) % 3;  // E_{a+1} += c * (-d_a H_{a+2})
        auto& E1 = st.f[e1];
        auto& E2 = st.f[e2];
        const auto& H1 = st.f[3 + h1];
        const auto& H2 = st.f[3 + h2];
        const auto& c1 = im.coef_e[e1];
        const auto& c2 = im.coef_e[e2];
        std::array<int, 3> lo{0, 0, 0}, hi = n;
        lo[a] = slab.start;
        hi[a] = slab.start + slab.thickness;
        std::size_t q = 0;
        for (int k = lo[2]; k < hi[2]; ++k)
            for (int j = lo[1]; j < hi[1]; ++j) {
                const int row_l = (a == 1 ? j : k) - slab.start;
                const std::size_t p0 = st.index(lo[0], j, k);
                T* ps1 = slab.psi_e[0].data() + q;
                T* ps2 = slab.psi_e[1].data() + q;
                const int len = hi[0] - lo[0];
                q += static_cast<std::size_t>(len);
                for (int i = 0; i < len; ++i) {
                    const int l = a == 0 ? i : row_l;
                    const double b = slab.b_e[l], cc = slab.c_e[l];
                    const std::size_t p = p0 + static_cast<std::size_t>(i);
                    ps1[i] = b * ps1[i] + cc * (H1[p] - H1[p - sa]);
                    ps2[i] = b * ps2[i] + cc * (H2[p] - H2[p - sa]);
                    E1[p] += c1[p] * ps1[i];
                    E2[p] -= c2[p] * ps2[i];
                }
            }
    }
    for (const auto& s : im.sources) {
        if (!is_electric(s.comp)) continue;
        const double x = (t_h - s.t0) / s.width;
        if (std::abs(x) > s.spec.cutoff) continue;
        const cplx wave = cplx(0, 1) * std::exp(cplx(0, -kTwoPi * s.spec.center_frequency * (t_h - s.t0))) *
                          std::exp(-0.5 * x * x) * s.spec.amplitude;
        st.f[static_cast<int>(s.comp)][s.index] -= s.coef * from_complex<T>(wave);
    }

    ++st.step;
    const double t_e = st.step * dt_;

    for (auto& p : im.probes) p.values.push_back(to_complex(st.f[static_cast<int>(p.comp)][p.index]));

    if (plan_.nan_check_interval > 0 && st.step % plan_.nan_check_interval == 0) check_finite();

    if (st.step % plan_.dft_stride != 0) return;
    const double weight_dt = dt_ * plan_.dft_stride;

    // Monitors.
    const double h_time = t_e - 0.5 * dt_;
    for (auto& mon : im.monitors) {
        const bool in_avg = im.average_window.contains(t_e);
        double power = 0.0;
        for (int pair = 0; pair < 2; ++pair) {
            const auto& E = st.f[static_cast<int>(mon.e_comp[pair])];
            const auto& H = st.f[static_cast<int>(mon.h_comp[pair])];
            const double sgn = pair == 0 ? 1.0 : -1.0;
            for (const auto& s : mon.samples[pair]) {
                const T hav = 0.5 * (H[s.h0] + H[s.h1]);
                power += sgn * s.weight * re_dot(E[s.e], hav);
            }
        }
        power *= mon.area * mon.spec.sign;
        mon.trace.push_back(power);
        mon.trace_t.push_back(t_e);
        if (in_avg) {
            mon.power_sum += power;
            ++mon.power_count;
        }
        const double fw = window_weight(im.flux_window, t_e) * weight_dt;
        if (fw == 0.0) continue;
        for (std::size_t f = 0; f < mon.spec.frequencies.size(); ++f) {
            const double w = kTwoPi * mon.spec.frequencies[f];
            const cplx pe = std::polar(fw, w * t_e), phh = std::polar(fw, w * h_time);
            for (int pair = 0; pair < 2; ++pair) {
                const auto& E = st.f[static_cast<int>(mon.e_comp[pair])];
                const auto& H = st.f[static_cast<int>(mon.h_comp[pair])];
                auto& eh = mon.e_hat[f][pair];
                auto& hh = mon.h_hat[f][pair];
                const auto& smp = mon.samples[pair];
                for (std::size_t q = 0; q < smp.size(); ++q) {
                    eh[q] += pe * to_complex(E[smp[q].e]);
                    hh[q] += phh * (0.5 * (to_complex(H[smp[q].h0]) + to_complex(H[smp[q].h1])));
                }
            }
        }
    }

    if (im.energy_box && im.average_window.contains(t_e)) {
        const auto& grid = plan_.eps->grid;
        double u = 0.0;
        for (int c = 0; c < 6; ++c) {
            const Component comp = static_cast<Component>(c);
            const IndexRange r = samples_in_box(grid, comp, *im.energy_box);
            const auto off = yee_offset(comp);
            const auto& f = st.f[c];
            for (int k = r.lo[2]; k < r.hi[2]; ++k) {
                const double wk = mirror_weight(im.mirror[2], k, off[2]);
                for (int j = r.lo[1]; j < r.hi[1]; ++j) {
                    const double wjk = wk * mirror_weight(im.mirror[1], j, off[1]);
                    for (int i = r.lo[0]; i < r.hi[0]; ++i) {
                        const double w = wjk * mirror_weight(im.mirror[0], i, off[0]);
                        const double m2 = norm2(f[st.index(i, j, k)]);
                        u += w * (c < 3 ? plan_.eps->eps[c][grid.linear(i, j, k)] * m2 : m2);
                    }
                }
            }
        }
        im.energy_sum += 0.5 * u * im.dv;
        ++im.energy_count;
    }

    for (auto& reg : im.regions) {
        const double fw = window_weight(reg.spec.window, t_e) * weight_dt;
        if (fw == 0.0) continue;
        for (std::size_t f = 0; f < reg.spec.frequencies.size(); ++f) {
            const double w = kTwoPi * reg.spec.frequencies[f];
            const cplx pe = std::polar(fw, w * t_e), ph = std::polar(fw, w * h_time);
            for (int c = 0; c < 6; ++c) {
                const cplx phz = c < 3 ? pe : ph;
                auto& acc = reg.acc[f][c];
                const auto& fld = st.f[c];
                std::size_t q = 0;
                for (int k = reg.cells.lo[2]; k < reg.cells.hi[2]; ++k)
                    for (int j = reg.cells.lo[1]; j < reg.cells.hi[1]; ++j) {
                        const std::size_t base = st.index(reg.cells.lo[0], j, k);
                        for (int i = reg.cells.lo[0]; i < reg.cells.hi[0]; ++i, ++q)
                            acc[q] += phz * to_complex(fld[base + static_cast<std::size_t>(i - reg.cells.lo[0])]);
                    }
            }
        }
    }
}

template <class T>
void Simulation<T>::run_until(double t) {
    while (time() < t - 0.5 * dt_) step();
}

template <class T>
RunResult Simulation<T>::run() {
    run_until(plan_.t_max);
    check_finite();
    return result();
}

template <class T>
RunResult Simulation<T>::result() const {
    const auto& im = *impl_;
    RunResult out;
    out.dt = dt_;
    out.dx = im.dx;
    out.steps = state_.step;
    for (int a = 0; a < 3; ++a)
        if (im.mirror[a]) out.symmetry_factor *= 2.0;
    for (const auto& p : im.probes) out.probes.push_back({p.spec, dt_, dt_, p.values});
    for (auto& pr : out.probes)
        if (!is_electric(pr.spec.component)) pr.t0 = 0.5 * dt_;
    for (const auto& mon : im.monitors) {
        MonitorResult m;
        m.spec = mon.spec;
        m.mean_power = mon.power_count ? mon.power_sum / static_cast<double>(mon.power_count) : 0.0;
        m.power_trace = mon.trace;
        m.trace_times = mon.trace_t;
        for (std::size_t f = 0; f < mon.spec.frequencies.size(); ++f) {
            double flux = 0.0;
            for (int pair = 0; pair < 2; ++pair) {
                const double sgn = pair == 0 ? 1.0 : -1.0;
                const auto& smp = mon.samples[pair];
                for (std::size_t q = 0; q < smp.size(); ++q) {
                    const cplx v = mon.e_hat[f][pair][q] * std::conj(mon.h_hat[f][pair][q]);
                    flux += sgn * smp[q].weight * v.real();
                }
            }
            m.flux.push_back(flux * mon.area * mon.spec.sign);
        }
        out.monitors.push_back(std::move(m));
    }
    out.mean_energy = im.energy_count ? im.energy_sum / static_cast<double>(im.energy_count) : 0.0;

    const auto& grid = plan_.eps->grid;
    for (const auto& reg : im.regions) {
        DftRegionResult r;
        r.spec = reg.spec;
        for (std::size_t f = 0; f < reg.spec.frequencies.size(); ++f) {
            ModeField mf;
            mf.frequency = reg.spec.frequencies[f];
            mf.length_unit_nm = plan_.length_unit_nm;
            mf.grid.dx_nm = grid.dx_nm;
            for (int a = 0; a < 3; ++a) {
                mf.grid.n[a] = reg.cells.hi[a] - reg.cells.lo[a];
                mf.grid.origin_nm[a] = grid.origin_nm[a] + reg.cells.lo[a] * grid.dx_nm;
                if (im.mirror[a] && reg.cells.lo[a] == 0)
                    mf.mirror[a] = plan_.boundaries[a].parity == Parity::Even ? 1 : -1;
            }
            mf.fields = reg.acc[f];
            for (int c = 0; c < 3; ++c) {
                auto& e = mf.eps[c];
                e.reserve(reg.cells.count());
                for (int k = reg.cells.lo[2]; k < reg.cells.hi[2]; ++k)
                    for (int j = reg.cells.lo[1]; j < reg.cells.hi[1]; ++j)
                        for (int i = reg.cells.lo[0]; i < reg.cells.hi[0]; ++i)
                            e.push_back(plan_.eps->eps[c][grid.linear(i, j, k)]);
            }
            r.modes.push_back(std::move(mf));
        }
        out.dft_regions.push_back(std::move(r));
    }
    return out;
}

template <class T>
double Simulation<T>::field_energy() const {
    const auto& grid = plan_.eps->grid;
    double u = 0.0;
    for (int c = 0; c < 6; ++c)
        for (int k = 0; k < state_.n[2]; ++k)
            for (int j = 0; j < state_.n[1]; ++j)
                for (int i = 0; i < state_.n[0]; ++i) {
                    const double m2 = norm2(state_.f[c][state_.index(i, j, k)]);
                    u += c < 3 ? plan_.eps->eps[c][grid.linear(i, j, k)] * m2 : m2;
                }
    return 0.5 * u * impl_->dv;
}

template <class T>
double Simulation<T>::conserved_energy() {
    const auto& grid = plan_.eps->grid;
    std::array<std::vector<T>, 3> h_old{state_.f[3], state_.f[4], state_.f[5]};
    std::array<std::vector<T>, 3> e_old{state_.f[0], state_.f[1], state_.f[2]};
    std::vector<std::array<std::vector<T>, 2>> psi_e, psi_h;
    for (const auto& s : impl_->slabs) {
        psi_e.push_back(s.psi_e);
        psi_h.push_back(s.psi_h);
    }
    auto probe_backup = impl_->probes;
    auto sources = std::move(impl_->sources);
    impl_->sources.clear();
    const auto step_backup = state_.step;

    double ee = 0.0;
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < state_.n[2]; ++k)
            for (int j = 0; j < state_.n[1]; ++j)
                for (int i = 0; i < state_.n[0]; ++i)
                    ee += plan_.eps->eps[c][grid.linear(i, j, k)] * norm2(state_.f[c][state_.index(i, j, k)]);
    // Advance once to obtain H^{n+1/2}; the E half of the step is discarded below.
    const int saved_interval = plan_.nan_check_interval;
    plan_.nan_check_interval = 0;
    const int saved_stride = plan_.dft_stride;
    plan_.dft_stride = std::numeric_limits<int>::max();
    step();
    plan_.nan_check_interval = saved_interval;
    plan_.dft_stride = saved_stride;
    double hh = 0.0;
    for (int c = 0; c < 3; ++c)
        for (int k = 0; k < state_.n[2]; ++k)
            for (int j = 0; j < state_.n[1]; ++j)
                for (int i = 0; i < state_.n[0]; ++i) {
                    const std::size_t p = state_.index(i, j, k);
                    hh += re_dot(h_old[c][p], state_.f[3 + c][p]);
                }
    for (int c = 0; c < 3; ++c) {
        state_.f[3 + c] = std::move(h_old[c]);
        state_.f[c] = std::move(e_old[c]);
    }
    for (std::size_t s = 0; s < impl_->slabs.size(); ++s) {
        impl_->slabs[s].psi_e = psi_e[s];
        impl_->slabs[s].psi_h = psi_h[s];
    }
    impl_->probes = std::move(probe_backup);
    impl_->sources = std::move(sources);
    state_.step = step_backup;
    return 0.5 * (ee + hh) * impl_->dv;
}

template <class T>
void Simulation<T>::check_finite() const {
    for (int c = 0; c < 6; ++c)
        for (int k = 0; k < state_.n[2]; ++k)
            for (int j = 0; j < state_.n[1]; ++j)
                for (int i = 0; i < state_.n[0]; ++i) {
                    const T& v = state_.f[c][state_.index(i, j, k)];
                    bool ok;
                    if constexpr (std::is_same_v<T, double>) ok = std::isfinite(v);
                    else ok = std::isfinite(v.real()) && std::isfinite(v.imag());
                    if (!ok) {
                        std::ostringstream msg;
                        msg << "non-finite " << to_string(static_cast<Component>(c)) << " at cell (" << i << ", " << j
                            << ", " << k << ") after step " << state_.step;
                        throw NumericalError(msg.str());
                    }
                }
}

template class Simulation<double>;
template class Simulation<cplx>;

RunResult run(const SimulationPlan& plan) {
    if (plan.needs_complex_fields()) {
        Simulation<cplx> sim(plan);
        return sim.run();
    }
    Simulation<double> sim(plan);
    return sim.run();
}

void write_probe_csv(const ProbeSeries& series, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os.precision(17);
    os << "# t_a_over_c,re,im\n";
    for (std::size_t i = 0; i < series.values.size(); ++i)
        os << series.t0 + static_cast<double>(i) * series.dt << ',' << series.values[i].real() << ','
           << series.values[i].imag() << '\n';
}

void write_spectrum_csv(const MonitorResult& monitor, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os.precision(17);
    os << "# frequency_c_over_a,flux_arb\n";
    for (std::size_t f = 0; f < monitor.flux.size(); ++f) os << monitor.spec.frequencies[f] << ',' << monitor.flux[f] << '\n';
}

}  // namespace nwpc::fdtd
