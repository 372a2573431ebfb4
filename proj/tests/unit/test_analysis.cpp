#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "nwpc/analysis/bands.hpp"
#include "nwpc/analysis/modes.hpp"
#include "nwpc/errors.hpp"

using namespace nwpc;
using namespace nwpc::analysis;
using fdtd::ModeField;
using cplx = std::complex<double>;

namespace {

ModeField uniform_profile(std::array<int, 3> n, double dx, double eps, std::array<cplx, 3> e) {
    ModeField m;
    m.grid.n = n;
    m.grid.dx_nm = dx;
    m.frequency = 0.25;
    m.length_unit_nm = 160;
    for (int c = 0; c < 3; ++c) {
        m.fields[c].assign(m.grid.cells(), e[c]);
        m.fields[c + 3].assign(m.grid.cells(), 0.0);
        m.eps[c].assign(m.grid.cells(), eps);
    }
    return m;
}

/// Gaussian Ey blob with a dielectric core; decays well inside the box.
ModeField gaussian_profile(std::array<int, 3> n, double dx, std::array<double, 3> centre, double width) {
    ModeField m = uniform_profile(n, dx, 1.0, {0, 0, 0});
    for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
            for (int i = 0; i < n[0]; ++i) {
                const auto p = m.grid.position(Component::Ey, i, j, k);
                double r2 = 0;
                for (int a = 0; a < 3; ++a) r2 += (p[a] - centre[a]) * (p[a] - centre[a]);
                const auto idx = m.grid.linear(i, j, k);
                m.fields[1][idx] = std::exp(-r2 / (width * width)) * cplx(0.3, 0.8);
                m.fields[0][idx] = 0.1 * m.fields[1][idx];
                for (int c = 0; c < 3; ++c) m.eps[c][idx] = r2 < width * width ? 4.0 : 1.0;
            }
    return m;
}

}  // namespace

TEST_CASE("Q budget from stored energy and face powers") {
    const auto b = q_from_energy_flux(1.0, 100.0, FacePowers{1, 1, 1, 1});
    CHECK(b.q_total == doctest::Approx(25));
    CHECK(b.q_top == doctest::Approx(4 * b.q_total));
    CHECK(b.q_bot == doctest::Approx(4 * b.q_total));
    CHECK(b.q_end == doctest::Approx(4 * b.q_total));
    CHECK(b.q_side == doctest::Approx(4 * b.q_total));
    const auto s = q_from_energy_flux(1.0, 100.0, FacePowers{1, 2, 3, 0});
    CHECK(s.saturated[4]);
    CHECK(s.q_total == doctest::Approx(100.0 / 6.0).epsilon(1e-12));
    CHECK(std::abs(s.harmonic_residual()) * s.q_total < 1e-6);
    CHECK_THROWS_AS(q_from_energy_flux(1.0, 0.0, FacePowers{1, 1, 1, 1}), ConfigError);
    const auto dark = q_from_energy_flux(1.0, 1.0, FacePowers{});
    CHECK(dark.saturated[0]);
    CHECK(dark.q_total == 1e10);
}

TEST_CASE("harmonic-sum identity over random budgets") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 500; ++t) {
        FacePowers p{u(rng), u(rng) * 10, u(rng) * 1e-3, u(rng) < 0.2 ? 0.0 : u(rng)};
        const auto b = q_from_energy_flux(0.5 + u(rng), 1 + 1e3 * u(rng), p);
        CHECK(std::abs(b.harmonic_residual()) * b.q_total < 1e-6);
    }
}

TEST_CASE("mode volume of a uniform field equals the box volume") {
    const auto m = uniform_profile({10, 8, 6}, 5.0, 2.25, {0.0, 1.0, 0.0});
    const auto v = mode_volume(m, 3.3);
    CHECK(v.volume_nm3 == doctest::Approx(10 * 8 * 6 * 125.0));
    const double lambda = 160 / 0.25;
    CHECK(v.volume == doctest::Approx(v.volume_nm3 / std::pow(lambda / 3.3, 3)));
    CHECK_FALSE(v.warnings.empty());  // uniform field does not decay at the faces
}

TEST_CASE("mode volume is invariant under scaling and translation") {
    auto m = gaussian_profile({40, 40, 40}, 4.0, {80, 80, 80}, 20);
    const auto v0 = mode_volume(m, 3.3);
    CHECK(v0.warnings.empty());
    auto scaled = m;
    for (auto& f : scaled.fields)
        for (auto& x : f) x *= 3.0;
    CHECK(std::abs(mode_volume(scaled, 3.3).volume - v0.volume) / v0.volume < 1e-12);
    auto moved = gaussian_profile({40, 40, 40}, 4.0, {72, 84, 80}, 20);
    moved.grid.origin_nm = {-8, 4, 0};
    CHECK(std::abs(mode_volume(moved, 3.3).volume - v0.volume) / v0.volume < 1e-9);
}

TEST_CASE("mirror-folded profiles give the full-structure volume") {
    // Full Gaussian centred on a node plane vs its half with a mirror flag.
    auto full = gaussian_profile({40, 40, 40}, 4.0, {80, 80, 80}, 20);
    auto half = full;
    half.grid.n[0] = 20;
    half.grid.origin_nm[0] = 80;
    half.mirror[0] = 1;
    for (int c = 0; c < 6; ++c) {
        std::vector<cplx> f;
        for (int k = 0; k < 40; ++k)
            for (int j = 0; j < 40; ++j)
                for (int i = 20; i < 40; ++i) f.push_back(full.fields[c][full.grid.linear(i, j, k)]);
        half.fields[c] = f;
    }
    for (int c = 0; c < 3; ++c) {
        std::vector<double> e;
        for (int k = 0; k < 40; ++k)
            for (int j = 0; j < 40; ++j)
                for (int i = 20; i < 40; ++i) e.push_back(full.eps[c][full.grid.linear(i, j, k)]);
        half.eps[c] = e;
    }
    CHECK(mode_volume(half, 3.3).volume == doctest::Approx(mode_volume(full, 3.3).volume).epsilon(0.02));
}

TEST_CASE("mode area of a uniform cross-section") {
    // One cell of length 160 nm holding a uniform field over a w x d cross-section.
    const auto m = uniform_profile({16, 12, 8}, 10.0, 9.0, {0.0, 2.0, 0.0});
    const auto a = mode_area(m, 160.0, 3.3);
    CHECK(a.volume_nm3 == doctest::Approx(120.0 * 80.0));
    auto scaled = m;
    for (auto& x : scaled.fields[1]) x *= 7.0;
    CHECK(mode_area(scaled, 160.0, 3.3).volume == doctest::Approx(a.volume).epsilon(1e-12));
}

TEST_CASE("polarization fraction") {
    CHECK(classify_mode(uniform_profile({3, 3, 3}, 1, 2, {0.0, 1.0, 0.0})) == 1.0);
    CHECK(classify_mode(uniform_profile({3, 3, 3}, 1, 2, {1.0, 0.0, 0.0})) == 0.0);
    CHECK(is_te_like(classify_mode(uniform_profile({3, 3, 3}, 1, 2, {0.5, 1.0, 0.0}))));
    CHECK_THROWS_AS(classify_mode(uniform_profile({3, 3, 3}, 1, 2, {0.0, 0.0, 0.0})), ConfigError);
}

TEST_CASE("lightlines and empty band structures") {
    const MaterialStack stack;
    const auto bs = assemble_band_structure({}, stack, {}, 160.0);
    CHECK(bs.entries.empty());
    CHECK(bs.lightlines.size() == 3);
    CHECK(bs.lightline_at("diamond", 0.5) == doctest::Approx(0.2083).epsilon(1e-3));
    CHECK(bs.lightline_at("diamond", 0.5) == doctest::Approx(0.5 / 2.4));
    CHECK(bs.lightline_at("air", 0.25) == doctest::Approx(0.25));
}

TEST_CASE("band assembly connects two crossing-free bands and drops leaky modes") {
    std::vector<ModesAtK> per_k;
    for (int i = 1; i <= 10; ++i) {
        const double k = 0.05 * i;
        ModesAtK g{k, {}};
        g.modes.push_back({k, 0.8 * k / 2.4 + 0.02, 1e4, 0.9, "", false});       // TE-like
        g.modes.push_back({k, 0.9 * k / 2.0 + 0.05, 5e3, 0.1, "", false});       // TM-like
        g.modes.push_back({k, 0.4, 20.0, 0.5, "", false});                      // leaky, dropped
        std::swap(g.modes[0], g.modes[1]);
        per_k.push_back(g);
    }
    const auto bs = assemble_band_structure(per_k, MaterialStack{}, {{0.0, 0.0}, {0.5, 0.19}}, 160.0);
    CHECK(bs.entries.size() == 20);
    CHECK(bs.band("TE-1").size() == 10);
    CHECK(bs.band("TM-1").size() == 10);
    for (const auto& e : bs.band("TE-1")) CHECK(e.te_fraction == 0.9);
    // No band has two modes at one k.
    for (const auto* name : {"TE-1", "TM-1"}) {
        const auto b = bs.band(name);
        for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i].k > b[i - 1].k);
    }
    CHECK(bs.lightline_at("structured", 0.25) == doctest::Approx(0.095));
    std::ostringstream os;
    bs.write_csv(os);
    CHECK(os.str().rfind("# k_a_over_2pi,omega_a_over_2pi_c,band,te_fraction,q_wg\n", 0) == 0);
}

TEST_CASE("crossing bands of opposite symmetry keep their own class") {
    std::vector<ModesAtK> per_k;
    for (int i = 1; i <= 10; ++i) {
        const double k = 0.05 * i;
        ModesAtK g{k, {}};
        g.modes.push_back({k, 0.10 + 0.2 * k, 1e4, 0.7, "", false});  // rising TE-like
        g.modes.push_back({k, 0.20 - 0.1 * k, 1e4, 0.4, "", false});  // falling TM-like
        per_k.push_back(g);
    }
    const auto bs = assemble_band_structure(per_k, MaterialStack{}, {}, 160.0);
    REQUIRE(bs.band("TE-1").size() == 10);
    REQUIRE(bs.band("TM-1").size() == 10);
    for (const auto& e : bs.band("TE-1")) CHECK(e.te_fraction == 0.7);
    for (const auto& e : bs.band("TM-1")) CHECK(e.te_fraction == 0.4);
}

TEST_CASE("group index") {
    std::vector<std::pair<double, double>> lin;
    for (int i = 0; i < 6; ++i) lin.emplace_back(0.1 * i, 0.1 * i / 2.4);
    for (const auto& [w, ng] : group_index(lin)) CHECK(ng == doctest::Approx(2.4));

    // Quadratic band: n_g doubles when the distance to k_X halves.
    const double kx = 0.5, wx = 0.21, alpha = 0.3;
    std::vector<std::pair<double, double>> quad;
    for (int i = 0; i <= 8; ++i) {
        const double k = 0.1 + 0.05 * i;
        quad.emplace_back(k, wx + alpha * (k - kx) * (k - kx));
    }
    const auto ng = group_index(quad);
    // Points at distances 0.2 (k = 0.3) and 0.1 (k = 0.4).
    CHECK(ng[6].second / ng[4].second == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(std::isinf(group_index(quad)[8].second));

    // Second-order convergence on a smooth curve.
    auto err_for = [](double h) {
        std::vector<std::pair<double, double>> b;
        for (int i = 0; i <= 4; ++i) {
            const double k = 0.2 + h * i;
            b.emplace_back(k, 0.2 + 0.1 * std::sin(2 * k));
        }
        const double exact = 1.0 / (0.2 * std::cos(2 * (0.2 + 2 * h)));
        return std::abs(group_index(b)[2].second - exact);
    };
    CHECK(err_for(0.02) / err_for(0.01) == doctest::Approx(4.0).epsilon(0.05));
    CHECK_THROWS_AS(group_index({{0.1, 0.1}, {0.1, 0.2}, {0.3, 0.3}}), ConfigError);
    CHECK_THROWS_AS(group_index({{0.1, 0.1}, {0.2, 0.2}}), ConfigError);
}

TEST_CASE("waveguide loss conversion") {
    // Hand evaluation: omega = 0.25 * 2 pi c / a_o, v_g = 0.2 c, so c cancels and
    // alpha = 0.25 * 2 pi / (0.2 * Q * a_o).
    const double c = 2.998e8, a_o = 160e-9;
    const double omega = 0.25 * 2 * std::numbers::pi * c / a_o;
    const auto l = waveguide_loss(omega, 1e4, 0.2 * c);
    CHECK(l.per_m == doctest::Approx(4.909e3).epsilon(1e-3));
    CHECK(l.db_per_cm == doctest::Approx(4.342944819 * l.per_m / 100));
    CHECK(waveguide_loss(omega, 2e4, 0.2 * c).per_m == doctest::Approx(0.5 * l.per_m).epsilon(1e-15));
    CHECK(waveguide_loss(omega, INFINITY, 0.2 * c).per_m == 0.0);
    CHECK_THROWS_AS(waveguide_loss(omega, 1e4, 0.0), ConfigError);
}

TEST_CASE("band-edge potential evaluates each spacing once") {
    DeviceSpec spec;
    int calls = 0;
    auto edge = [&](double a) {
        ++calls;
        return 0.24 * 160.0 / a;  // edge scales inversely with spacing
    };
    const auto pot = band_edge_potential(build_cavity_layout(spec), edge);
    CHECK(calls == 7);
    const std::size_t centre = pot.size() / 2;
    CHECK(pot[centre].x_nm == doctest::Approx(0.0));
    double prev = pot[centre].frequency;
    for (std::size_t i = centre + 1; i < pot.size(); ++i) {
        CHECK(pot[i].frequency <= prev);
        prev = pot[i].frequency;
    }
    spec.a_c = spec.a_o;
    calls = 0;
    const auto flat = band_edge_potential(build_cavity_layout(spec), edge);
    CHECK(calls == 1);
    for (const auto& p : flat) CHECK(p.frequency == flat.front().frequency);
}

#include <filesystem>
#include <fstream>

#include "nwpc/fdtd/snapshot.hpp"

TEST_CASE("NWFD snapshots round-trip bit-exactly") {
    auto m = gaussian_profile({12, 10, 8}, 4.0, {24, 20, 16}, 10);
    m.grid.origin_nm = {-3, 0.5, 7};
    const auto path = (std::filesystem::temp_directory_path() / "nwpc_snapshot_test.nwfd").string();
    for (int axis = 0; axis < 3; ++axis) {
        const auto s = fdtd::slice_mode(m, Component::Ey, static_cast<Axis>(axis), 3, 40.0);
        fdtd::write_snapshot(path, s);
        const auto r = fdtd::read_snapshot(path);
        CHECK(r.dims == s.dims);
        CHECK(r.dims[axis] == 1);
        CHECK(r.component == Component::Ey);
        CHECK(r.resolution == 40.0);
        CHECK(r.frequency == m.frequency);
        CHECK(r.origin_nm == s.origin_nm);
        CHECK(r.values == s.values);
    }
    const auto v = fdtd::volume_mode(m, Component::Ex, 40.0);
    CHECK(v.values.size() == 12u * 10u * 8u);
    fdtd::write_snapshot(path, v);
    CHECK(fdtd::read_snapshot(path).values == v.values);
    CHECK(std::filesystem::file_size(path) == 4 + 4 + 12 + 8 + 4 + 8 + 4 + 8 + 24 + 16 * v.values.size());

    // Truncated and foreign files are rejected.
    std::filesystem::resize_file(path, 60);
    CHECK_THROWS_AS(fdtd::read_snapshot(path), std::runtime_error);
    { std::ofstream(path, std::ios::binary) << "JUNKJUNKJUNK"; }
    CHECK_THROWS_AS(fdtd::read_snapshot(path), std::runtime_error);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(fdtd::write_snapshot("/nonexistent-dir/x.nwfd", v), std::runtime_error);
}
