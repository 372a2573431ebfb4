#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nwpc/errors.hpp"
#include "nwpc/qed.hpp"

using namespace nwpc;
using namespace nwpc::qed;

namespace {

constexpr double kPi = std::numbers::pi;

CavityInputs random_inputs(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CavityInputs c;
    c.q = std::pow(10.0, 1 + 6 * u(rng));
    c.v_bar = 0.1 + 5 * u(rng);
    c.field_ratio = u(rng);
    c.stack.n_gap = 3.0 + u(rng);
    c.stack.n_dia = 1.5 + 1.4 * u(rng);
    return c;
}

NvParams random_nv(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    NvParams nv;
    nv.gamma_tot_hz = 1e6 + 1e8 * u(rng);
    nv.zpl_fraction = 0.001 + 0.999 * u(rng);
    nv.lambda_zpl_nm = 400 + 600 * u(rng);
    return nv;
}

}  // namespace

TEST_CASE("coupling rate for the surface NV") {
    const NvParams nv;
    const CavityInputs cav;
    CHECK(coupling_rate(nv, cav) == doctest::Approx(2.25e9).epsilon(0.05));
    auto zero = cav;
    zero.field_ratio = 0;
    CHECK(coupling_rate(nv, zero) == 0.0);
    auto quarter = cav;
    quarter.v_bar = cav.v_bar / 4;
    CHECK(coupling_rate(nv, quarter) == doctest::Approx(2 * coupling_rate(nv, cav)).epsilon(1e-14));
}

TEST_CASE("cavity decay rate") {
    CHECK(cavity_decay(637, 1.5e6) == doctest::Approx(0.157e9).epsilon(0.01));
    // (c / lambda) / 2Q evaluated by hand for Q = 2e4.
    CHECK(cavity_decay(637, 2e4) == doctest::Approx(11.77e9).epsilon(1e-3));
    CHECK(cavity_decay(637, 4e4) == doctest::Approx(0.5 * cavity_decay(637, 2e4)).epsilon(1e-15));
    CHECK_THROWS_AS(cavity_decay(637, 0), ConfigError);
}

TEST_CASE("Purcell factor and emission fraction") {
    const NvParams nv;
    const CavityInputs cav;
    CHECK(purcell_factor(nv, cav) == doctest::Approx(4.9e3).epsilon(0.05));
    auto dark = nv;
    dark.zpl_fraction = 0;
    CHECK(purcell_factor(dark, cav) == 0.0);
    CHECK(emission_fraction(16) == doctest::Approx(0.941).epsilon(1e-3 / 0.941));
    CHECK(emission_fraction(0) == 0.0);
    CHECK(emission_fraction(1) == 0.5);
}

TEST_CASE("depth model anchors and the 50 nm case") {
    const FieldDecayModel m;
    CHECK(field_at_depth(m, 0) == 0.72);
    CHECK(field_at_depth(m, 155) == 0.10);
    CHECK(m.decay_length_nm() == doctest::Approx(155 / std::log(7.2)));
    CHECK(m.decay_length_nm() == doctest::Approx(78.5).epsilon(1e-3));
    CHECK(field_at_depth(m, 50) == doctest::Approx(0.72 * std::exp(-50 / 78.5)).epsilon(1e-3));
    CHECK(field_at_depth(m, 50) == doctest::Approx(0.381).epsilon(2e-3));
    double prev = 1.0;
    for (double z = 0; z < 500; z += 7.3) {
        const double v = field_at_depth(m, z);
        CHECK(v < prev);
        prev = v;
    }
    CHECK_THROWS_AS(field_at_depth(m, -1), ConfigError);
}

TEST_CASE("QED report reproduces the quoted rate bracket and the buried-NV bound") {
    const auto surface = qed_report(NvParams{}, CavityInputs{}, FieldDecayModel{}, 0.0);
    CHECK(surface.g_hz == doctest::Approx(2.25e9).epsilon(0.05));
    CHECK(surface.kappa_hz == doctest::Approx(0.157e9).epsilon(0.01));
    CHECK(surface.gamma_tot_hz == 13e6);
    CHECK(surface.strong_coupling_candidate);

    CavityInputs buried;
    buried.q = 2e4;
    const auto deep = qed_report(NvParams{}, buried, FieldDecayModel{}, 50.0);
    CHECK(deep.f_purcell > 16);
    CHECK(deep.f_purcell == doctest::Approx(17.5).epsilon(0.01));
    CHECK(deep.beta == doctest::Approx(0.94).epsilon(0.01));
    CHECK(deep.beta == doctest::Approx(deep.f_purcell / (deep.f_purcell + 1)).epsilon(1e-12));

    NvParams bad;
    bad.gamma_tot_hz = 0;
    CHECK_THROWS_AS(qed_report(bad, CavityInputs{}, FieldDecayModel{}, 0.0), ConfigError);
}

TEST_CASE("waveguide coupling spectral density") {
    const MaterialStack stack;
    const auto s = waveguide_coupling_spectrum(1.0, 1.0, {stack.n_dia, 2 * stack.n_dia, 1e9}, stack);
    CHECK(s.s2[0] == doctest::Approx(3 / (8 * kPi)));
    CHECK(s.s2[0] == doctest::Approx(0.1194).epsilon(1e-3));
    CHECK(s.s2[1] == doctest::Approx(2 * s.s2[0]).epsilon(1e-15));
    CHECK(s.saturated[2]);
    CHECK(std::isfinite(s.s2[2]));
    const auto dark = waveguide_coupling_spectrum(0.0, 0.3, {1, 5, 50}, stack);
    for (double v : dark.s2) CHECK(v == 0.0);
}

TEST_CASE("properties over random valid inputs") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto nv = random_nv(rng);
        const auto cav = random_inputs(rng);
        const double g = coupling_rate(nv, cav) * 2 * kPi;
        const double kappa = cavity_decay(nv.lambda_zpl_nm, cav.q) * 2 * kPi;
        const double f = purcell_factor(nv, cav);
        const double identity = 2 * g * g / (kappa * nv.gamma_tot_hz * 2 * kPi);
        if (f > 0) CHECK(std::abs(identity - f) / f < 1e-9);
        CHECK(std::isfinite(g));
        CHECK(std::isfinite(f));
        const double b = emission_fraction(f);
        CHECK(b >= 0);
        CHECK(b < 1);
        // Monotone in Q, field ratio and ZPL fraction.
        auto more_q = cav;
        more_q.q *= 1.01;
        CHECK(purcell_factor(nv, more_q) > f);
        if (cav.field_ratio > 0 && cav.field_ratio < 0.99) {
            auto more_e = cav;
            more_e.field_ratio *= 1.01;
            CHECK(purcell_factor(nv, more_e) > f);
        }
        if (nv.zpl_fraction < 0.99 && cav.field_ratio > 0) {
            auto more_zpl = nv;
            more_zpl.zpl_fraction *= 1.01;
            CHECK(purcell_factor(more_zpl, cav) > f);
            CHECK(emission_fraction(purcell_factor(more_zpl, cav)) > b);
        }
    }
}

TEST_CASE("orientation factor scales g linearly") {
    CavityInputs cav;
    const double g0 = coupling_rate(NvParams{}, cav);
    cav.orientation_cos = 0.5;
    CHECK(coupling_rate(NvParams{}, cav) == doctest::Approx(0.5 * g0).epsilon(1e-15));
}
