#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "nwpc/errors.hpp"
#include "nwpc/geometry.hpp"

using namespace nwpc;

namespace {

DeviceSpec random_spec(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DeviceSpec s;
    s.a_o = 120 + 80 * u(rng);
    s.a_c = s.a_o * (0.8 + 0.2 * u(rng));
    s.r = 0.45 * s.a_c * (0.2 + 0.8 * u(rng));
    s.w = 100 + 200 * u(rng);
    s.d = 50 + 150 * u(rng);
    s.h = 800 * u(rng);
    s.n_grading = static_cast<int>(10 * u(rng));
    s.n_mirror = static_cast<int>(12 * u(rng));
    return s;
}

GridSpec box_grid(double dx, std::array<double, 3> lo, std::array<double, 3> hi) {
    GridSpec g;
    g.dx_nm = dx;
    for (int a = 0; a < 3; ++a) {
        g.n[a] = static_cast<int>(std::ceil((hi[a] - lo[a]) / dx));
        g.origin_nm[a] = lo[a];
    }
    return g;
}

}  // namespace

TEST_CASE("cavity grading follows the parabolic rule from a_c to a_o") {
    const DeviceSpec spec;
    const auto layout = build_cavity_layout(spec);
    const auto gaps = layout.gaps();
    const std::size_t centre = gaps.size() / 2;
    const double expected[] = {141.0, 141.52777777777777, 143.11111111111111, 145.75, 149.44444444444446,
                               154.19444444444446, 160.0};
    for (int i = 0; i <= 6; ++i) {
        CAPTURE(i);
        CHECK(gaps[centre + i] == doctest::Approx(expected[i]).epsilon(1e-12));
        CHECK(gaps[centre - i] == doctest::Approx(expected[i]).epsilon(1e-12));
    }
    // Innermost gap straddles x = 0; mirror sections stay at a_o.
    CHECK(layout.holes[centre].x == doctest::Approx(-70.5));
    CHECK(layout.holes[centre + 1].x == doctest::Approx(70.5));
    for (std::size_t i = centre + 6; i < gaps.size(); ++i) CHECK(gaps[i] == doctest::Approx(160.0));
    CHECK(gaps.size() == 1 + 2 * (6 + 8));
}

TEST_CASE("a_c = a_o gives a uniform waveguide") {
    DeviceSpec spec;
    spec.a_c = 160.0;
    for (double g : build_cavity_layout(spec).gaps()) CHECK(g == 160.0);
}

TEST_CASE("overlapping holes are rejected") {
    DeviceSpec spec;
    spec.r = 71.0;
    CHECK_THROWS_AS(build_cavity_layout(spec), ConfigError);
    CHECK_THROWS_AS(build_periodic_layout(DeviceSpec{}, 80.0, 2), ConfigError);
    spec = DeviceSpec{};
    // A strongly scaled first termination gap collides with the last unscaled hole.
    spec.termination_scalings = {0.3};
    CHECK_THROWS_AS(build_asymmetric_layout(spec, 4, 4), ConfigError);
    spec.termination_scalings = {1.2};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("periodic layouts put one hole at the centre of each cell") {
    const DeviceSpec spec;
    const auto one = build_periodic_layout(spec, 160.0, 1);
    REQUIRE(one.holes.size() == 1);
    CHECK(one.holes[0].x == 80.0);
    const auto cell141 = build_periodic_layout(spec, 141.0, 1);
    CHECK(cell141.holes[0].x == 70.5);
    CHECK(cell141.extent() == 141.0);
    const auto eight = build_periodic_layout(spec, 160.0, 8);
    CHECK(eight.extent() == 1280.0);
    for (int i = 0; i < 8; ++i) CHECK(eight.holes[i].x == doctest::Approx(80.0 + 160.0 * i));
}

TEST_CASE("asymmetric collector layout") {
    const DeviceSpec spec;
    const auto layout = build_asymmetric_layout(spec, 8, 6);
    std::size_t right0 = 0;
    while (layout.holes[right0].x < 0) ++right0;
    CHECK(layout.holes[right0].x == doctest::Approx(70.5));
    CHECK(layout.holes[right0 - 1].x == doctest::Approx(-70.5));
    const auto gaps = layout.gaps();
    CHECK(gaps[right0 - 2] == doctest::Approx(160.0));
    CHECK(gaps[right0] == doctest::Approx(141.0));
    const double radii[] = {40.85, 36.98, 34.4, 32.25};
    const std::size_t n = layout.holes.size();
    for (int t = 0; t < 4; ++t) CHECK(layout.holes[n - 4 + t].radius == doctest::Approx(radii[t]).epsilon(1e-12));
    DeviceSpec plain;
    plain.termination_scalings = {1.0};
    const auto p = build_asymmetric_layout(plain, 3, 3);
    CHECK(p.holes.back().radius == plain.r);
    CHECK(p.gaps().back() == doctest::Approx(plain.a_c));
}

TEST_CASE("point materials of the hybrid structure") {
    const DeviceSpec spec;
    const HybridStructure s(build_cavity_layout(spec), spec);
    CHECK(s.material_at(0, 0, -2000) == Material::Diamond);
    CHECK(s.material_at(0, 0, 60) == Material::GaP);
    CHECK(s.material_at(70.5, 0, 60) == Material::Air);  // hole centre in GaP
    CHECK(s.material_at(70.5, 0, -300) == Material::Air);  // hole continues into diamond
    CHECK(s.material_at(0, 0, -300) == Material::Diamond);
    CHECK(s.material_at(0, 150, -300) == Material::Air);  // beside the etched ridge
    CHECK(s.material_at(0, 0, 200) == Material::Air);

    const MaterialStack stack;
    const auto g = sample_permittivity(HoleLayout{}, spec, stack, box_grid(10, {-50, -50, -900}, {50, 50, -800}),
                                       SamplingOptions{false});
    for (double e : g.eps[0]) CHECK(e == doctest::Approx(5.76));
}

TEST_CASE("empty layout with h = 0 is a plain ridge on a diamond half-space") {
    DeviceSpec spec;
    spec.h = 0.0;
    const HybridStructure s(HoleLayout{}, spec);
    CHECK(s.material_at(0, 0, 10) == Material::GaP);
    CHECK(s.material_at(0, 500, -1) == Material::Diamond);
    CHECK(s.material_at(0, 500, 1) == Material::Air);
}

TEST_CASE("permittivity bounds and ternarity hold on a full-grid scan") {
    const DeviceSpec spec;
    const MaterialStack stack;
    const auto layout = build_periodic_layout(spec, 160, 2);
    const auto grid = box_grid(8, {0, -160, -800}, {320, 160, 300});
    const auto smooth = sample_permittivity(layout, spec, stack, grid);
    const auto sharp = sample_permittivity(layout, spec, stack, grid, SamplingOptions{false});
    int intermediate = 0, out_of_bounds = 0, non_ternary = 0;
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < grid.cells(); ++i) {
            const double e = smooth.eps[c][i];
            if (e < stack.eps_air() || e > stack.eps_gap()) ++out_of_bounds;
            const double s = sharp.eps[c][i];
            if (!(s == stack.eps_air() || s == stack.eps_dia() || s == stack.eps_gap())) ++non_ternary;
            if (e != s) ++intermediate;
        }
    CHECK(out_of_bounds == 0);
    CHECK(non_ternary == 0);
    CHECK(intermediate > 0);
}

TEST_CASE("coarse grids warn, degenerate grids are rejected") {
    const DeviceSpec spec;
    const auto layout = build_periodic_layout(spec, 160, 1);
    const auto coarse = sample_permittivity(layout, spec, {}, box_grid(32, {0, -100, -100}, {160, 100, 200}));
    CHECK_FALSE(coarse.warnings.empty());
    const auto fine = sample_permittivity(layout, spec, {}, box_grid(16, {0, -100, -100}, {160, 100, 200}));
    CHECK(fine.warnings.empty());
    GridSpec bad;
    bad.n = {0, 4, 4};
    CHECK_THROWS_AS(sample_permittivity(layout, spec, {}, bad), ConfigError);
}

TEST_CASE("smoothed permittivity converges to the refined sharp limit") {
    // Take the reference as the cell average of a smoothing-off grid 4x finer and
    // check that the per-cell L1 error of the smoothed coarse grid does not grow
    // as the resolution doubles, and stays below that of the sharp coarse grid.
    const DeviceSpec spec;
    const auto layout = build_periodic_layout(spec, 160, 1);
    const MaterialStack stack;
    double previous = 1e300;
    for (double dx : {16.0, 8.0}) {
        const auto coarse = box_grid(dx, {0, -128, -64}, {160, 128, 192});
        GridSpec fine = coarse;
        fine.dx_nm = dx / 4;
        for (int a = 0; a < 3; ++a) {
            fine.n[a] = coarse.n[a] * 4;
            fine.origin_nm[a] = coarse.origin_nm[a] - 1.5 * fine.dx_nm;  // align Ey samples
        }
        const auto smooth = sample_permittivity(layout, spec, stack, coarse);
        const auto sharp = sample_permittivity(layout, spec, stack, coarse, SamplingOptions{false});
        const auto ref = sample_permittivity(layout, spec, stack, fine, SamplingOptions{false});
        double err_smooth = 0, err_sharp = 0;
        for (int k = 0; k < coarse.n[2]; ++k)
            for (int j = 0; j < coarse.n[1]; ++j)
                for (int i = 0; i < coarse.n[0]; ++i) {
                    double avg = 0;
                    for (int c = 0; c < 4; ++c)
                        for (int b = 0; b < 4; ++b)
                            for (int a = 0; a < 4; ++a) avg += ref.eps[1][fine.linear(4 * i + a, 4 * j + b, 4 * k + c)];
                    avg /= 64;
                    err_smooth += std::abs(smooth.eps[1][coarse.linear(i, j, k)] - avg);
                    err_sharp += std::abs(sharp.eps[1][coarse.linear(i, j, k)] - avg);
                }
        err_smooth /= static_cast<double>(coarse.cells());
        err_sharp /= static_cast<double>(coarse.cells());
        CAPTURE(dx);
        CHECK(err_smooth < err_sharp);
        CHECK(err_smooth <= previous);
        previous = err_smooth;
    }
}

TEST_CASE("vertical slab auxiliary structure") {
    const DeviceSpec spec;
    const auto slab = build_vertical_slab(spec, 160.0, {}, VerticalSlabGrid{20, 0, true, false});
    CHECK(slab.grid.n[2] == 1);
    CHECK(slab.grid.n[0] == 20);
    // Hole at the cell centre, diamond beside it, air beyond the half-width.
    CHECK(slab.eps[2][slab.grid.linear(10, 0, 0)] == 1.0);
    CHECK(slab.eps[2][slab.grid.linear(1, 2, 0)] == doctest::Approx(5.76));
    CHECK(slab.eps[2][slab.grid.linear(1, slab.grid.n[1] - 1, 0)] == 1.0);
    DeviceSpec no_holes = spec;
    no_holes.r = 0;
    const auto plain = build_vertical_slab(no_holes, 160.0, {}, VerticalSlabGrid{20, 0, true, false});
    CHECK(plain.eps[2][plain.grid.linear(10, 0, 0)] == doctest::Approx(5.76));
}

TEST_CASE("layout properties over random device specs") {
    std::mt19937_64 rng(20261014);
    for (int trial = 0; trial < 300; ++trial) {
        const DeviceSpec spec = random_spec(rng);
        CAPTURE(trial);
        const auto layout = build_cavity_layout(spec);
        REQUIRE_NOTHROW(layout.validate());
        const std::size_t n = layout.holes.size();
        for (std::size_t i = 0; i < n; ++i) {
            // Mirror symmetry to machine precision.
            CHECK(layout.holes[i].x == -layout.holes[n - 1 - i].x);
            CHECK(layout.holes[i].radius == layout.holes[n - 1 - i].radius);
        }
        // Gaps are non-decreasing from the centre outward.
        const auto gaps = layout.gaps();
        const std::size_t c = gaps.size() / 2;
        for (std::size_t i = c + 1; i < gaps.size(); ++i) CHECK(gaps[i] >= gaps[i - 1] - 1e-12);
        CHECK(gaps[c] == doctest::Approx(spec.a_c));
    }
}

TEST_CASE("layout CSV export") {
    const auto layout = build_periodic_layout(DeviceSpec{}, 160, 2);
    std::ostringstream os;
    layout.write_csv(os);
    const std::string s = os.str();
    CHECK(s.rfind("# ", 0) == 0);
    CHECK(s.find("80,43") != std::string::npos);
}
