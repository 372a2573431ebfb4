#include <doctest.h>

#include <cmath>

#include "../support/grids.hpp"
#include "nwpc/errors.hpp"
#include "nwpc/fdtd/simulation.hpp"

using namespace nwpc;
using namespace nwpc::fdtd;
using nwpc::testing::uniform_grid;

namespace {

/// 2D (x, y) domain centered on the origin holding a dielectric block, with PML in x
/// and PEC walls in y.
SimulationPlan symmetric_2d(int nx, int ny) {
    auto g = uniform_grid({nx, ny, 1}, 1.0, 1.0, {-0.5 * nx, -0.5 * ny, 0});
    for (int c = 0; c < 3; ++c)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const auto p = g->grid.position(static_cast<Component>(c), i, j, 0);
                const bool inside = std::abs(p[0]) < 8.3 && std::abs(p[1]) < 5.2;
                g->eps[c][g->grid.linear(i, j, 0)] = inside ? 4.0 : 1.0;
            }
    SimulationPlan plan;
    plan.eps = g;
    plan.length_unit_nm = 10.0;
    plan.courant = 0.5;
    plan.boundaries[0] = AxisBoundary::pml(8.0);
    plan.boundaries[1] = AxisBoundary{BoundaryKind::Pec, BoundaryKind::Pec};
    plan.boundaries[2] = AxisBoundary::bloch(0.0);
    return plan;
}

SourceSpec ey_source(double x, double y) {
    SourceSpec s;
    s.position_nm = {x, y, 0};
    s.component = Component::Ey;
    s.center_frequency = 0.3;
    s.bandwidth = 0.1;
    return s;
}

double max_rel_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double scale = 0, diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max(scale, std::abs(b[i]));
        diff = std::max(diff, std::abs(a[i] - b[i]));
    }
    return diff / scale;
}

}  // namespace

TEST_CASE("mirror-halved domains reproduce the full-domain probe series") {
    auto full = symmetric_2d(48, 32);
    // Ey sits half a cell off the y = 0 node, so the y-symmetric drive is a pair.
    full.sources = {ey_source(0, 0.5), ey_source(0, -0.5)};
    full.probes = {{{3.0, 4.5, 0}, Component::Ey}, {{9.0, 2.0, 0}, Component::Ex}, {{2.5, 7.0, 0}, Component::Hz}};
    full.t_max = 1000 * full.dt() + 1e-9;

    const auto ref = run(full);
    REQUIRE(ref.steps == 1000);

    auto half_x = impose_mirror_symmetry(full, Axis::X, Parity::Even);
    auto half_xy = impose_mirror_symmetry(half_x, Axis::Y, Parity::Odd);
    auto half_y = impose_mirror_symmetry(full, Axis::Y, Parity::Odd);
    for (const auto* plan : {&half_x, &half_y, &half_xy}) {
        const auto res = run(*plan);
        REQUIRE(res.probes.size() == ref.probes.size());
        for (std::size_t p = 0; p < ref.probes.size(); ++p) {
            CAPTURE(p);
            CHECK(max_rel_diff(res.probes[p].values, ref.probes[p].values) < 1e-9);
        }
    }
    CHECK(run(half_xy).symmetry_factor == 4.0);
}

TEST_CASE("even parity makes the tangential field's normal derivative vanish at the plane") {
    auto full = symmetric_2d(48, 32);
    full.sources = {ey_source(0, 0.5), ey_source(0, -0.5)};
    full.t_max = 200 * full.dt() + 1e-9;
    auto half = impose_mirror_symmetry(full, Axis::X, Parity::Even);
    Simulation<double> sim(half);
    sim.run_until(half.t_max);
    // Ey is a node sample on the x = 0 plane; its image across the plane is itself,
    // so the centered difference across the plane uses the mirrored neighbour and
    // vanishes. Hz, which straddles the plane, is odd: the ghost equals minus the
    // first interior sample.
    const auto& st = sim.state();
    for (int j = 0; j < st.n[1]; ++j) {
        const double hz0 = st.f[5][st.index(0, j, 0)];
        const double ghost = st.f[5][st.index(-1, j, 0)];
        CHECK(ghost == doctest::Approx(-hz0));
    }
}

TEST_CASE("mirror reduction rejects incompatible setups") {
    auto full = symmetric_2d(48, 32);
    full.t_max = 1.0;
    SUBCASE("off-plane source") {
        full.sources = {ey_source(3.0, 0.5)};
        CHECK_THROWS_AS(impose_mirror_symmetry(full, Axis::X, Parity::Even), ConfigError);
    }
    SUBCASE("source killed by the parity") {
        full.sources = {ey_source(0, 0.5)};
        CHECK_THROWS_AS(impose_mirror_symmetry(full, Axis::X, Parity::Odd), ConfigError);
    }
    SUBCASE("asymmetric geometry") {
        auto g = std::const_pointer_cast<PermittivityGrid>(full.eps);
        g->eps[1][g->grid.linear(30, 10, 0)] = 9.0;
        full.sources = {ey_source(0, 0.5)};
        CHECK_THROWS_AS(impose_mirror_symmetry(full, Axis::X, Parity::Even), ConfigError);
    }
}

TEST_CASE("doubling the source amplitude quadruples monitor spectra") {
    auto plan = symmetric_2d(48, 32);
    plan.sources = {ey_source(0, 0.5)};
    MonitorSpec m;
    m.name = "right";
    m.normal = Axis::X;
    m.coordinate_nm = 14.0;
    m.extent = Box{{0, -16, 0}, {0, 16, 1}};
    m.frequencies = {0.25, 0.3, 0.35};
    plan.monitors = {m};
    plan.average_window = TimeWindow{10.0, 1e300, false};
    plan.t_max = 40.0;
    const auto r1 = run(plan);
    plan.sources[0].amplitude = 2.0;
    const auto r2 = run(plan);
    for (std::size_t f = 0; f < m.frequencies.size(); ++f) {
        CHECK(r1.monitors[0].flux[f] > 0);
        CHECK(std::abs(r2.monitors[0].flux[f] / r1.monitors[0].flux[f] - 4.0) < 4e-10);
    }
    CHECK(std::abs(r2.monitors[0].mean_power / r1.monitors[0].mean_power - 4.0) < 4e-10);
}

TEST_CASE("vacuum propagation is reciprocal") {
    SimulationPlan plan;
    plan.eps = uniform_grid({40, 40, 1}, 1.0, 1.0, {-20, -20, 0});
    plan.length_unit_nm = 10.0;
    plan.courant = 0.5;
    plan.boundaries[0] = AxisBoundary::pml(6.0);
    plan.boundaries[1] = AxisBoundary::pml(6.0);
    plan.boundaries[2] = AxisBoundary::bloch(0.0);
    plan.t_max = 30.0;
    const std::array<double, 3> a{-5.0, -3.0, 0}, b{6.0, 4.0, 0};
    SourceSpec s;
    s.component = Component::Ez;
    s.center_frequency = 0.3;
    s.bandwidth = 0.1;

    auto forward = plan;
    s.position_nm = a;
    forward.sources = {s};
    forward.probes = {{b, Component::Ez}};
    auto backward = plan;
    s.position_nm = b;
    backward.sources = {s};
    backward.probes = {{a, Component::Ez}};
    const auto r1 = run(forward), r2 = run(backward);
    CHECK(max_rel_diff(r1.probes[0].values, r2.probes[0].values) < 1e-6);
}

TEST_CASE("Bloch phases repeat with the reciprocal lattice period") {
    const double a_nm = 20.0;
    auto g = uniform_grid({20, 1, 30}, 1.0, 1.0, {0, 0, -15});
    for (int k = 0; k < 30; ++k)
        for (int i = 0; i < 20; ++i)
            for (int c = 0; c < 3; ++c) {
                const auto p = g->grid.position(static_cast<Component>(c), i, 0, k);
                const double dxh = p[0] - 10.0;
                g->eps[c][g->grid.linear(i, 0, k)] = (std::abs(p[2]) < 5 && std::abs(dxh) > 4) ? 6.0 : 1.0;
            }
    SimulationPlan plan;
    plan.eps = g;
    plan.length_unit_nm = 20.0;
    plan.courant = 0.5;
    plan.boundaries[1] = AxisBoundary::bloch(0.0);
    plan.boundaries[2] = AxisBoundary::pml(5.0);
    SourceSpec s;
    s.position_nm = {7.0, 0, 1.0};
    s.component = Component::Ey;
    s.center_frequency = 0.3;
    s.bandwidth = 0.15;
    plan.sources = {s};
    plan.probes = {{{13.0, 0, -2.0}, Component::Ey}};
    plan.t_max = 30.0;
    const double k = 0.3 * std::numbers::pi / a_nm;
    plan.boundaries[0] = AxisBoundary::bloch(k);
    const auto r1 = run(plan);
    plan.boundaries[0] = AxisBoundary::bloch(k + 2 * std::numbers::pi / a_nm);
    const auto r2 = run(plan);
    CHECK(max_rel_diff(r1.probes[0].values, r2.probes[0].values) < 1e-9);
}

TEST_CASE("zone-edge Bloch runs use real storage and match complex storage") {
    auto g = uniform_grid({16, 1, 24}, 1.0, 1.0, {0, 0, -12});
    for (int k = 0; k < 24; ++k)
        for (int i = 0; i < 16; ++i)
            for (int c = 0; c < 3; ++c) {
                const auto p = g->grid.position(static_cast<Component>(c), i, 0, k);
                g->eps[c][g->grid.linear(i, 0, k)] = (std::abs(p[2]) < 4 && std::abs(p[0] - 8) > 3) ? 5.0 : 1.0;
            }
    SimulationPlan plan;
    plan.eps = g;
    plan.length_unit_nm = 16.0;
    plan.courant = 0.5;
    plan.boundaries[0] = AxisBoundary::bloch(std::numbers::pi / 16.0);
    plan.boundaries[1] = AxisBoundary::bloch(0.0);
    plan.boundaries[2] = AxisBoundary::pml(4.0);
    SourceSpec s;
    s.position_nm = {5.0, 0, 1.0};
    s.center_frequency = 0.3;
    s.bandwidth = 0.15;
    plan.sources = {s};
    plan.probes = {{{11.0, 0, -1.0}, Component::Ey}};
    plan.t_max = 20.0;
    CHECK_FALSE(plan.needs_complex_fields());
    const auto real = run(plan);
    Simulation<cplx> complex_sim(plan);
    const auto cplx_run = complex_sim.run();
    // The complex run carries the analytic source; its real part is the real run.
    auto re = cplx_run.probes[0].values;
    for (auto& v : re) v = v.real();
    CHECK(max_rel_diff(real.probes[0].values, re) < 1e-12);
    plan.boundaries[0] = AxisBoundary::bloch(0.5 * std::numbers::pi / 16.0);
    CHECK(plan.needs_complex_fields());
}
