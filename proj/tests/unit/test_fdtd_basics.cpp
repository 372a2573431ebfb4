#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/grids.hpp"
#include "nwpc/errors.hpp"
#include "nwpc/fdtd/simulation.hpp"

using namespace nwpc;
using namespace nwpc::fdtd;
using nwpc::testing::uniform_grid;

namespace {

SimulationPlan line_along_z(int nz, double pml_nm, double eps = 1.0) {
    SimulationPlan p;
    p.eps = uniform_grid({1, 1, nz}, 1.0, eps, {0, 0, -0.5 * nz});
    p.length_unit_nm = 10.0;
    p.courant = 0.5;
    p.boundaries[0] = AxisBoundary::bloch(0.0);
    p.boundaries[1] = AxisBoundary::bloch(0.0);
    p.boundaries[2] = AxisBoundary::pml(pml_nm);
    return p;
}

double envelope_peak_time(const ProbeSeries& s) {
    // Centroid of |E|^2 is robust against the carrier oscillation.
    double num = 0, den = 0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        const double w = std::norm(s.values[i]);
        num += w * (s.t0 + i * s.dt);
        den += w;
    }
    return num / den;
}

}  // namespace

TEST_CASE("zero fields stay zero without sources") {
    auto plan = line_along_z(64, 8);
    plan.t_max = 10;
    Simulation<double> sim(plan);
    sim.run_until(plan.t_max);
    CHECK(sim.field_energy() == 0.0);
}

TEST_CASE("a pulse travels at c in vacuum and c/n in a dielectric") {
    for (double n_index : {1.0, 2.0}) {
        auto plan = line_along_z(1600, 40, n_index * n_index);
        SourceSpec src;
        src.position_nm = {0, 0, -600};
        src.component = Component::Ex;
        src.center_frequency = 0.25;
        src.bandwidth = 0.05;
        plan.sources.push_back(src);
        plan.probes.push_back({{0, 0, -400}, Component::Ex});
        plan.probes.push_back({{0, 0, 400}, Component::Ex});
        plan.t_max = 2000.0 / 10.0 * n_index + 2 * src.end_time();
        const auto res = run(plan);
        const double dt_peak = envelope_peak_time(res.probes[1]) - envelope_peak_time(res.probes[0]);
        const double distance = 800.0 / plan.length_unit_nm;
        // At 20 cells per wavelength in the medium the scheme's group velocity error is ~1e-3.
        CHECK(distance / dt_peak == doctest::Approx(1.0 / n_index).epsilon(0.01));
    }
}

TEST_CASE("leapfrog energy invariant is conserved in a closed cavity at the stability limit") {
    SimulationPlan plan;
    plan.eps = uniform_grid({10, 10, 10}, 1.0);
    plan.length_unit_nm = 1.0;
    plan.courant = 1.0 / std::sqrt(3.0);
    plan.t_max = 1;
    Simulation<double> sim(plan);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    auto& st = sim.state();
    for (int c = 0; c < 6; ++c)
        for (int k = 0; k < 10; ++k)
            for (int j = 0; j < 10; ++j)
                for (int i = 0; i < 10; ++i) {
                    // Tangential E on the low PEC walls must vanish for an admissible state.
                    const bool wall = c < 3 && ((c != 0 && i == 0) || (c != 1 && j == 0) || (c != 2 && k == 0));
                    st.f[c][st.index(i, j, k)] = wall ? 0.0 : nd(rng);
                }
    const double u0 = sim.conserved_energy();
    for (int s = 0; s < 10000; ++s) sim.step();
    const double u1 = sim.conserved_energy();
    CHECK(std::abs(u1 - u0) / u0 < 1e-6);
}

TEST_CASE("unstable Courant factor is rejected") {
    SimulationPlan plan;
    plan.eps = uniform_grid({8, 8, 8}, 1.0);
    plan.courant = 0.6;
    CHECK_THROWS_AS(plan.validate(), ConfigError);
    plan.courant = 0.57;
    CHECK_NOTHROW(plan.validate());
}

TEST_CASE("non-finite fields are reported with the offending cell") {
    SimulationPlan plan;
    plan.eps = uniform_grid({6, 6, 6}, 1.0);
    plan.t_max = 1;
    Simulation<double> sim(plan);
    sim.state().f[1][sim.state().index(2, 3, 4)] = std::nan("");
    try {
        sim.check_finite();
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("(2, 3, 4)") != std::string::npos);
    }
}
