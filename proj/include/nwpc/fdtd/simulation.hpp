#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nwpc/fdtd/plan.hpp"

namespace nwpc::fdtd {

using cplx = std::complex<double>;

struct ProbeSeries {
    ProbeSpec spec;
    double t0 = 0.0;  ///< time of the first sample
    double dt = 0.0;
    std::vector<cplx> values;
};

struct MonitorResult {
    MonitorSpec spec;
    std::vector<double> flux;  ///< DFT power per frequency (sign-oriented)
    double mean_power = 0.0;   ///< time average over the plan's average window
    std::vector<double> power_trace;
    std::vector<double> trace_times;
};

/// Complex field amplitudes of all six components over a sub-block of the grid,
/// together with the matching permittivity samples.
struct ModeField {
    GridSpec grid;  ///< sub-block geometry; sample positions follow the Yee offsets
    double frequency = 0.0;
    std::array<std::vector<cplx>, 6> fields;
    std::array<std::vector<double>, 3> eps;
    /// Axes (x, y, z) whose low face is a mirror plane at coordinate 0, with its parity.
    std::array<int, 3> mirror{0, 0, 0};
    double length_unit_nm = 1.0;

    cplx at(Component c, int i, int j, int k) const { return fields[static_cast<int>(c)][grid.linear(i, j, k)]; }
};

struct DftRegionResult {
    DftRegionSpec spec;
    std::vector<ModeField> modes;  ///< one per frequency
};

struct RunResult {
    double dt = 0.0;
    double dx = 0.0;
    std::int64_t steps = 0;
    double symmetry_factor = 1.0;  ///< 2 per mirror plane: full-structure / simulated
    std::vector<ProbeSeries> probes;
    std::vector<MonitorResult> monitors;
    double mean_energy = 0.0;
    std::vector<DftRegionResult> dft_regions;
};

/// Six field arrays on the staggered grid, padded with one ghost layer per side.
template <class T>
struct FieldState {
    std::array<int, 3> n{1, 1, 1};
    std::array<std::vector<T>, 6> f;
    std::int64_t step = 0;

    int pad(int a) const { return n[a] + 2; }
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i + 1) +
               static_cast<std::size_t>(n[0] + 2) *
                   (static_cast<std::size_t>(j + 1) + static_cast<std::size_t>(n[1] + 2) * static_cast<std::size_t>(k + 1));
    }
    std::vector<T>& operator[](Component c) { return f[static_cast<int>(c)]; }
    const std::vector<T>& operator[](Component c) const { return f[static_cast<int>(c)]; }
};

/// Time-domain Maxwell solver. T is double for real fields or std::complex<double>
/// when Bloch phases are needed.
template <class T>
class Simulation {
public:
    explicit Simulation(SimulationPlan plan);
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    /// One leapfrog step: H to t + dt/2, then E to t + dt.
    void step();
    void run_until(double t);
    /// Runs the plan's full length and returns all recorded data.
    RunResult run();
    /// Collects results without advancing.
    RunResult result() const;

    double time() const { return state_.step * dt_; }
    std::int64_t steps() const { return state_.step; }
    double dt() const { return dt_; }
    const SimulationPlan& plan() const { return plan_; }
    FieldState<T>& state() { return state_; }
    const FieldState<T>& state() const { return state_; }

    /// Adds accumulators mid-run.
    void add_monitor(const MonitorSpec& spec);
    void add_dft_region(const DftRegionSpec& spec);
    void set_average_window(const TimeWindow& w);
    void set_flux_window(const TimeWindow& w);

    /// Energy functional conserved by the leapfrog scheme in a closed lossless box:
    /// sum(eps |E^n|^2) + Re sum(H^{n-1/2} . conj(H^{n+1/2})), times dV/2.
    double conserved_energy();
    /// Instantaneous ½(eps|E|² + |H|²) dV over the whole grid.
    double field_energy() const;
    /// Throws NumericalError naming the first non-finite sample.
    void check_finite() const;

private:
    struct Impl;
    SimulationPlan plan_;
    FieldState<T> state_;
    double dt_;
    std::unique_ptr<Impl> impl_;
};

extern template class Simulation<double>;
extern template class Simulation<cplx>;

/// Picks real or complex storage from the plan and runs it to completion.
RunResult run(const SimulationPlan& plan);

/// Probe series as `t,re,im` CSV.
void write_probe_csv(const ProbeSeries& series, const std::string& path);
/// Monitor spectrum as `frequency,flux` CSV.
void write_spectrum_csv(const MonitorResult& monitor, const std::string& path);

}  // namespace nwpc::fdtd
