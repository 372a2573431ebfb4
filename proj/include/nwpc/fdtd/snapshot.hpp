#pragma once

// NWFD binary field dumps.
//
// Layout (all little-endian):
//   char[4]   "NWFD"
//   uint32    version (1)
//   int32[3]  dims
//   float64   resolution (cells per a_o)
//   uint32    component id (0..5 = Ex..Hz)
//   float64   frequency (c / a_o)
//   uint32    values per sample (1 real, 2 complex re/im interleaved)
//   float64   dx_nm
//   float64[3] origin_nm
//   float64[] samples, x fastest

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "nwpc/fdtd/simulation.hpp"

namespace nwpc::fdtd {

struct Snapshot {
    std::array<int, 3> dims{1, 1, 1};
    double resolution = 0.0;
    Component component = Component::Ey;
    double frequency = 0.0;
    double dx_nm = 1.0;
    std::array<double, 3> origin_nm{0, 0, 0};
    std::vector<std::complex<double>> values;
    bool complex_values = true;
};

/// Throws std::runtime_error on I/O failure (including a full disk).
void write_snapshot(const std::string& path, const Snapshot& snap);
/// Throws std::runtime_error on a malformed or truncated file.
Snapshot read_snapshot(const std::string& path);

/// Cuts the plane `index` along `axis` out of one component of a mode profile.
Snapshot slice_mode(const ModeField& mode, Component c, Axis axis, int index, double resolution);
/// Whole-volume snapshot of one component.
Snapshot volume_mode(const ModeField& mode, Component c, double resolution);

}  // namespace nwpc::fdtd
