#pragma once

// Helpers shared by the experiment runners.

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "nwpc/experiment/experiments.hpp"

namespace nwpc::experiment::detail {

inline std::string fmt(double x) {
    std::ostringstream ss;
    ss << std::setprecision(10) << x;
    return ss.str();
}

inline std::string experiment_id(const ExperimentConfig& cfg) {
    return to_string(cfg.kind) + "-" + json_hash(to_json(cfg)).substr(0, 12);
}

inline json report_header(const ExperimentConfig& cfg) {
    return {{"experiment", to_string(cfg.kind)},
            {"experiment_id", experiment_id(cfg)},
            {"config_hash", json_hash(to_json(cfg))},
            {"preset", cfg.simulation.preset},
            {"resolution", cfg.simulation.resolution}};
}

inline void finish(RunSummary& s, ResultStore& store, const ExperimentConfig& cfg, const std::string& started) {
    store.write_run_manifest(to_json(cfg), s.outputs, s.failures, started);
}

inline void note_failures(RunSummary& s, const std::vector<PointTask>& tasks, const std::vector<PointOutcome>& out) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
        if (!out[i].result) s.failures.push_back(tasks[i].label + ": " + out[i].error);
}

/// Ridge unit cell as a store task.
PointTask ridge_task(const DeviceSpec& dev, const MaterialStack& mat, double a, double k, ModeClass cls,
                     const UnitCellOptions& o, std::string label);

}  // namespace nwpc::experiment::detail
