#pragma once

// On-disk result store. Each sweep point lives in its own directory named after the
// hash of its point specification:
//
//   <root>/points/<hash>/result.json    deterministic payload
//   <root>/points/<hash>/manifest.json  hash, tool version, timestamps, output list
//   <root>/points/<hash>/DONE           the hash again; written last
//
// A point counts as complete only if DONE and the manifest both carry the hash of
// the requested specification. Assembled outputs are always rebuilt from the stored
// result.json files, so an interrupted-and-resumed sweep writes the same bytes as a
// straight run.

#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nwpc::experiment {

using json = nlohmann::json;

inline constexpr const char* tool_version = "nwpc 0.1.0";

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// Doubles as JSON numbers, non-finite values as null (and back).
json number_or_null(double x);
double number_or_nan(const json& j);

class ResultStore {
public:
    explicit ResultStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path point_dir(const std::string& hash) const;

    /// Stored result of a completed point, or nullopt if absent, incomplete or stale.
    std::optional<json> load(const json& spec) const;

    /// Empties the point directory and returns it. Files written there before
    /// commit() belong to the point.
    std::filesystem::path begin(const json& spec);
    /// Records the result and marks the point complete.
    void commit(const json& spec, const json& result, const std::string& started);
    /// Records a failure; the point stays incomplete and reruns next time.
    void fail(const json& spec, const std::string& message, const std::string& started);

    /// Top-level run manifest: configuration, its hash and the list of outputs.
    void write_run_manifest(const json& config, const std::vector<std::string>& outputs,
                            const std::vector<std::string>& failures, const std::string& started);

private:
    std::filesystem::path root_;
    mutable std::mutex mutex_;
};

/// UTC time, ISO 8601.
std::string utc_timestamp();

struct PointTask {
    json spec;  ///< everything the result depends on
    std::string label;
    std::function<json(const std::filesystem::path& dir)> run;
};

struct PointOutcome {
    std::optional<json> result;
    std::string error;   ///< set when the run threw
    bool reused = false;  ///< result came from an earlier run
};

/// Runs the tasks not already complete in the store across `jobs` threads.
/// Exceptions are caught per task; ConfigError is rethrown after all workers stop.
std::vector<PointOutcome> run_points(ResultStore& store, const std::vector<PointTask>& tasks, int jobs);

/// Progress lines on stderr; safe to call from workers.
void log_line(const std::string& msg);

}  // namespace nwpc::experiment
