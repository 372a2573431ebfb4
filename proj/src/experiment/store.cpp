#include "nwpc/experiment/store.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "nwpc/errors.hpp"
#include "nwpc/experiment/config.hpp"

namespace fs = std::filesystem;

namespace nwpc::experiment {

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_or_nan(const json& j) { return j.is_number() ? j.get<double>() : std::nan(""); }

std::string utc_timestamp() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void log_line(const std::string& msg) {
    static std::mutex m;
    std::lock_guard lock(m);
    std::cerr << msg << '\n';
}

ResultStore::ResultStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_ / "points"); }

fs::path ResultStore::point_dir(const std::string& hash) const { return root_ / "points" / hash.substr(0, 24); }

std::optional<json> ResultStore::load(const json& spec) const {
    const std::string hash = json_hash(spec);
    const fs::path dir = point_dir(hash);
    std::lock_guard lock(mutex_);
    try {
        if (!fs::exists(dir / "DONE") || read_file(dir / "DONE") != hash + "\n") return std::nullopt;
        json manifest = json::parse(read_file(dir / "manifest.json"));
        if (manifest.value("config_hash", "") != hash) return std::nullopt;
        if (json_hash(manifest.at("spec")) != hash) return std::nullopt;
        return json::parse(read_file(dir / "result.json"));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

fs::path ResultStore::begin(const json& spec) {
    const fs::path dir = point_dir(json_hash(spec));
    std::lock_guard lock(mutex_);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

namespace {

json list_outputs(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace

void ResultStore::commit(const json& spec, const json& result, const std::string& started) {
    const std::string hash = json_hash(spec);
    const fs::path dir = point_dir(hash);
    std::lock_guard lock(mutex_);
    write_file_atomic(dir / "result.json", result.dump(1) + "\n");
    json manifest{{"config_hash", hash},  {"tool_version", tool_version}, {"started", started},
                  {"finished", utc_timestamp()}, {"spec", spec}, {"outputs", list_outputs(dir)}};
    write_file_atomic(dir / "manifest.json", manifest.dump(1) + "\n");
    write_file_atomic(dir / "DONE", hash + "\n");
}

void ResultStore::fail(const json& spec, const std::string& message, const std::string& started) {
    const std::string hash = json_hash(spec);
    const fs::path dir = point_dir(hash);
    std::lock_guard lock(mutex_);
    fs::create_directories(dir);
    fs::remove(dir / "DONE");
    json manifest{{"config_hash", hash}, {"tool_version", tool_version}, {"started", started},
                  {"finished", utc_timestamp()}, {"spec", spec}, {"error", message}};
    write_file_atomic(dir / "manifest.json", manifest.dump(1) + "\n");
}

void ResultStore::write_run_manifest(const json& config, const std::vector<std::string>& outputs,
                                     const std::vector<std::string>& failures, const std::string& started) {
    std::lock_guard lock(mutex_);
    json manifest{{"config_hash", json_hash(config)}, {"tool_version", tool_version},
                  {"started", started},               {"finished", utc_timestamp()},
                  {"config", config},                 {"outputs", outputs},
                  {"failed_points", failures}};
    write_file_atomic(root_ / "manifest.json", manifest.dump(1) + "\n");
}

std::vector<PointOutcome> run_points(ResultStore& store, const std::vector<PointTask>& tasks, int jobs) {
    std::vector<PointOutcome> out(tasks.size());
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (auto r = store.load(tasks[i].spec)) {
            out[i].result = std::move(*r);
            out[i].reused = true;
            log_line("[skip] " + tasks[i].label + " (complete)");
        } else {
            todo.push_back(i);
        }
    }
    if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs = std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(todo.size(), 1)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr config_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t n; (n = next.fetch_add(1)) < todo.size();) {
            const std::size_t i = todo[n];
            const auto& task = tasks[i];
            const std::string started = utc_timestamp();
            const auto t0 = std::chrono::steady_clock::now();
            try {
                fs::path dir = store.begin(task.spec);
                json result = task.run(dir);
                store.commit(task.spec, result, started);
                out[i].result = std::move(result);
                const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                std::ostringstream msg;
                msg << "[done] " << task.label << " (" << std::lround(s) << " s)";
                log_line(msg.str());
            } catch (const ConfigError&) {
                std::lock_guard lock(error_mutex);
                if (!config_error) config_error = std::current_exception();
                out[i].error = "configuration error";
            } catch (const std::exception& e) {
                out[i].error = e.what();
                store.fail(task.spec, e.what(), started);
                log_line("[fail] " + task.label + ": " + e.what());
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (config_error) std::rethrow_exception(config_error);
    return out;
}

}  // namespace nwpc::experiment
