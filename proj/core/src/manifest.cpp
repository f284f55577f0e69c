#include "pqx/manifest.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pqx/errors.hpp"
#include "pqx/hash.hpp"

namespace pqx {

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = version;
    j["seed"] = seed;
    j["wall_time_s"] = wall_time_s;
    j["config"] = nlohmann::ordered_json::parse(config_json.empty() ? "{}" : config_json);
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    return j.dump();
}

RunManifest RunManifest::from_json(const std::string& json) {
    const auto j = nlohmann::json::parse(json);
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.version = j.value("version", "");
    m.seed = j.value("seed", uint64_t{0});
    m.wall_time_s = j.value("wall_time_s", 0.0);
    m.config_json = j.at("config").dump();
    for (const auto& [k, v] : j.at("inputs").items()) m.inputs[k] = v.get<std::string>();
    for (const auto& [k, v] : j.at("outputs").items()) m.outputs[k] = v.get<std::string>();
    return m;
}

void append_manifest(const std::string& run_dir, const RunManifest& m) {
    std::filesystem::create_directories(run_dir);
    const auto path = std::filesystem::path(run_dir) / "manifests.jsonl";
    std::ofstream f(path, std::ios::app);
    if (!f) throw IoError("cannot append manifest: " + path.string());
    f << m.to_json() << "\n";
    if (!f) throw IoError("manifest write failed: " + path.string());
}

std::vector<RunManifest> read_manifests(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read manifests: " + path);
    std::vector<RunManifest> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        out.push_back(RunManifest::from_json(line));
    }
    return out;
}

std::vector<std::string> verify_manifest(const RunManifest& m) {
    std::vector<std::string> problems;
    auto check = [&](const std::map<std::string, std::string>& files, const char* role) {
        for (const auto& [path, digest] : files) {
            if (!std::filesystem::exists(path)) {
                problems.push_back(std::string(role) + " missing: " + path);
                continue;
            }
            const std::string actual = hex(sha256_file(path));
            if (actual != digest)
                problems.push_back(std::string(role) + " hash mismatch: " + path);
        }
    };
    check(m.inputs, "input");
    check(m.outputs, "output");
    return problems;
}

RunLock::RunLock(const std::string& run_dir) {
    std::filesystem::create_directories(run_dir);
    path_ = (std::filesystem::path(run_dir) / ".pqx.lock").string();
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        path_.clear();
        throw IoError("run directory is locked (remove .pqx.lock if stale): " + run_dir);
    }
    const auto pid = std::to_string(::getpid());
    [[maybe_unused]] auto n = ::write(fd, pid.c_str(), pid.size());
    ::close(fd);
}

RunLock::~RunLock() {
    if (!path_.empty()) ::unlink(path_.c_str());
}

} // namespace pqx
