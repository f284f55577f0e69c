#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pqx {

/// One pipeline run: command, config snapshot, input/output hashes.
/// Appended as a JSON line to <run_dir>/manifests.jsonl.
struct RunManifest {
    std::string command;
    std::string config_json; // full flag snapshot, enough to rerun the command
    std::map<std::string, std::string> inputs;  // path -> sha256 hex
    std::map<std::string, std::string> outputs; // path -> sha256 hex
    uint64_t seed = 0;
    double wall_time_s = 0.0;
    std::string version;

    std::string to_json() const;
    static RunManifest from_json(const std::string& json);
};

void append_manifest(const std::string& run_dir, const RunManifest& m);
std::vector<RunManifest> read_manifests(const std::string& path);

/// Re-hashes every file recorded in the manifest; returns mismatch
/// descriptions (empty when everything checks out).
std::vector<std::string> verify_manifest(const RunManifest& m);

/// Advisory lock on the run directory for the lifetime of the object.
class RunLock {
public:
    explicit RunLock(const std::string& run_dir); // throws IoError if held
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::string path_;
};

} // namespace pqx
