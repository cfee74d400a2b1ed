#pragma once

#include <map>
#include <string>
#include <vector>

#include "kdvctrl/config.hpp"

namespace kdvctrl {

struct RunManifest {
  std::string run_id;             // content hash of the canonicalized config
  std::string config_echo;        // canonical text
  std::string tool_version;
  std::string started_at;
  std::string finished_at;
  std::vector<std::pair<std::string, std::string>> outputs;  // path, checksum
  std::map<std::string, double> headline_metrics;
};

struct TaskError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Executes the config's task, writes artifacts under out_dir, returns the
/// manifest (also persisted as <run_id>.manifest.json and appended to
/// manifests.log).
RunManifest run_task(const Config& config, const std::string& out_dir);

/// Parameter sweep: one row per value, independent runs, failures recorded as
/// status != ok rows. Returns the manifest of the combined run.
RunManifest run_sweep(const Config& base, const std::string& out_dir, int n_workers = 0);

/// Schema check only.
void validate_config(const Config& config);

/// Re-read an artifact and compare its checksum against the manifest entry.
bool verify_manifest_outputs(const RunManifest& manifest);

std::string tool_version();

}  // namespace kdvctrl
