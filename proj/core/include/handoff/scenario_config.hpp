#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "handoff/sim.hpp"

namespace handoff {

// Carries every problem found, one per line, field-path prefixed.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioFile {
  Scenario scenario;
  std::vector<SchemeKind> schemes;
  std::vector<UserKind> users;
  std::vector<Threshold> thresholds;
};

// Parses a YAML scenario document. Relative file references (registry.file,
// demand.trace_csv) resolve against the config's directory. Throws
// ConfigError after collecting all validation failures.
ScenarioFile load_scenario_file(const std::filesystem::path& path);

}  // namespace handoff
