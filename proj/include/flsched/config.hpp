#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flsched/simulator.hpp"

namespace flsched {

struct SweepSpec {
  std::vector<Policy> policies;
  std::vector<std::uint64_t> seeds;
};

struct ExperimentConfig {
  RunConfig run;
  SweepSpec sweep;  // empty lists fall back to run.policy / run.master_seed
};

// Full document with every key at its default; it doubles as the schema.
nlohmann::json default_config_json();

nlohmann::json to_json(const ExperimentConfig& cfg);

// Throws ConfigError on unknown keys or values of the wrong type/format.
// Invariants are not checked here; see RunConfig::violations().
ExperimentConfig experiment_from_json(const nlohmann::json& doc);

// Overlays `doc` onto the defaults, rejecting keys the schema lacks.
nlohmann::json resolve_with_defaults(const nlohmann::json& doc);

// Applies "dotted.key=value". The value is parsed as JSON when possible and
// taken as a string otherwise. Throws ConfigError for unknown keys.
void apply_override(nlohmann::json& doc, std::string_view assignment);

nlohmann::json load_json_file(const std::filesystem::path& path);

}  // namespace flsched
