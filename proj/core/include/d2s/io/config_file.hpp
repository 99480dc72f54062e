#pragma once

#include <string>

#include "d2s/sched/orchestrator.hpp"

namespace d2s {

/// Flat-sectioned key=value experiment config. Sections: [model], [stream],
/// [drift], [prune], [d2s], [eval]. Unknown sections or keys are errors;
/// omitted keys keep their defaults. Lists are comma-separated.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

/// Canonical echo: every key, fixed order, round-trippable doubles. Parsing
/// the echo reproduces the config exactly.
std::string serialize_config(const ExperimentConfig& cfg);

/// Just the [stream] and [drift] sections; two runs are comparable when
/// these hash equal.
std::string serialize_stream_sections(const ExperimentConfig& cfg);

}  // namespace d2s
