#pragma once

#include <string>
#include <vector>

#include "duellab/runner.hpp"

namespace duellab {

// Experiment configs are YAML documents with the sections `runner`, `envs`,
// `agent` (overrides applied to every agent) and `agents`. See README.md for
// the schema. Overrides are "dotted.path=value" strings applied to the
// document before it is interpreted; list elements are addressed by index.
ExperimentConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {},
                                   const std::string& source = "<config>");

// Fully expanded YAML: every agent carries all its keys, seeds are listed.
std::string serialize_config(const ExperimentConfig& cfg);

// Default seed list 0..n-1.
std::vector<std::uint64_t> default_seeds(int n = 20);

}  // namespace duellab
