#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "duellab/agent.hpp"
#include "duellab/core.hpp"
#include "duellab/env.hpp"

namespace duellab {

struct EnvSpec {
  std::string name;
  // cosine | square | quadratic | linear | tabular
  std::string kind = "square";
  int dim = 5;
  int arms = 5;
  bool symmetrize = false;
  // tabular only
  std::string path;
  TabularSchema schema;
  PreferenceMode preference = PreferenceMode::Margin;
  double margin = 0.7;

  bool is_tabular() const noexcept { return kind == "tabular"; }
  void validate() const;
  bool operator==(const EnvSpec& o) const;
};

struct AgentSpec {
  std::string name;
  std::string preset;
  AgentConfig config;
  bool operator==(const AgentSpec&) const = default;
};

struct ExperimentConfig {
  std::vector<EnvSpec> envs;
  std::vector<AgentSpec> agents;
  int rounds = 2000;
  std::vector<std::uint64_t> seeds;
  int parallelism = 1;
  std::string output_dir;
  // Off writes zero elapsed times so output files are byte-reproducible.
  bool timing = true;
  bool svg = true;

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

struct RunResult {
  std::string env;
  std::string agent;
  std::uint64_t seed = 0;
  RegretTrace trace;
  double total_ms = 0.0;
  bool aborted = false;
  int abort_round = 0;
  std::string abort_reason;
  int refit_failures = 0;
};

struct RunOptions {
  bool timing = true;
};

// Builds one environment instance for a seed. Tabular data is loaded when
// not supplied.
std::unique_ptr<Environment> make_environment(const EnvSpec& spec, std::uint64_t seed,
                                              std::shared_ptr<const TabularData> data = nullptr);

// Runs T rounds against an already-built environment.
RunResult run_on(const Environment& env, const AgentSpec& agent, std::uint64_t seed, int rounds,
                 const RunOptions& opts = {});

RunResult run_single(const EnvSpec& env_spec, const AgentSpec& agent, std::uint64_t seed, int rounds,
                     const RunOptions& opts = {}, std::shared_ptr<const TabularData> data = nullptr);

// Runs every (env, agent, seed) cell; results come back in config order
// (env, then agent, then seed) regardless of scheduling.
std::vector<RunResult> run_sweep(const ExperimentConfig& cfg);

struct SummaryCurve {
  std::string env;
  std::string agent;
  int runs = 0;
  std::vector<double> mean_cum_avg;
  std::vector<double> std_cum_avg;
};

struct Summary {
  // Sorted by (env, agent).
  std::vector<SummaryCurve> curves;
  // "env/agent/seed" of aborted runs left out of the curves.
  std::vector<std::string> excluded;
};

Summary aggregate(const std::vector<RunResult>& results);

struct OutputOptions {
  bool svg = true;
};

// runs.csv, summary.csv, timing.csv and optionally one SVG per env.
std::vector<std::filesystem::path> write_outputs(const std::vector<RunResult>& results, const Summary& summary,
                                                 const std::filesystem::path& dir, const OutputOptions& opts = {});

// Reads runs.csv back into results (identifiers and traces only).
std::vector<RunResult> read_runs_csv(const std::filesystem::path& path);

struct SummaryRow {
  std::string env;
  std::string agent;
  int round = 0;
  double mean = 0.0;
  double std = 0.0;
};
std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

// One chart per env, keyed by env name; lines are mean cumulative average regret.
std::map<std::string, std::string> render_summary_svgs(const std::vector<SummaryRow>& rows);

std::string svg_file_name(const std::string& env);

}  // namespace duellab
