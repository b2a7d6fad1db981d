// duellab command-line front end: run, plot, validate, presets.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "duellab/config.hpp"
#include "duellab/error.hpp"
#include "duellab/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeAbort = 3;

std::string resolve_output_dir(const std::string& flag, const std::string& from_config) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv("DUELLAB_OUTPUT_DIR"); env && *env) return env;
  return "results";
}

int cmd_run(const std::string& config, const std::vector<std::string>& overrides, const std::string& out_flag) {
  const duellab::ExperimentConfig cfg = duellab::parse_config(config, overrides);
  const std::string dir = resolve_output_dir(out_flag, cfg.output_dir);
  const auto results = duellab::run_sweep(cfg);
  const auto summary = duellab::aggregate(results);
  duellab::write_outputs(results, summary, dir, {cfg.svg});

  for (const auto& ex : summary.excluded) std::cerr << "warning: aborted run excluded from summary: " << ex << "\n";
  for (const auto& c : summary.curves) {
    std::printf("%s %s runs=%d final_cum_avg=%.6g std=%.6g\n", c.env.c_str(), c.agent.c_str(), c.runs,
                c.mean_cum_avg.empty() ? 0.0 : c.mean_cum_avg.back(),
                c.std_cum_avg.empty() ? 0.0 : c.std_cum_avg.back());
  }
  std::printf("wrote %s\n", dir.c_str());
  bool aborted = false;
  for (const auto& r : results) {
    if (r.aborted) {
      aborted = true;
      std::cerr << "abort: " << r.env << "/" << r.agent << "/" << r.seed << " at round " << r.abort_round << ": "
                << r.abort_reason << "\n";
    }
  }
  return aborted ? kRuntimeAbort : kOk;
}

int cmd_plot(const std::string& input, const std::string& out_dir) {
  const auto rows = duellab::read_summary_csv(input);
  const auto charts = duellab::render_summary_svgs(rows);
  std::filesystem::create_directories(out_dir);
  for (const auto& [env, svg] : charts) {
    const auto path = std::filesystem::path(out_dir) / duellab::svg_file_name(env);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw duellab::IoError("cannot open '" + path.string() + "' for writing");
    out << svg;
    std::printf("wrote %s\n", path.string().c_str());
  }
  return kOk;
}

int cmd_validate(const std::string& config, const std::vector<std::string>& overrides, bool print) {
  const auto cfg = duellab::parse_config(config, overrides);
  if (print) {
    std::cout << duellab::serialize_config(cfg);
  } else {
    std::printf("ok: %zu envs, %zu agents, %d rounds, %zu seeds\n", cfg.envs.size(), cfg.agents.size(), cfg.rounds,
                cfg.seeds.size());
  }
  return kOk;
}

int cmd_presets() {
  for (const auto& name : duellab::preset_names()) {
    std::printf("%-26s %s\n", name.c_str(), duellab::preset_description(name).c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"duellab: contextual dueling bandit experiments"};
  app.require_subcommand(1);

  std::string config, out_dir, input;
  std::vector<std::string> overrides;
  bool print = false;

  auto* run = app.add_subcommand("run", "run an experiment sweep");
  run->add_option("-c,--config", config, "config file")->required();
  run->add_option("-o,--output", out_dir, "output directory (default: runner.output_dir, $DUELLAB_OUTPUT_DIR, results)");
  run->add_option("--set", overrides, "override, dotted.path=value")->take_all();

  auto* plot = app.add_subcommand("plot", "render SVG charts from summary.csv");
  plot->add_option("-i,--input", input, "summary.csv")->required();
  plot->add_option("-o,--output", out_dir, "output directory")->required();

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("-c,--config", config, "config file")->required();
  validate->add_option("--set", overrides, "override, dotted.path=value")->take_all();
  validate->add_flag("--print", print, "print the fully expanded config");

  app.add_subcommand("presets", "list agent presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(config, overrides, out_dir);
    if (*plot) return cmd_plot(input, out_dir);
    if (*validate) return cmd_validate(config, overrides, print);
    return cmd_presets();
  } catch (const duellab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const duellab::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kConfigError;
  } catch (const duellab::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeAbort;
  }
}
