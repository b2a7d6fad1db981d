#include "duellab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "duellab/error.hpp"

namespace duellab {

bool EnvSpec::operator==(const EnvSpec& o) const {
  return name == o.name && kind == o.kind && dim == o.dim && arms == o.arms && symmetrize == o.symmetrize &&
         path == o.path && schema.label_column == o.schema.label_column && schema.label_name == o.schema.label_name &&
         schema.delimiter == o.schema.delimiter && schema.has_header == o.schema.has_header &&
         preference == o.preference && margin == o.margin;
}

void EnvSpec::validate() const {
  if (name.empty()) throw ConfigError("env: name must not be empty");
  if (is_tabular()) {
    if (path.empty()) throw ConfigError("env " + name + ": tabular env needs a path");
    if (preference == PreferenceMode::Margin && !(margin > 0.5 && margin < 1.0)) {
      throw ConfigError("env " + name + ": margin must lie in (0.5, 1)");
    }
    return;
  }
  parse_synthetic_kind(kind);
  if (dim < 1) throw ConfigError("env " + name + ": dim must be >= 1");
  if (arms < 1) throw ConfigError("env " + name + ": arms must be >= 1");
}

void ExperimentConfig::validate() const {
  if (envs.empty()) throw ConfigError("envs: at least one environment is required");
  if (agents.empty()) throw ConfigError("agents: at least one agent is required");
  if (rounds < 1) throw ConfigError("runner.rounds: must be >= 1");
  if (seeds.empty()) throw ConfigError("runner.seeds: at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("runner.seeds: seeds must be distinct");
  }
  if (parallelism < 1) throw ConfigError("runner.parallelism: must be >= 1");
  std::set<std::string> names;
  for (const auto& e : envs) {
    e.validate();
    if (!names.insert(e.name).second) throw ConfigError("envs: duplicate env name '" + e.name + "'");
  }
  names.clear();
  for (const auto& a : agents) {
    a.config.validate();
    if (!names.insert(a.name).second) throw ConfigError("agents: duplicate agent name '" + a.name + "'");
  }
}

std::unique_ptr<Environment> make_environment(const EnvSpec& spec, std::uint64_t seed,
                                              std::shared_ptr<const TabularData> data) {
  spec.validate();
  if (spec.is_tabular()) {
    if (!data) data = std::make_shared<const TabularData>(load_tabular(spec.path, spec.schema));
    return std::make_unique<TabularEnv>(std::move(data), spec.preference, spec.margin, spec.symmetrize, spec.name);
  }
  Rng theta_rng = derive_stream(seed, spec.name, "", "theta");
  return std::make_unique<SyntheticEnv>(parse_synthetic_kind(spec.kind), spec.dim, spec.arms, spec.symmetrize,
                                        theta_rng, spec.name);
}

RunResult run_single(const EnvSpec& env_spec, const AgentSpec& agent_spec, std::uint64_t seed, int rounds,
                     const RunOptions& opts, std::shared_ptr<const TabularData> data) {
  if (rounds < 1) throw ConfigError("run_single: rounds must be >= 1");
  const auto env = make_environment(env_spec, seed, std::move(data));
  return run_on(*env, agent_spec, seed, rounds, opts);
}

RunResult run_on(const Environment& env, const AgentSpec& agent_spec, std::uint64_t seed, int rounds,
                 const RunOptions& opts) {
  if (rounds < 1) throw ConfigError("run: rounds must be >= 1");
  const std::string env_name(env.name());
  RunResult res;
  res.env = env_name;
  res.agent = agent_spec.name;
  res.seed = seed;

  // Environment-side streams and the network init are shared by every agent
  // for a given (seed, env); selection, duel and training streams are per agent.
  Rng context_rng = derive_stream(seed, env_name, "", "contexts");
  Rng init_rng = derive_stream(seed, env_name, "", "init");
  Rng select_rng = derive_stream(seed, env_name, agent_spec.name, "select");
  Rng duel_rng = derive_stream(seed, env_name, agent_spec.name, "duel");
  Rng train_rng = derive_stream(seed, env_name, agent_spec.name, "train");

  Agent agent(agent_spec.config, env.context_dim(), init_rng);
  const bool oracle = agent_spec.config.variance_mode == VarianceMode::Oracle;
  using clock = std::chrono::steady_clock;
  for (int t = 1; t <= rounds; ++t) {
    const auto start = clock::now();
    try {
      auto [contexts, truth] = env.sample_contexts(t, context_rng);
      const ArmPair pair = agent.select(contexts, select_rng);
      const int outcome = env.duel(truth, pair.first, pair.second, duel_rng);
      std::optional<double> var;
      if (oracle) var = env.outcome_variance(truth, pair.first, pair.second);
      agent.observe(outcome, train_rng, var);
      const double ms =
          opts.timing ? std::chrono::duration<double, std::milli>(clock::now() - start).count() : 0.0;
      const double u1 = truth.utilities[static_cast<std::size_t>(pair.first)];
      const double u2 = truth.utilities[static_cast<std::size_t>(pair.second)];
      res.trace.push(average_regret(truth.best_utility, u1, u2), weak_regret(truth.best_utility, u1, u2), ms);
    } catch (const NumericalFailure& e) {
      res.aborted = true;
      res.abort_round = t;
      res.abort_reason = e.what();
      break;
    }
  }
  res.refit_failures = agent.refit_failures();
  for (double ms : res.trace.elapsed_ms) res.total_ms += ms;
  return res;
}

std::vector<RunResult> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::shared_ptr<const TabularData>> data(cfg.envs.size());
  for (std::size_t e = 0; e < cfg.envs.size(); ++e) {
    if (cfg.envs[e].is_tabular()) {
      data[e] = std::make_shared<const TabularData>(load_tabular(cfg.envs[e].path, cfg.envs[e].schema));
    }
  }
  struct Cell {
    std::size_t env, agent, seed;
  };
  std::vector<Cell> cells;
  for (std::size_t e = 0; e < cfg.envs.size(); ++e)
    for (std::size_t a = 0; a < cfg.agents.size(); ++a)
      for (std::size_t s = 0; s < cfg.seeds.size(); ++s) cells.push_back({e, a, s});

  std::vector<RunResult> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  const RunOptions opts{cfg.timing};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
      const Cell& c = cells[i];
      try {
        results[i] = run_single(cfg.envs[c.env], cfg.agents[c.agent], cfg.seeds[c.seed], cfg.rounds, opts, data[c.env]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.parallelism), cells.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

Summary aggregate(const std::vector<RunResult>& results) {
  Summary out;
  std::map<std::pair<std::string, std::string>, std::vector<const RunResult*>> groups;
  std::size_t rounds = 0;
  bool have_rounds = false;
  for (const auto& r : results) {
    if (r.aborted) {
      out.excluded.push_back(r.env + "/" + r.agent + "/" + std::to_string(r.seed));
      continue;
    }
    if (!have_rounds) {
      rounds = r.trace.size();
      have_rounds = true;
    } else if (r.trace.size() != rounds) {
      throw InvalidInput("aggregate: runs have different lengths (" + std::to_string(rounds) + " vs " +
                         std::to_string(r.trace.size()) + ")");
    }
    groups[{r.env, r.agent}].push_back(&r);
  }
  std::sort(out.excluded.begin(), out.excluded.end());
  for (auto& [key, runs] : groups) {
    // Fixed summation order makes the summary independent of result order.
    std::sort(runs.begin(), runs.end(), [](const RunResult* a, const RunResult* b) { return a->seed < b->seed; });
    SummaryCurve c;
    c.env = key.first;
    c.agent = key.second;
    c.runs = static_cast<int>(runs.size());
    c.mean_cum_avg.resize(rounds);
    c.std_cum_avg.resize(rounds);
    const double n = static_cast<double>(runs.size());
    for (std::size_t t = 0; t < rounds; ++t) {
      double sum = 0.0;
      for (const auto* r : runs) sum += r->trace.cum_avg[t];
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto* r : runs) ss += (r->trace.cum_avg[t] - mean) * (r->trace.cum_avg[t] - mean);
      c.mean_cum_avg[t] = mean;
      c.std_cum_avg[t] = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    out.curves.push_back(std::move(c));
  }
  return out;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  out << content;
  if (!out) throw IoError("write failed for '" + p.string() + "'");
}

std::vector<std::string> csv_cells(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_num(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": not a number '" + s + "'");
  }
}

}  // namespace

std::string svg_file_name(const std::string& env) {
  std::string safe;
  for (char c : env) safe.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  return "regret_" + safe + ".svg";
}

std::vector<std::filesystem::path> write_outputs(const std::vector<RunResult>& results, const Summary& summary,
                                                 const std::filesystem::path& dir, const OutputOptions& opts) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;

  std::string runs = "env,agent,seed,round,r_avg,r_weak,cum_avg,cum_weak,elapsed_ms\n";
  for (const auto& r : results) {
    const std::string prefix = r.env + "," + r.agent + "," + std::to_string(r.seed) + ",";
    for (std::size_t t = 0; t < r.trace.size(); ++t) {
      runs += prefix + std::to_string(t + 1) + "," + fmt17(r.trace.r_avg[t]) + "," + fmt17(r.trace.r_weak[t]) + "," +
              fmt17(r.trace.cum_avg[t]) + "," + fmt17(r.trace.cum_weak[t]) + "," + fmt17(r.trace.elapsed_ms[t]) + "\n";
    }
  }
  written.push_back(dir / "runs.csv");
  write_file(written.back(), runs);

  std::string sum = "env,agent,round,mean_cum_avg,std_cum_avg\n";
  for (const auto& c : summary.curves) {
    for (std::size_t t = 0; t < c.mean_cum_avg.size(); ++t) {
      sum += c.env + "," + c.agent + "," + std::to_string(t + 1) + "," + fmt17(c.mean_cum_avg[t]) + "," +
             fmt17(c.std_cum_avg[t]) + "\n";
    }
  }
  written.push_back(dir / "summary.csv");
  write_file(written.back(), sum);

  std::string timing = "env,agent,seed,rounds,total_ms,aborted,abort_round\n";
  for (const auto& r : results) {
    timing += r.env + "," + r.agent + "," + std::to_string(r.seed) + "," + std::to_string(r.trace.size()) + "," +
              fmt17(r.total_ms) + "," + (r.aborted ? "1" : "0") + "," + std::to_string(r.abort_round) + "\n";
  }
  written.push_back(dir / "timing.csv");
  write_file(written.back(), timing);

  if (opts.svg) {
    std::vector<SummaryRow> rows;
    for (const auto& c : summary.curves) {
      for (std::size_t t = 0; t < c.mean_cum_avg.size(); ++t) {
        rows.push_back({c.env, c.agent, static_cast<int>(t + 1), c.mean_cum_avg[t], c.std_cum_avg[t]});
      }
    }
    for (const auto& [env, svg] : render_summary_svgs(rows)) {
      written.push_back(dir / svg_file_name(env));
      write_file(written.back(), svg);
    }
  }
  return written;
}

std::vector<RunResult> read_runs_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "env,agent,seed,round,r_avg,r_weak,cum_avg,cum_weak,elapsed_ms") {
    throw ParseError(path.string() + ": unexpected header");
  }
  std::vector<RunResult> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = csv_cells(line);
    const std::string where = path.string() + ": row " + std::to_string(row);
    if (cells.size() != 9) throw ParseError(where + ": expected 9 columns");
    const auto seed = static_cast<std::uint64_t>(std::stoull(cells[2]));
    if (out.empty() || out.back().env != cells[0] || out.back().agent != cells[1] || out.back().seed != seed) {
      RunResult r;
      r.env = cells[0];
      r.agent = cells[1];
      r.seed = seed;
      out.push_back(std::move(r));
    }
    auto& tr = out.back().trace;
    tr.r_avg.push_back(parse_num(cells[4], where));
    tr.r_weak.push_back(parse_num(cells[5], where));
    tr.cum_avg.push_back(parse_num(cells[6], where));
    tr.cum_weak.push_back(parse_num(cells[7], where));
    tr.elapsed_ms.push_back(parse_num(cells[8], where));
  }
  for (auto& r : out)
    for (double ms : r.trace.elapsed_ms) r.total_ms += ms;
  return out;
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  if (line != "env,agent,round,mean_cum_avg,std_cum_avg") throw ParseError(path.string() + ": row 1: unexpected header");
  std::vector<SummaryRow> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = csv_cells(line);
    const std::string where = path.string() + ": row " + std::to_string(row);
    if (cells.size() != 5) throw ParseError(where + ": expected 5 columns");
    SummaryRow r;
    r.env = cells[0];
    r.agent = cells[1];
    r.round = static_cast<int>(parse_num(cells[2], where));
    r.mean = parse_num(cells[3], where);
    r.std = parse_num(cells[4], where);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace duellab
