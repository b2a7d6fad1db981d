#include "duellab/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "duellab/error.hpp"

namespace duellab {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

template <class T>
T scalar(const YAML::Node& n, const std::string& path, const char* type) {
  if (!n.IsScalar()) fail(path, std::string("expected ") + type);
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(path, std::string("expected ") + type + ", got '" + n.Scalar() + "'");
  }
}

double get_double(const YAML::Node& n, const std::string& path) {
  const double v = scalar<double>(n, path, "a number");
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

int get_int(const YAML::Node& n, const std::string& path) {
  const long long v = scalar<long long>(n, path, "an integer");
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(path, "out of range");
  return static_cast<int>(v);
}

bool get_bool(const YAML::Node& n, const std::string& path) { return scalar<bool>(n, path, "true or false"); }

std::string get_string(const YAML::Node& n, const std::string& path) {
  return scalar<std::string>(n, path, "a string");
}

template <class F>
auto wrap(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
}

void require(bool ok, const std::string& path, const char* what) {
  if (!ok) fail(path, what);
}

// Agent keys ------------------------------------------------------------

using AgentSetter = std::function<void(AgentConfig&, const YAML::Node&, const std::string&)>;
using AgentGetter = std::function<void(const AgentConfig&, YAML::Emitter&)>;

struct AgentKey {
  const char* name;
  AgentSetter set;
  AgentGetter get;
};

const std::vector<AgentKey>& agent_keys() {
  static const std::vector<AgentKey> keys = {
      {"features",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.feature_mode = wrap(p, [&] { return parse_feature_mode(get_string(n, p)); });
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << std::string(feature_mode_name(c.feature_mode)); }},
      {"variance",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.variance_mode = wrap(p, [&] { return parse_variance_mode(get_string(n, p)); });
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << std::string(variance_mode_name(c.variance_mode)); }},
      {"gram",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.gram_mode = wrap(p, [&] { return parse_gram_mode(get_string(n, p)); });
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << std::string(gram_mode_name(c.gram_mode)); }},
      {"strategy",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.selection.strategy = wrap(p, [&] { return parse_strategy(get_string(n, p)); });
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << std::string(strategy_name(c.selection.strategy)); }},
      {"lambda",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.lambda = get_double(n, p);
         require(c.lambda > 0.0, p, "must be > 0");
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << c.lambda; }},
      {"nu",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.selection.nu = get_double(n, p);
         require(c.selection.nu >= 0.0, p, "must be >= 0");
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << c.selection.nu; }},
      {"epsilon",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.epsilon = get_double(n, p);
         require(c.epsilon >= 0.0, p, "must be >= 0 (0 selects the default)");
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << c.epsilon; }},
      {"ts_jitter",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.selection.ts_jitter = get_double(n, p);
         require(c.selection.ts_jitter >= 0.0, p, "must be >= 0");
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << c.selection.ts_jitter; }},
      {"optimizer",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         const std::string s = get_string(n, p);
         if (s == "adam") c.train.optimizer = Optimizer::Adam;
         else if (s == "gd") c.train.optimizer = Optimizer::PlainGd;
         else fail(p, "expected 'adam' or 'gd', got '" + s + "'");
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << (c.train.optimizer == Optimizer::Adam ? "adam" : "gd"); }},
      {"lr",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.train.gamma = get_double(n, p);
         require(c.train.gamma > 0.0, p, "must be > 0");
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << c.train.gamma; }},
      {"steps",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.train.n_steps = get_int(n, p);
         require(c.train.n_steps >= 0, p, "must be >= 0");
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << c.train.n_steps; }},
      {"episode_len",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.train.episode_len = get_int(n, p);
         require(c.train.episode_len >= 1, p, "must be >= 1");
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << c.train.episode_len; }},
      {"refit",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) { c.train.refit_theta = get_bool(n, p); },
       [](const AgentConfig& c, YAML::Emitter& e) { e << c.train.refit_theta; }},
      {"refit_tol",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.train.refit_tol = get_double(n, p);
         require(c.train.refit_tol > 0.0, p, "must be > 0");
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << c.train.refit_tol; }},
      {"refit_max_iters",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.train.refit_max_iters = get_int(n, p);
         require(c.train.refit_max_iters >= 1, p, "must be >= 1");
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << c.train.refit_max_iters; }},
      {"width",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.width = get_int(n, p);
         require(c.width >= 2 && c.width % 2 == 0, p, "must be an even integer >= 2");
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << c.width; }},
      {"hidden_layers",
       [](AgentConfig& c, const YAML::Node& n, const std::string& p) {
         c.hidden_layers = get_int(n, p);
         require(c.hidden_layers >= 1, p, "must be >= 1");
       },
       [](const AgentConfig& c, YAML::Emitter& e) { e << c.hidden_layers; }},
  };
  return keys;
}

const AgentKey* find_agent_key(const std::string& k) {
  for (const auto& key : agent_keys())
    if (k == key.name) return &key;
  return nullptr;
}

void check_map(const YAML::Node& n, const std::string& path) {
  if (!n.IsMap()) fail(path, "expected a mapping");
}

void apply_agent_keys(AgentConfig& cfg, const YAML::Node& node, const std::string& path, bool allow_ident) {
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    const std::string p = path + "." + key;
    if (allow_ident && (key == "preset" || key == "name")) continue;
    const AgentKey* k = find_agent_key(key);
    if (!k) fail(p, "unknown key");
    k->set(cfg, kv.second, p);
  }
}

// Sections --------------------------------------------------------------

void read_runner(ExperimentConfig& cfg, const YAML::Node& node) {
  const std::string base = "runner";
  check_map(node, base);
  bool have_seeds = false, have_count = false;
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    const std::string p = base + "." + key;
    const YAML::Node& v = kv.second;
    if (key == "rounds") {
      cfg.rounds = get_int(v, p);
      require(cfg.rounds >= 1, p, "must be >= 1");
    } else if (key == "seeds") {
      if (!v.IsSequence()) fail(p, "expected a list of integers");
      cfg.seeds.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        cfg.seeds.push_back(scalar<std::uint64_t>(v[i], p + "." + std::to_string(i), "a non-negative integer"));
      }
      require(!cfg.seeds.empty(), p, "must not be empty");
      have_seeds = true;
    } else if (key == "seed_count") {
      const int n = get_int(v, p);
      require(n >= 1, p, "must be >= 1");
      cfg.seeds = default_seeds(n);
      have_count = true;
    } else if (key == "parallelism") {
      cfg.parallelism = get_int(v, p);
      require(cfg.parallelism >= 1, p, "must be >= 1");
    } else if (key == "output_dir") {
      cfg.output_dir = get_string(v, p);
    } else if (key == "timing") {
      cfg.timing = get_bool(v, p);
    } else if (key == "svg") {
      cfg.svg = get_bool(v, p);
    } else {
      fail(p, "unknown key");
    }
  }
  if (have_seeds && have_count) fail(base + ".seed_count", "give either seeds or seed_count, not both");
}

EnvSpec read_env(const YAML::Node& node, const std::string& base) {
  EnvSpec e;
  check_map(node, base);
  bool named = false;
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    const std::string p = base + "." + key;
    const YAML::Node& v = kv.second;
    if (key == "name") {
      e.name = get_string(v, p);
      require(!e.name.empty(), p, "must not be empty");
      require(e.name.find_first_of(",\n\"") == std::string::npos, p, "must not contain commas, quotes or newlines");
      named = true;
    } else if (key == "kind") {
      e.kind = get_string(v, p);
      if (e.kind != "tabular") wrap(p, [&] { return parse_synthetic_kind(e.kind); });
    } else if (key == "dim") {
      e.dim = get_int(v, p);
      require(e.dim >= 1, p, "must be >= 1");
    } else if (key == "arms") {
      e.arms = get_int(v, p);
      require(e.arms >= 1, p, "must be >= 1");
    } else if (key == "symmetrize") {
      e.symmetrize = get_bool(v, p);
    } else if (key == "path") {
      e.path = get_string(v, p);
    } else if (key == "label") {
      const std::string s = get_string(v, p);
      try {
        std::size_t used = 0;
        const int idx = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        e.schema.label_column = idx;
        e.schema.label_name.clear();
      } catch (const std::logic_error&) {
        e.schema.label_name = s;
      }
    } else if (key == "delimiter") {
      const std::string s = get_string(v, p);
      require(s.size() == 1, p, "must be a single character");
      e.schema.delimiter = s[0];
    } else if (key == "header") {
      e.schema.has_header = get_bool(v, p);
    } else if (key == "preference") {
      const std::string s = get_string(v, p);
      if (s == "margin") e.preference = PreferenceMode::Margin;
      else if (s == "deterministic") e.preference = PreferenceMode::Deterministic;
      else fail(p, "expected 'margin' or 'deterministic', got '" + s + "'");
    } else if (key == "margin") {
      e.margin = get_double(v, p);
      require(e.margin > 0.5 && e.margin < 1.0, p, "must lie in (0.5, 1)");
    } else {
      fail(p, "unknown key");
    }
  }
  if (!named) e.name = e.kind;
  if (e.is_tabular() && e.path.empty()) fail(base + ".path", "required for tabular envs");
  if (!e.schema.label_name.empty() && !e.schema.has_header) {
    fail(base + ".label", "a label column name needs header: true");
  }
  return e;
}

AgentSpec read_agent(const YAML::Node& node, const std::string& base, const YAML::Node& global) {
  AgentSpec a;
  if (node.IsScalar()) {
    a.preset = node.as<std::string>();
    a.name = a.preset;
  } else {
    check_map(node, base);
    if (!node["preset"]) fail(base + ".preset", "required");
    a.preset = get_string(node["preset"], base + ".preset");
    a.name = node["name"] ? get_string(node["name"], base + ".name") : a.preset;
  }
  const std::string preset_path = node.IsScalar() ? base : base + ".preset";
  a.config = wrap(preset_path, [&] { return preset_config(a.preset); });
  if (global) apply_agent_keys(a.config, global, "agent", false);
  if (node.IsMap()) apply_agent_keys(a.config, node, base, true);
  require(!a.name.empty(), base + ".name", "must not be empty");
  require(a.name.find_first_of(",\n\"") == std::string::npos, base + ".name",
          "must not contain commas, quotes or newlines");
  wrap(base, [&] {
    a.config.validate();
    return 0;
  });
  return a;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::stringstream ss(path);
  std::string tok;
  while (std::getline(ss, tok, '.')) out.push_back(tok);
  return out;
}

bool is_index(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

void set_path(YAML::Node node, const std::vector<std::string>& toks, std::size_t i, const YAML::Node& value,
              const std::string& full) {
  const std::string& tok = toks[i];
  const bool last = i + 1 == toks.size();
  if (node.IsSequence()) {
    if (!is_index(tok)) fail(full, "'" + tok + "' is not a list index");
    const std::size_t idx = std::stoul(tok);
    if (idx >= node.size()) fail(full, "list index " + tok + " out of range");
    if (last) {
      node[idx] = value;
      return;
    }
    set_path(node[idx], toks, i + 1, value, full);
    return;
  }
  if (node.IsScalar()) fail(full, "cannot descend into scalar at '" + tok + "'");
  if (last) {
    node[tok] = value;
    return;
  }
  YAML::Node child = node[tok];
  if (!child.IsDefined() || child.IsNull()) {
    node[tok] = YAML::Node(YAML::NodeType::Map);
    child = node[tok];
  }
  set_path(child, toks, i + 1, value, full);
}

void apply_override(YAML::Node& root, const std::string& ov) {
  const auto eq = ov.find('=');
  if (eq == std::string::npos || eq == 0) fail("override '" + ov + "'", "expected key=value");
  const std::string key = ov.substr(0, eq);
  const std::string val = ov.substr(eq + 1);
  const auto toks = split_path(key);
  for (const auto& t : toks)
    if (t.empty()) fail(key, "empty path component");
  YAML::Node value;
  try {
    value = YAML::Load(val);
  } catch (const YAML::Exception& e) {
    fail(key, std::string("cannot parse value: ") + e.what());
  }
  if (!value.IsDefined() || value.IsNull()) value = YAML::Node(val);
  set_path(root, toks, 0, value, key);
}

ExperimentConfig interpret(const YAML::Node& root) {
  if (!root.IsMap()) fail("<root>", "expected a mapping with runner/envs/agent/agents sections");
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (key != "runner" && key != "envs" && key != "agent" && key != "agents") fail(key, "unknown section");
  }
  ExperimentConfig cfg;
  cfg.seeds = default_seeds();
  if (root["runner"]) read_runner(cfg, root["runner"]);

  const YAML::Node envs = root["envs"];
  if (!envs || !envs.IsSequence() || envs.size() == 0) fail("envs", "expected a non-empty list");
  for (std::size_t i = 0; i < envs.size(); ++i) cfg.envs.push_back(read_env(envs[i], "envs." + std::to_string(i)));

  const YAML::Node global = root["agent"];
  if (global) check_map(global, "agent");
  const YAML::Node agents = root["agents"];
  if (!agents || !agents.IsSequence() || agents.size() == 0) fail("agents", "expected a non-empty list");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    cfg.agents.push_back(read_agent(agents[i], "agents." + std::to_string(i), global));
  }
  cfg.validate();
  return cfg;
}

}  // namespace

std::vector<std::uint64_t> default_seeds(int n) {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < n; ++i) s.push_back(static_cast<std::uint64_t>(i));
  return s;
}

ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides,
                                   const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (!root.IsDefined() || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  for (const auto& ov : overrides) apply_override(root, ov);
  return interpret(root);
}

ExperimentConfig parse_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), overrides, path);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "runner" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "rounds" << YAML::Value << cfg.rounds;
  e << YAML::Key << "seeds" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto s : cfg.seeds) e << s;
  e << YAML::EndSeq;
  e << YAML::Key << "parallelism" << YAML::Value << cfg.parallelism;
  e << YAML::Key << "output_dir" << YAML::Value << YAML::DoubleQuoted << cfg.output_dir;
  e << YAML::Key << "timing" << YAML::Value << cfg.timing;
  e << YAML::Key << "svg" << YAML::Value << cfg.svg;
  e << YAML::EndMap;

  e << YAML::Key << "envs" << YAML::Value << YAML::BeginSeq;
  for (const auto& env : cfg.envs) {
    e << YAML::BeginMap;
    e << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << env.name;
    e << YAML::Key << "kind" << YAML::Value << env.kind;
    if (env.is_tabular()) {
      e << YAML::Key << "path" << YAML::Value << YAML::DoubleQuoted << env.path;
      if (env.schema.label_name.empty()) {
        e << YAML::Key << "label" << YAML::Value << env.schema.label_column;
      } else {
        e << YAML::Key << "label" << YAML::Value << YAML::DoubleQuoted << env.schema.label_name;
      }
      e << YAML::Key << "delimiter" << YAML::Value << YAML::DoubleQuoted << std::string(1, env.schema.delimiter);
      e << YAML::Key << "header" << YAML::Value << env.schema.has_header;
      e << YAML::Key << "preference" << YAML::Value
        << (env.preference == PreferenceMode::Margin ? "margin" : "deterministic");
      e << YAML::Key << "margin" << YAML::Value << env.margin;
    } else {
      e << YAML::Key << "dim" << YAML::Value << env.dim;
      e << YAML::Key << "arms" << YAML::Value << env.arms;
    }
    e << YAML::Key << "symmetrize" << YAML::Value << env.symmetrize;
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;

  e << YAML::Key << "agents" << YAML::Value << YAML::BeginSeq;
  for (const auto& a : cfg.agents) {
    e << YAML::BeginMap;
    e << YAML::Key << "preset" << YAML::Value << a.preset;
    e << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << a.name;
    for (const auto& key : agent_keys()) {
      e << YAML::Key << key.name << YAML::Value;
      key.get(a.config, e);
    }
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace duellab
