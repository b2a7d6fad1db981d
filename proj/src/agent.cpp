#include "duellab/agent.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "duellab/error.hpp"

namespace duellab {

std::string_view feature_mode_name(FeatureMode m) noexcept {
  switch (m) {
    case FeatureMode::Neural:
      return "neural";
    case FeatureMode::Identity:
      return "identity";
    case FeatureMode::FullGradient:
      return "full_gradient";
  }
  return "?";
}

std::string_view variance_mode_name(VarianceMode m) noexcept {
  switch (m) {
    case VarianceMode::Aware:
      return "aware";
    case VarianceMode::Agnostic:
      return "agnostic";
    case VarianceMode::Oracle:
      return "oracle";
  }
  return "?";
}

std::string_view gram_mode_name(GramMode m) noexcept { return m == GramMode::Frozen ? "frozen" : "refresh"; }

FeatureMode parse_feature_mode(std::string_view s) {
  for (auto m : {FeatureMode::Neural, FeatureMode::Identity, FeatureMode::FullGradient})
    if (s == feature_mode_name(m)) return m;
  throw ConfigError("unknown feature mode '" + std::string(s) + "'");
}

VarianceMode parse_variance_mode(std::string_view s) {
  for (auto m : {VarianceMode::Aware, VarianceMode::Agnostic, VarianceMode::Oracle})
    if (s == variance_mode_name(m)) return m;
  throw ConfigError("unknown variance mode '" + std::string(s) + "'");
}

GramMode parse_gram_mode(std::string_view s) {
  for (auto m : {GramMode::Frozen, GramMode::Refresh})
    if (s == gram_mode_name(m)) return m;
  throw ConfigError("unknown gram mode '" + std::string(s) + "'");
}

void AgentConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("agent: lambda must be > 0");
  if (!std::isfinite(epsilon)) throw ConfigError("agent: epsilon must be finite");
  selection.validate();
  train.validate();
  if (feature_mode != FeatureMode::Identity) {
    NetworkShape{2, width, hidden_layers}.validate();
  }
}

int network_dim(int context_dim) noexcept { return context_dim % 2 == 0 ? context_dim : context_dim + 1; }

Agent::Agent(const AgentConfig& cfg, int context_dim, Rng& init_rng) : cfg_(cfg), context_dim_(context_dim) {
  cfg_.validate();
  if (context_dim < 1) throw ShapeError("agent: context dimension must be >= 1");
  if (cfg_.feature_mode == FeatureMode::Identity) {
    dim_ = context_dim;
    params_ = identity_params(static_cast<std::size_t>(dim_));
  } else {
    dim_ = network_dim(context_dim);
    params_ = init_network({dim_, cfg_.width, cfg_.hidden_layers}, init_rng);
  }
  epsilon_ = cfg_.epsilon > 0.0 ? cfg_.epsilon : 1.0 / (2.0 * std::sqrt(static_cast<double>(dim_)));
  const std::size_t gram_dim =
      cfg_.feature_mode == FeatureMode::FullGradient ? params_.parameter_count() : static_cast<std::size_t>(dim_);
  gram_ = init_gram(gram_dim, cfg_.lambda);
}

Vector Agent::network_input(std::span<const double> context) const {
  if (static_cast<int>(context.size()) != context_dim_) {
    throw ShapeError("agent: context has dimension " + std::to_string(context.size()) + ", expected " +
                     std::to_string(context_dim_));
  }
  Vector x(context.begin(), context.end());
  x.resize(static_cast<std::size_t>(dim_), 0.0);
  return x;
}

Vector Agent::features(std::span<const double> x) const {
  switch (cfg_.feature_mode) {
    case FeatureMode::Identity:
      return Vector(x.begin(), x.end());
    case FeatureMode::Neural:
      return feature_map(params_.layers, x);
    case FeatureMode::FullGradient:
      return parameter_gradient(params_, x);
  }
  throw ConfigError("agent: unknown feature mode");
}

ArmScores Agent::score(const ContextSet& contexts) const {
  const std::size_t k = contexts.arms();
  ArmScores s;
  s.utilities.resize(k);
  s.features.resize(k, gram_.dim);
  for (std::size_t a = 0; a < k; ++a) {
    const Vector x = network_input(contexts.arm(a));
    const Vector phi = features(x);
    std::copy(phi.begin(), phi.end(), s.features.row(a).begin());
    s.utilities[a] = predict(params_, x);
  }
  return s;
}

ArmPair Agent::select(const ContextSet& contexts, Rng& rng) {
  if (pending_) throw ProtocolError("agent: select called while a duel is pending");
  const ArmScores s = score(contexts);
  const ArmPair pair = select_arms(cfg_.selection, s, gram_, rng, round_);
  PendingDuel p;
  p.round = round_;
  p.first = pair.first;
  p.second = pair.second;
  p.x_first = network_input(contexts.arm(static_cast<std::size_t>(pair.first)));
  p.x_second = network_input(contexts.arm(static_cast<std::size_t>(pair.second)));
  p.dphi.resize(gram_.dim);
  const auto f1 = s.features.row(static_cast<std::size_t>(pair.first));
  const auto f2 = s.features.row(static_cast<std::size_t>(pair.second));
  for (std::size_t r = 0; r < gram_.dim; ++r) p.dphi[r] = f1[r] - f2[r];
  p.delta_f = s.utilities[static_cast<std::size_t>(pair.first)] - s.utilities[static_cast<std::size_t>(pair.second)];
  pending_ = std::move(p);
  return pair;
}

ZetaEstimate Agent::estimate_zeta(std::optional<double> oracle_variance) const {
  if (!pending_) throw ProtocolError("agent: no pending duel");
  const double g = sigmoid(pending_->delta_f);
  ZetaEstimate z;
  z.sigma_sq = g * (1.0 - g);
  switch (cfg_.variance_mode) {
    case VarianceMode::Aware:
      z.zeta = std::max(std::sqrt(z.sigma_sq), epsilon_);
      break;
    case VarianceMode::Agnostic:
      z.zeta = 1.0;
      break;
    case VarianceMode::Oracle:
      if (!oracle_variance) throw ConfigError("agent: oracle variance mode needs the true variance");
      z.sigma_sq = *oracle_variance;
      z.zeta = std::max(std::sqrt(std::max(0.0, *oracle_variance)), epsilon_);
      break;
  }
  return z;
}

void Agent::observe(int outcome, Rng& rng, std::optional<double> oracle_variance) {
  if (!pending_) throw ProtocolError("agent: observe called without a pending duel");
  if (outcome != 0 && outcome != 1) throw InvalidInput("agent: outcome must be 0 or 1");
  const ZetaEstimate z = estimate_zeta(oracle_variance);

  DuelRecord rec;
  rec.round = pending_->round;
  rec.idx_first = pending_->first;
  rec.idx_second = pending_->second;
  rec.x_first = std::move(pending_->x_first);
  rec.x_second = std::move(pending_->x_second);
  rec.dphi = std::move(pending_->dphi);
  rec.zeta = z.zeta;
  rec.outcome = outcome;
  pending_.reset();
  history_.push_back(std::move(rec));

  if (cfg_.gram_mode == GramMode::Frozen) rank_one_update(gram_, history_.back().dphi, z.zeta);

  if (round_ % cfg_.train.episode_len == 0) {
    TrainReport report;
    params_ = train_episode(params_, history_, cfg_.lambda, cfg_.train, rng, &report);
    if (!report.refit_converged) ++refit_failures_;
  }
  if (cfg_.gram_mode == GramMode::Refresh) rebuild_gram();
  ++round_;
}

void Agent::rebuild_gram() {
  std::vector<Vector> diffs;
  diffs.reserve(history_.size());
  std::vector<GramTerm> terms;
  terms.reserve(history_.size());
  for (const auto& rec : history_) {
    Vector a = features(rec.x_first);
    const Vector b = features(rec.x_second);
    for (std::size_t r = 0; r < a.size(); ++r) a[r] -= b[r];
    diffs.push_back(std::move(a));
  }
  for (std::size_t i = 0; i < history_.size(); ++i) terms.push_back({diffs[i], history_[i].zeta});
  gram_ = rebuild(gram_, terms);
}

namespace {

struct PresetEntry {
  AgentConfig config;
  std::string description;
};

std::map<std::string, PresetEntry, std::less<>> build_presets() {
  std::map<std::string, PresetEntry, std::less<>> out;
  const std::pair<const char*, Strategy> strategies[] = {
      {"ucb-asym", Strategy::UcbAsym}, {"ucb-osym", Strategy::UcbOsym}, {"ucb-csym", Strategy::UcbCsym},
      {"ts-asym", Strategy::TsAsym},   {"ts-osym", Strategy::TsOsym},   {"ts-csym", Strategy::TsCsym},
  };
  for (const auto& [suffix, strat] : strategies) {
    AgentConfig aware;
    aware.selection.strategy = strat;
    out[std::string("nvldb-") + suffix] = {aware, "neural, variance-aware, last-layer Gram, " + std::string(suffix)};
    AgentConfig agnostic = aware;
    agnostic.variance_mode = VarianceMode::Agnostic;
    out[std::string("nldb-") + suffix] = {agnostic,
                                          "neural, variance-agnostic, last-layer Gram, " + std::string(suffix)};
  }

  AgentConfig faithful;
  faithful.train.optimizer = Optimizer::PlainGd;
  faithful.train.refit_theta = true;
  out["nvldb-ucb-asym-faithful"] = {faithful, "nvldb-ucb-asym with plain gradient steps and exact theta refit"};

  AgentConfig linear;
  linear.feature_mode = FeatureMode::Identity;
  linear.variance_mode = VarianceMode::Agnostic;
  linear.selection.strategy = Strategy::UcbAsym;
  linear.train.n_steps = 0;
  linear.train.refit_theta = true;
  out["linear-ucb-asym"] = {linear, "identity features, variance-agnostic, ucb-asym (CoLSTIM-like)"};

  AgentConfig linear_csym = linear;
  linear_csym.variance_mode = VarianceMode::Aware;
  linear_csym.selection.strategy = Strategy::UcbCsym;
  out["linear-ucb-csym-aware"] = {linear_csym, "identity features, variance-aware, ucb-csym (VALDB-like)"};

  AgentConfig full;
  full.feature_mode = FeatureMode::FullGradient;
  full.variance_mode = VarianceMode::Agnostic;
  out["ndb-full-gradient"] = {full, "full-parameter gradient Gram, variance-agnostic, ucb-asym (NDB-like)"};
  return out;
}

const std::map<std::string, PresetEntry, std::less<>>& presets() {
  static const auto table = build_presets();
  return table;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : presets()) names.push_back(name);
  return names;
}

AgentConfig preset_config(std::string_view name) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw ConfigError("unknown agent preset '" + std::string(name) + "'");
  return it->second.config;
}

std::string preset_description(std::string_view name) {
  const auto it = presets().find(name);
  if (it == presets().end()) throw ConfigError("unknown agent preset '" + std::string(name) + "'");
  return it->second.description;
}

}  // namespace duellab
