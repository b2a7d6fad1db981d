#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "duellab/core.hpp"
#include "duellab/gram.hpp"
#include "duellab/net.hpp"
#include "duellab/rng.hpp"
#include "duellab/select.hpp"

namespace duellab {

enum class FeatureMode { Neural, Identity, FullGradient };
enum class VarianceMode { Aware, Agnostic, Oracle };
// Frozen: V accumulates the features recorded at selection time.
// Refresh: V is rebuilt every round from history re-featurized under the
// current weights.
enum class GramMode { Frozen, Refresh };

std::string_view feature_mode_name(FeatureMode m) noexcept;
std::string_view variance_mode_name(VarianceMode m) noexcept;
std::string_view gram_mode_name(GramMode m) noexcept;
FeatureMode parse_feature_mode(std::string_view s);
VarianceMode parse_variance_mode(std::string_view s);
GramMode parse_gram_mode(std::string_view s);

struct AgentConfig {
  FeatureMode feature_mode = FeatureMode::Neural;
  VarianceMode variance_mode = VarianceMode::Aware;
  GramMode gram_mode = GramMode::Frozen;
  // Variance floor; a non-positive value means 1 / (2 sqrt(d)).
  double epsilon = 0.0;
  double lambda = 1.0;
  SelectionConfig selection;
  TrainConfig train;
  // Hidden width and depth; the network dimension follows the context.
  int width = 32;
  int hidden_layers = 2;

  void validate() const;
  bool operator==(const AgentConfig&) const = default;
};

// Network dimension for a context dimension: odd widths get one zero pad.
int network_dim(int context_dim) noexcept;

struct PendingDuel {
  int round = 0;
  int first = 0;
  int second = 0;
  Vector x_first;
  Vector x_second;
  Vector dphi;
  double delta_f = 0.0;
};

struct ZetaEstimate {
  double sigma_sq = 0.0;
  double zeta = 1.0;
};

class Agent {
 public:
  Agent(const AgentConfig& cfg, int context_dim, Rng& init_rng);

  ArmPair select(const ContextSet& contexts, Rng& rng);

  ZetaEstimate estimate_zeta(std::optional<double> oracle_variance = std::nullopt) const;

  // Records the outcome of the pending duel, updates V and trains on
  // episode boundaries.
  void observe(int outcome, Rng& rng, std::optional<double> oracle_variance = std::nullopt);

  // Per-arm utilities and features under the current parameters.
  ArmScores score(const ContextSet& contexts) const;

  const AgentConfig& config() const noexcept { return cfg_; }
  const NetworkParams& params() const noexcept { return params_; }
  const GramState& gram() const noexcept { return gram_; }
  const std::vector<DuelRecord>& history() const noexcept { return history_; }
  const std::optional<PendingDuel>& pending() const noexcept { return pending_; }
  int round() const noexcept { return round_; }
  double epsilon() const noexcept { return epsilon_; }
  int refit_failures() const noexcept { return refit_failures_; }

  // Test hooks.
  void set_params(NetworkParams p) { params_ = std::move(p); }
  void set_gram(GramState g) { gram_ = std::move(g); }

 private:
  Vector network_input(std::span<const double> context) const;
  Vector features(std::span<const double> x) const;
  void rebuild_gram();

  AgentConfig cfg_;
  int context_dim_ = 0;
  int dim_ = 0;
  double epsilon_ = 0.0;
  NetworkParams params_;
  GramState gram_;
  std::vector<DuelRecord> history_;
  std::optional<PendingDuel> pending_;
  int round_ = 1;
  int refit_failures_ = 0;
};

// Named agent bundles, e.g. "nvldb-ucb-asym" or "linear-ucb-asym".
std::vector<std::string> preset_names();
AgentConfig preset_config(std::string_view name);
std::string preset_description(std::string_view name);

}  // namespace duellab
