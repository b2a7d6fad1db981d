#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "duellab/core.hpp"
#include "duellab/rng.hpp"

namespace duellab {

struct RoundTruth {
  std::vector<double> utilities;
  int best_arm = 0;
  double best_utility = 0.0;
  // Tabular rounds remember which instance produced them.
  std::size_t instance = 0;
};

RoundTruth make_truth(std::vector<double> utilities);

// Preference environment. Implementations are immutable after
// construction; all randomness comes from caller-supplied streams.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::string_view name() const noexcept = 0;
  virtual int context_dim() const noexcept = 0;
  virtual int arms() const noexcept = 0;
  virtual std::pair<ContextSet, RoundTruth> sample_contexts(int round, Rng& rng) const = 0;
  // Probability that the first arm wins the duel.
  virtual double win_probability(const RoundTruth& truth, int k1, int k2) const = 0;

  int duel(const RoundTruth& truth, int k1, int k2, Rng& rng) const;
  // Bernoulli variance p(1 - p) of the duel outcome.
  double outcome_variance(const RoundTruth& truth, int k1, int k2) const;
};

enum class SyntheticKind { Cosine, Square, Quadratic, Linear };

std::string_view synthetic_kind_name(SyntheticKind k) noexcept;
SyntheticKind parse_synthetic_kind(std::string_view s);

class SyntheticEnv final : public Environment {
 public:
  // Draws Theta uniformly from [-1, 1]^d (d = latent dimension).
  SyntheticEnv(SyntheticKind kind, int dim, int arms, bool symmetrize, Rng& theta_rng, std::string name = {});
  SyntheticEnv(SyntheticKind kind, std::vector<double> theta, int arms, bool symmetrize, std::string name = {});

  std::string_view name() const noexcept override { return name_; }
  // Symmetrized contexts have twice the latent dimension.
  int context_dim() const noexcept override { return symmetrize_ ? 2 * dim_ : dim_; }
  int arms() const noexcept override { return arms_; }
  std::pair<ContextSet, RoundTruth> sample_contexts(int round, Rng& rng) const override;
  double win_probability(const RoundTruth& truth, int k1, int k2) const override;

  double true_utility(std::span<const double> x) const;
  const std::vector<double>& theta() const noexcept { return theta_; }
  SyntheticKind kind() const noexcept { return kind_; }

 private:
  SyntheticKind kind_;
  int dim_;
  int arms_;
  bool symmetrize_;
  std::vector<double> theta_;
  std::string name_;
};

enum class PreferenceMode { Margin, Deterministic };

struct TabularSchema {
  // Label column: index, or name when has_header is set and label_name is non-empty.
  int label_column = -1;  // -1 means last column
  std::string label_name;
  char delimiter = ',';
  bool has_header = false;
};

// Min-max scaled feature rows with integer labels in [0, classes).
struct TabularData {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  int classes = 0;
  std::vector<double> col_min;
  std::vector<double> col_max;

  int feature_dim() const noexcept { return features.empty() ? 0 : static_cast<int>(features.front().size()); }
  bool operator==(const TabularData&) const = default;
};

// Labels may be arbitrary integers or strings; classes are numbered by
// sorted order of the distinct labels.
TabularData load_tabular(const std::string& path, const TabularSchema& schema);
TabularData parse_tabular(std::istream& in, const TabularSchema& schema, const std::string& source = "<stream>");

class TabularEnv final : public Environment {
 public:
  // margin is P(label arm beats another arm) in margin mode.
  TabularEnv(std::shared_ptr<const TabularData> data, PreferenceMode mode, double margin = 0.7, bool symmetrize = false,
             std::string name = {});

  std::string_view name() const noexcept override { return name_; }
  int context_dim() const noexcept override;
  int arms() const noexcept override { return data_->classes; }
  std::pair<ContextSet, RoundTruth> sample_contexts(int round, Rng& rng) const override;
  double win_probability(const RoundTruth& truth, int k1, int k2) const override;

  double true_utility(std::size_t instance, int arm) const;
  // One-vs-all block encoding of an instance for one arm, unit-normalized.
  Vector encode(std::size_t instance, int arm) const;
  PreferenceMode mode() const noexcept { return mode_; }
  double margin_scale() const noexcept { return scale_; }

 private:
  std::shared_ptr<const TabularData> data_;
  PreferenceMode mode_;
  double margin_;
  double scale_;
  bool symmetrize_;
  std::string name_;
};

}  // namespace duellab
