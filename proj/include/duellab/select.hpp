#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "duellab/gram.hpp"
#include "duellab/matrix.hpp"
#include "duellab/rng.hpp"

namespace duellab {

enum class Strategy { UcbAsym, UcbOsym, UcbCsym, TsAsym, TsOsym, TsCsym };

std::string_view strategy_name(Strategy s) noexcept;
Strategy parse_strategy(std::string_view name);

struct SelectionConfig {
  Strategy strategy = Strategy::UcbAsym;
  double nu = 1.0;
  double ts_jitter = 1e-12;

  void validate() const;
  bool operator==(const SelectionConfig&) const = default;
};

// Per-arm estimated utilities and the features that define widths.
struct ArmScores {
  std::vector<double> utilities;
  Matrix features;  // K x p

  std::size_t arms() const noexcept { return utilities.size(); }
};

struct ArmPair {
  int first = 0;
  int second = 0;
  bool operator==(const ArmPair&) const = default;
};

// width(phi_i - phi_j) under the Gram state.
double pair_width(const ArmScores& scores, const GramState& gram, std::size_t i, std::size_t j);

ArmPair select_ucb_asym(const ArmScores& scores, const GramState& gram, double nu);
ArmPair select_ucb_osym(const ArmScores& scores, const GramState& gram, double nu);
ArmPair select_ucb_csym(const ArmScores& scores, const GramState& gram, double nu);

// Arms i with u_i + nu * width(phi_i - phi_j) >= u_j for every j, ascending.
std::vector<int> candidate_set(const ArmScores& scores, const GramState& gram, double nu);

ArmPair select_ts_asym(const ArmScores& scores, const GramState& gram, double nu, Rng& rng, double jitter = 1e-12);
ArmPair select_ts_osym(const ArmScores& scores, const GramState& gram, double nu, Rng& rng, double jitter = 1e-12);
ArmPair select_ts_csym(const ArmScores& scores, const GramState& gram, double nu, Rng& rng, int round,
                       double jitter = 1e-12);

ArmPair select_arms(const SelectionConfig& cfg, const ArmScores& scores, const GramState& gram, Rng& rng, int round);

}  // namespace duellab
