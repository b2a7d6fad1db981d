#include "duellab/select.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "duellab/error.hpp"

namespace duellab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_scores(const ArmScores& scores, const GramState& gram) {
  if (scores.arms() < 1) throw InvalidInput("select: no arms");
  if (scores.features.rows() != scores.arms()) throw ShapeError("select: feature rows must match arm count");
  if (scores.features.cols() != gram.dim) throw ShapeError("select: feature dimension must match Gram dimension");
}

std::size_t greedy_arm(const ArmScores& scores) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.arms(); ++k) {
    if (scores.utilities[k] > scores.utilities[best]) best = k;
  }
  return best;
}

// Symmetric K x K table of pair widths; diagonal is zero.
Matrix width_table(const ArmScores& scores, const GramState& gram) {
  const std::size_t k = scores.arms();
  Matrix w(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      w(i, j) = pair_width(scores, gram, i, j);
      w(j, i) = w(i, j);
    }
  }
  return w;
}

std::vector<int> candidates_from(const ArmScores& scores, const Matrix& widths, double nu) {
  std::vector<int> out;
  const std::size_t k = scores.arms();
  for (std::size_t i = 0; i < k; ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < k && ok; ++j) {
      if (i == j) continue;
      ok = scores.utilities[i] + nu * widths(i, j) >= scores.utilities[j];
    }
    if (ok) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace

std::string_view strategy_name(Strategy s) noexcept {
  switch (s) {
    case Strategy::UcbAsym:
      return "ucb-asym";
    case Strategy::UcbOsym:
      return "ucb-osym";
    case Strategy::UcbCsym:
      return "ucb-csym";
    case Strategy::TsAsym:
      return "ts-asym";
    case Strategy::TsOsym:
      return "ts-osym";
    case Strategy::TsCsym:
      return "ts-csym";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::UcbAsym, Strategy::UcbOsym, Strategy::UcbCsym, Strategy::TsAsym, Strategy::TsOsym,
                     Strategy::TsCsym}) {
    if (name == strategy_name(s)) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

void SelectionConfig::validate() const {
  if (!(nu >= 0.0)) throw ConfigError("selection: nu must be >= 0");
  if (!(ts_jitter >= 0.0)) throw ConfigError("selection: ts_jitter must be >= 0");
}

double pair_width(const ArmScores& scores, const GramState& gram, std::size_t i, std::size_t j) {
  if (i == j) return 0.0;
  const std::size_t p = scores.features.cols();
  Vector diff(p);
  const auto fi = scores.features.row(i);
  const auto fj = scores.features.row(j);
  for (std::size_t r = 0; r < p; ++r) diff[r] = fi[r] - fj[r];
  return confidence_width(gram, diff);
}

ArmPair select_ucb_asym(const ArmScores& scores, const GramState& gram, double nu) {
  check_scores(scores, gram);
  const std::size_t k1 = greedy_arm(scores);
  std::size_t k2 = 0;
  double best = kNegInf;
  for (std::size_t k = 0; k < scores.arms(); ++k) {
    const double bonus = nu == 0.0 ? 0.0 : nu * pair_width(scores, gram, k, k1);
    const double score = scores.utilities[k] + bonus;
    if (score > best) {
      best = score;
      k2 = k;
    }
  }
  return {static_cast<int>(k1), static_cast<int>(k2)};
}

ArmPair select_ucb_osym(const ArmScores& scores, const GramState& gram, double nu) {
  check_scores(scores, gram);
  const std::size_t k = scores.arms();
  ArmPair best_pair;
  double best = kNegInf;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      const double bonus = nu == 0.0 ? 0.0 : nu * pair_width(scores, gram, i, j);
      const double score = scores.utilities[i] + scores.utilities[j] + bonus;
      if (score > best) {
        best = score;
        best_pair = {static_cast<int>(i), static_cast<int>(j)};
      }
    }
  }
  return best_pair;
}

std::vector<int> candidate_set(const ArmScores& scores, const GramState& gram, double nu) {
  check_scores(scores, gram);
  return candidates_from(scores, width_table(scores, gram), nu);
}

ArmPair select_ucb_csym(const ArmScores& scores, const GramState& gram, double nu) {
  check_scores(scores, gram);
  const Matrix widths = width_table(scores, gram);
  const auto cand = candidates_from(scores, widths, nu);
  ArmPair best_pair{cand.front(), cand.front()};
  double best = kNegInf;
  for (std::size_t a = 0; a < cand.size(); ++a) {
    for (std::size_t b = a; b < cand.size(); ++b) {
      const double w = widths(cand[a], cand[b]);
      if (w > best) {
        best = w;
        best_pair = {cand[a], cand[b]};
      }
    }
  }
  return best_pair;
}

ArmPair select_ts_asym(const ArmScores& scores, const GramState& gram, double nu, Rng& rng, double jitter) {
  check_scores(scores, gram);
  const std::size_t k1 = greedy_arm(scores);
  std::size_t k2 = 0;
  double best = kNegInf;
  for (std::size_t k = 0; k < scores.arms(); ++k) {
    const double mean = scores.utilities[k] - scores.utilities[k1];
    const double sd = nu * pair_width(scores, gram, k, k1) + jitter;
    const double draw = rng.normal(mean, sd);
    if (draw > best) {
      best = draw;
      k2 = k;
    }
  }
  return {static_cast<int>(k1), static_cast<int>(k2)};
}

ArmPair select_ts_osym(const ArmScores& scores, const GramState& gram, double nu, Rng& rng, double jitter) {
  check_scores(scores, gram);
  const std::size_t k = scores.arms();
  ArmPair best_pair;
  double best = kNegInf;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      const double mean = scores.utilities[i] + scores.utilities[j];
      const double sd = nu * pair_width(scores, gram, i, j) + jitter;
      const double draw = rng.normal(mean, sd);
      if (draw > best) {
        best = draw;
        best_pair = {static_cast<int>(i), static_cast<int>(j)};
      }
    }
  }
  return best_pair;
}

ArmPair select_ts_csym(const ArmScores& scores, const GramState& gram, double nu, Rng& rng, int round,
                       double jitter) {
  check_scores(scores, gram);
  if (round < 1) throw InvalidInput("select_ts_csym: round must be >= 1");
  const Matrix widths = width_table(scores, gram);
  const auto cand = candidates_from(scores, widths, nu);
  const double kt2 = static_cast<double>(scores.arms()) * static_cast<double>(round) * static_cast<double>(round);
  const double log_term = std::log(kt2);
  ArmPair best_pair{cand.front(), cand.front()};
  double best = kNegInf;
  for (std::size_t a = 0; a < cand.size(); ++a) {
    for (std::size_t b = a; b < cand.size(); ++b) {
      const double w = widths(cand[a], cand[b]);
      const double mean = w * w;
      const double spread = log_term > 0.0 ? mean / (2.0 * std::sqrt(log_term)) : 0.0;
      const double draw = rng.normal(mean, spread + jitter);
      if (draw > best) {
        best = draw;
        best_pair = {cand[a], cand[b]};
      }
    }
  }
  return best_pair;
}

ArmPair select_arms(const SelectionConfig& cfg, const ArmScores& scores, const GramState& gram, Rng& rng,
                    int round) {
  switch (cfg.strategy) {
    case Strategy::UcbAsym:
      return select_ucb_asym(scores, gram, cfg.nu);
    case Strategy::UcbOsym:
      return select_ucb_osym(scores, gram, cfg.nu);
    case Strategy::UcbCsym:
      return select_ucb_csym(scores, gram, cfg.nu);
    case Strategy::TsAsym:
      return select_ts_asym(scores, gram, cfg.nu, rng, cfg.ts_jitter);
    case Strategy::TsOsym:
      return select_ts_osym(scores, gram, cfg.nu, rng, cfg.ts_jitter);
    case Strategy::TsCsym:
      return select_ts_csym(scores, gram, cfg.nu, rng, round, cfg.ts_jitter);
  }
  throw ConfigError("select: unknown strategy");
}

}  // namespace duellab
