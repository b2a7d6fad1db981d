#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "duellab/matrix.hpp"

namespace duellab {

// Preference link mapping a utility difference to P(first arm wins).
// Only the Bradley-Terry-Luce sigmoid is built in.
enum class LinkKind { BTL };

struct LinkFunction {
  LinkKind kind = LinkKind::BTL;
};

// Overflow-free logistic. Callers guarantee x is finite.
inline double sigmoid(double x) noexcept {
  // exp of the negative magnitude never overflows
  const double e = std::exp(-std::fabs(x));
  const double denom = 1.0 + e;
  return x >= 0.0 ? 1.0 / denom : e / denom;
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double link_eval(const LinkFunction& g, double x);
double link_deriv(const LinkFunction& g, double x);

// Duplicates z into both halves of a d-vector, scaled to unit norm.
Vector symmetrize_context(std::span<const double> z, std::size_t d);

double average_regret(double u_star, double u1, double u2) noexcept;
double weak_regret(double u_star, double u1, double u2) noexcept;

// One round's candidate contexts: K rows of d-dimensional vectors.
struct ContextSet {
  int round = 1;
  Matrix vectors;

  std::size_t arms() const noexcept { return vectors.rows(); }
  std::size_t dim() const noexcept { return vectors.cols(); }
  std::span<const double> arm(std::size_t k) const { return vectors.row(k); }
};

// Frozen history entry. dphi is the feature difference under the weights
// that chose the duel; x_first/x_second are the raw network inputs so the
// loss can be re-evaluated under later weights.
struct DuelRecord {
  int round = 0;
  int idx_first = 0;
  int idx_second = 0;
  Vector x_first;
  Vector x_second;
  Vector dphi;
  double zeta = 1.0;
  int outcome = 0;
};

struct RegretTrace {
  std::vector<double> r_avg;
  std::vector<double> r_weak;
  std::vector<double> cum_avg;
  std::vector<double> cum_weak;
  std::vector<double> elapsed_ms;

  std::size_t size() const noexcept { return r_avg.size(); }
  void push(double avg, double weak, double ms);
  bool operator==(const RegretTrace&) const = default;
};

}  // namespace duellab
