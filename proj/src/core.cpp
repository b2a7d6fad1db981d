#include "duellab/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "duellab/error.hpp"

namespace duellab {

double link_eval(const LinkFunction& g, double x) {
  if (!std::isfinite(x)) throw InvalidInput("link_eval: non-finite argument " + std::to_string(x));
  switch (g.kind) {
    case LinkKind::BTL:
      return sigmoid(x);
  }
  throw InvalidInput("link_eval: unknown link");
}

double link_deriv(const LinkFunction& g, double x) {
  if (!std::isfinite(x)) throw InvalidInput("link_deriv: non-finite argument " + std::to_string(x));
  switch (g.kind) {
    case LinkKind::BTL: {
      // p(1-p) written in e^{-|x|}; accurate in the tails and even in x
      const double e = std::exp(-std::fabs(x));
      const double s = 1.0 + e;
      return e / (s * s);
    }
  }
  throw InvalidInput("link_deriv: unknown link");
}

Vector symmetrize_context(std::span<const double> z, std::size_t d) {
  if (d == 0 || d % 2 != 0) throw ShapeError("symmetrize_context: target dimension must be even");
  if (z.size() != d / 2) {
    throw ShapeError("symmetrize_context: expected " + std::to_string(d / 2) + " inputs, got " +
                     std::to_string(z.size()));
  }
  double sq = 0.0;
  for (double v : z) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DegenerateContext("symmetrize_context: zero or non-finite vector");
  const double scale = 1.0 / (std::sqrt(2.0) * norm);
  Vector x(d);
  for (std::size_t j = 0; j < d / 2; ++j) {
    x[j] = z[j] * scale;
    x[j + d / 2] = x[j];
  }
  return x;
}

double average_regret(double u_star, double u1, double u2) noexcept { return (2.0 * u_star - u1 - u2) / 2.0; }

double weak_regret(double u_star, double u1, double u2) noexcept { return u_star - std::max(u1, u2); }

void RegretTrace::push(double avg, double weak, double ms) {
  const double prev_avg = cum_avg.empty() ? 0.0 : cum_avg.back();
  const double prev_weak = cum_weak.empty() ? 0.0 : cum_weak.back();
  r_avg.push_back(avg);
  r_weak.push_back(weak);
  cum_avg.push_back(prev_avg + avg);
  cum_weak.push_back(prev_weak + weak);
  elapsed_ms.push_back(ms);
}

}  // namespace duellab
