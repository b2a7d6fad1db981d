#pragma once

// Random instance generators shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <vector>

#include "duellab/core.hpp"
#include "duellab/net.hpp"
#include "oracle.hpp"

namespace fixtures {

using namespace duellab;

inline DuelRecord make_record(Vector a, Vector b, int outcome, double zeta) {
  DuelRecord r;
  r.x_first = std::move(a);
  r.x_second = std::move(b);
  r.outcome = outcome;
  r.zeta = zeta;
  return r;
}

// Random non-symmetric parameters so gradients are generic.
inline NetworkParams random_params(Rng& rng, int d, int m, int hidden) {
  NetworkParams p = init_network({d, m, hidden}, rng);
  for (auto& w : p.layers)
    for (auto& v : w.flat()) v = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(w.cols())));
  for (auto& t : p.theta) t = rng.normal();
  for (auto& t : p.theta0) t = rng.normal(0.0, 0.3);
  return p;
}

inline std::vector<DuelRecord> random_history(Rng& rng, int d, int n) {
  std::vector<DuelRecord> h;
  for (int i = 0; i < n; ++i) {
    h.push_back(make_record(oracle::unit_random(rng, d), oracle::unit_random(rng, d), rng.bernoulli(0.5) ? 1 : 0,
                            rng.uniform(0.3, 1.0)));
  }
  return h;
}

inline Vector flatten(const NetworkGradient& g) {
  Vector out = g.theta;
  for (const auto& w : g.layers) out.insert(out.end(), w.flat().begin(), w.flat().end());
  return out;
}

inline double* param_slot(NetworkParams& p, std::size_t idx) {
  if (idx < p.theta.size()) return &p.theta[idx];
  idx -= p.theta.size();
  for (auto& w : p.layers) {
    if (idx < w.size()) return w.data() + idx;
    idx -= w.size();
  }
  return nullptr;
}

inline ContextSet random_contexts(Rng& rng, int k, int d, int round = 1) {
  ContextSet cs;
  cs.round = round;
  cs.vectors = Matrix(k, d);
  for (int a = 0; a < k; ++a) {
    const Vector v = oracle::unit_random(rng, d);
    std::copy(v.begin(), v.end(), cs.vectors.row(a).begin());
  }
  return cs;
}

inline ContextSet symmetrized_contexts(Rng& rng, int k, int half) {
  ContextSet cs;
  cs.vectors = Matrix(k, 2 * half);
  for (int a = 0; a < k; ++a) {
    const Vector v = symmetrize_context(oracle::unit_random(rng, half), 2 * half);
    std::copy(v.begin(), v.end(), cs.vectors.row(a).begin());
  }
  return cs;
}

}  // namespace fixtures
