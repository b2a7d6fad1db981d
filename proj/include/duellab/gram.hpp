#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "duellab/matrix.hpp"

namespace duellab {

// Regularized variance-weighted design matrix
//   V = lambda I + sum_i dphi_i dphi_i^T / zeta_i^2
// together with its inverse, maintained through Sherman-Morrison updates.
struct GramState {
  std::size_t dim = 0;
  double lambda = 1.0;
  Matrix v;
  Matrix vinv;
  long update_count = 0;
};

// Sherman-Morrison drift is capped by a direct SPD inverse this often.
inline constexpr long kGramRefreshInterval = 256;

GramState init_gram(std::size_t d, double lambda);

void rank_one_update(GramState& state, std::span<const double> dphi, double zeta);

// sqrt(max(0, v^T V^-1 v))
double confidence_width(const GramState& state, std::span<const double> v);

struct GramTerm {
  std::span<const double> dphi;
  double zeta = 1.0;
};

// lambda I + sum dphi dphi^T / zeta^2 with a fresh direct inverse.
GramState rebuild(const GramState& state, std::span<const GramTerm> records);

// Recomputes vinv from v by Cholesky.
void refresh_inverse(GramState& state);

}  // namespace duellab
