#include "duellab/gram.hpp"

#include <cmath>
#include <string>

#include "duellab/error.hpp"
#include "duellab/linalg.hpp"
#include "duellab/simd.hpp"

namespace duellab {

GramState init_gram(std::size_t d, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("gram: lambda must be > 0, got " + std::to_string(lambda));
  if (d < 1) throw ConfigError("gram: dimension must be >= 1");
  GramState s;
  s.dim = d;
  s.lambda = lambda;
  s.v = Matrix::identity(d, lambda);
  s.vinv = Matrix::identity(d, 1.0 / lambda);
  return s;
}

void refresh_inverse(GramState& state) {
  auto inv = linalg::spd_inverse(state.v);
  if (!inv) throw NumericalFailure("gram: V lost positive definiteness");
  state.vinv = std::move(*inv);
}

void rank_one_update(GramState& state, std::span<const double> dphi, double zeta) {
  if (!(zeta > 0.0) || !std::isfinite(zeta)) throw InvalidInput("rank_one_update: zeta must be > 0");
  if (dphi.size() != state.dim) throw ShapeError("rank_one_update: dimension mismatch");
  for (double v : dphi)
    if (!std::isfinite(v)) throw InvalidInput("rank_one_update: dphi has a non-finite entry");
  const std::size_t d = state.dim;
  const double w = 1.0 / (zeta * zeta);
  simd::ger(w, dphi.data(), dphi.data(), state.v.data(), d, d);

  // (V + w u u^T)^-1 = Vinv - w (Vinv u)(Vinv u)^T / (1 + w u^T Vinv u)
  Vector vu(d);
  simd::gemv(state.vinv.data(), dphi.data(), vu.data(), d, d);
  const double quad = simd::dot(dphi.data(), vu.data(), d);
  simd::ger(-w / (1.0 + w * quad), vu.data(), vu.data(), state.vinv.data(), d, d);
  ++state.update_count;
  if (state.update_count % kGramRefreshInterval == 0) refresh_inverse(state);
}

double confidence_width(const GramState& state, std::span<const double> v) {
  if (v.size() != state.dim) throw ShapeError("confidence_width: dimension mismatch");
  Vector tmp(state.dim);
  simd::gemv(state.vinv.data(), v.data(), tmp.data(), state.dim, state.dim);
  const double q = simd::dot(v.data(), tmp.data(), state.dim);
  return std::sqrt(std::max(0.0, q));
}

GramState rebuild(const GramState& state, std::span<const GramTerm> records) {
  GramState s = init_gram(state.dim, state.lambda);
  for (const auto& r : records) {
    if (!(r.zeta > 0.0)) throw InvalidInput("rebuild: zeta must be > 0");
    if (r.dphi.size() != s.dim) throw ShapeError("rebuild: dimension mismatch");
    simd::ger(1.0 / (r.zeta * r.zeta), r.dphi.data(), r.dphi.data(), s.v.data(), s.dim, s.dim);
  }
  s.update_count = static_cast<long>(records.size());
  if (!records.empty()) refresh_inverse(s);
  return s;
}

}  // namespace duellab
