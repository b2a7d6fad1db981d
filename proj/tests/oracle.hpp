#pragma once

// Reference implementations used as test oracles. They share no code with
// the library beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "duellab/core.hpp"
#include "duellab/matrix.hpp"
#include "duellab/net.hpp"
#include "duellab/rng.hpp"

namespace oracle {

using duellab::Matrix;
using duellab::Vector;

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// sqrt(m) relu(W_L ... relu(W_1 x)), computed with plain loops.
inline Vector features(const std::vector<Matrix>& layers, std::span<const double> x) {
  Vector h(x.begin(), x.end());
  if (layers.empty()) return h;
  const double m = static_cast<double>(layers.front().rows());
  for (const auto& w : layers) {
    Vector next(w.rows(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < w.cols(); ++c) s += w(r, c) * h[c];
      next[r] = s > 0.0 ? s : 0.0;
    }
    h = std::move(next);
  }
  for (auto& v : h) v *= std::sqrt(m);
  return h;
}

inline double dotv(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Gauss-Jordan inverse with partial pivoting.
inline Matrix inverse(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv = Matrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a(r, c)) > std::fabs(a(piv, c))) piv = r;
    for (std::size_t k = 0; k < n; ++k) {
      std::swap(a(c, k), a(piv, k));
      std::swap(inv(c, k), inv(piv, k));
    }
    const double d = a(c, c);
    for (std::size_t k = 0; k < n; ++k) {
      a(c, k) /= d;
      inv(c, k) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        a(r, k) -= f * a(c, k);
        inv(r, k) -= f * inv(c, k);
      }
    }
  }
  return inv;
}

inline double quad_form(const Matrix& ainv, const Vector& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) s += v[i] * ainv(i, j) * v[j];
  return s;
}

// Root of a monotone function on [lo, hi] by bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline Vector unit_random(duellab::Rng& rng, std::size_t d) {
  Vector v(d);
  double n = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    n += x * x;
  }
  for (auto& x : v) x /= std::sqrt(n);
  return v;
}

// -sum log g(s df)/zeta^2 + lambda/2 |theta - theta0|^2 through the loop forward pass.
inline double loss(const duellab::NetworkParams& p, const std::vector<duellab::DuelRecord>& h, double lambda) {
  double l = 0.0;
  for (const auto& r : h) {
    const double df = dotv(p.theta, features(p.layers, r.x_first)) - dotv(p.theta, features(p.layers, r.x_second));
    const double s = r.outcome == 1 ? 1.0 : -1.0;
    l += -std::log(logistic(s * df)) / (r.zeta * r.zeta);
  }
  for (std::size_t i = 0; i < p.theta.size(); ++i) l += 0.5 * lambda * std::pow(p.theta[i] - p.theta0[i], 2);
  return l;
}

// Minimizer of the weighted logistic objective in theta for identity
// features: cyclic coordinate descent, each coordinate found by bisection on
// its partial derivative.
inline Vector glm_refit(const std::vector<duellab::DuelRecord>& h, double lambda, const Vector& theta0) {
  const std::size_t d = theta0.size();
  Vector theta = theta0;
  auto partial = [&](std::size_t j, double tj) {
    Vector t = theta;
    t[j] = tj;
    double g = lambda * (tj - theta0[j]);
    for (const auto& r : h) {
      double df = 0;
      for (std::size_t i = 0; i < d; ++i) df += t[i] * (r.x_first[i] - r.x_second[i]);
      g += (logistic(df) - r.outcome) * (r.x_first[j] - r.x_second[j]) / (r.zeta * r.zeta);
    }
    return g;
  };
  for (int sweep = 0; sweep < 2000; ++sweep) {
    double move = 0;
    for (std::size_t j = 0; j < d; ++j) {
      double lo = theta[j] - 1.0, hi = theta[j] + 1.0;
      while (partial(j, lo) > 0) lo -= 2 * (hi - lo);
      while (partial(j, hi) < 0) hi += 2 * (hi - lo);
      const double nj = bisect([&](double t) { return partial(j, t); }, lo, hi, 100);
      move = std::max(move, std::fabs(nj - theta[j]));
      theta[j] = nj;
    }
    if (move < 1e-14) break;
  }
  return theta;
}

}  // namespace oracle
