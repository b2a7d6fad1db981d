#include "duellab/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "duellab/error.hpp"
#include "duellab/simd.hpp"

namespace duellab::linalg {

std::optional<Matrix> cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("cholesky: matrix is not square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double diag = a(j, j) - simd::dot(l.row(j).data(), l.row(j).data(), j);
    if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - simd::dot(l.row(i).data(), l.row(j).data(), j)) / ljj;
    }
  }
  return l;
}

Vector cholesky_solve(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw ShapeError("cholesky_solve: dimension mismatch");
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = (b[i] - simd::dot(l.row(i).data(), y.data(), i)) / l(i, i);
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

std::optional<Matrix> spd_inverse(const Matrix& a) {
  auto l = cholesky(a);
  if (!l) return std::nullopt;
  const std::size_t n = a.rows();
  // Invert L (lower triangular), then A^-1 = L^-T L^-1.
  Matrix linv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    linv(j, j) = 1.0 / (*l)(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s += (*l)(i, k) * linv(k, j);
      linv(i, j) = -s / (*l)(i, i);
    }
  }
  // Columns of L^-1 are rows of L^-T; the product needs dots over column
  // tails, so work on the transpose for contiguous access.
  Matrix lt(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) lt(j, i) = linv(i, j);
  Matrix inv(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      // (L^-T L^-1)_{ij} = sum_{k >= max(i,j)} linv(k,i) linv(k,j)
      const double s = simd::dot(lt.row(i).data() + j, lt.row(j).data() + j, n - j);
      inv(i, j) = s;
      inv(j, i) = s;
    }
  }
  return inv;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace duellab::linalg
