// AVX2 + FMA kernels. This translation unit is the only one compiled with
// -mavx2 -mfma; nothing here runs unless dispatch found CPU support.

#include <immintrin.h>

#include <algorithm>

#include "duellab/simd.hpp"

namespace duellab::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

void ger(double alpha, const double* x, const double* y, double* a, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy(alpha * x[r], y, a + r * cols, cols);
}

// 4 x 8 register block of C.
inline void block_4x8(const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
                      std::size_t ldc, std::size_t k, std::size_t a_stride_p) {
  __m256d c00 = _mm256_loadu_pd(c), c01 = _mm256_loadu_pd(c + 4);
  __m256d c10 = _mm256_loadu_pd(c + ldc), c11 = _mm256_loadu_pd(c + ldc + 4);
  __m256d c20 = _mm256_loadu_pd(c + 2 * ldc), c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
  __m256d c30 = _mm256_loadu_pd(c + 3 * ldc), c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b + p * ldb;
    const __m256d b0 = _mm256_loadu_pd(bp);
    const __m256d b1 = _mm256_loadu_pd(bp + 4);
    const double* ap = a + p * a_stride_p;
    __m256d av = _mm256_broadcast_sd(ap);
    c00 = _mm256_fmadd_pd(av, b0, c00);
    c01 = _mm256_fmadd_pd(av, b1, c01);
    av = _mm256_broadcast_sd(ap + lda);
    c10 = _mm256_fmadd_pd(av, b0, c10);
    c11 = _mm256_fmadd_pd(av, b1, c11);
    av = _mm256_broadcast_sd(ap + 2 * lda);
    c20 = _mm256_fmadd_pd(av, b0, c20);
    c21 = _mm256_fmadd_pd(av, b1, c21);
    av = _mm256_broadcast_sd(ap + 3 * lda);
    c30 = _mm256_fmadd_pd(av, b0, c30);
    c31 = _mm256_fmadd_pd(av, b1, c31);
  }
  _mm256_storeu_pd(c, c00);
  _mm256_storeu_pd(c + 4, c01);
  _mm256_storeu_pd(c + ldc, c10);
  _mm256_storeu_pd(c + ldc + 4, c11);
  _mm256_storeu_pd(c + 2 * ldc, c20);
  _mm256_storeu_pd(c + 2 * ldc + 4, c21);
  _mm256_storeu_pd(c + 3 * ldc, c30);
  _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

// Shared driver for C += op(A) B where op(A)(i, p) = a[i * lda + p * a_stride_p].
void matmul_generic(const double* a, std::size_t lda, std::size_t a_stride_p, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
  const std::size_t n8 = n - n % 8;
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    for (std::size_t j = 0; j < n8; j += 8) block_4x8(a + i * lda, lda, b + j, n, c + i * n + j, n, k, a_stride_p);
  }
  for (; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * lda + p * a_stride_p];
      const __m256d av = _mm256_set1_pd(aip);
      for (std::size_t j = 0; j < n8; j += 4) {
        _mm256_storeu_pd(c + i * n + j,
                         _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * n + j), _mm256_loadu_pd(c + i * n + j)));
      }
    }
  }
  if (n8 == n) return;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t p = 0; p < k; ++p) {
      const double arp = a[r * lda + p * a_stride_p];
      for (std::size_t j = n8; j < n; ++j) c[r * n + j] += arp * b[p * n + j];
    }
  }
}

void matmul_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  matmul_generic(a, k, 1, b, c, m, k, n);
}

void matmul_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  matmul_generic(a, 1, m, b, c, m, k, n);
}

// R x C dot products of length k: rows of a against rows of b. The unroll
// hints keep the accumulators in registers; without them gcc spills at -O2.
template <int R, int C>
inline void nt_block(const double* a, const double* b, double* c, std::size_t k, std::size_t ldc) {
  const std::size_t k4 = k - k % 4;
  __m256d s[R][C];
#pragma GCC unroll 4
  for (int r = 0; r < R; ++r)
#pragma GCC unroll 4
    for (int q = 0; q < C; ++q) s[r][q] = _mm256_setzero_pd();
  for (std::size_t p = 0; p < k4; p += 4) {
    __m256d va[R], vb[C];
#pragma GCC unroll 4
    for (int r = 0; r < R; ++r) va[r] = _mm256_loadu_pd(a + r * k + p);
#pragma GCC unroll 4
    for (int q = 0; q < C; ++q) vb[q] = _mm256_loadu_pd(b + q * k + p);
#pragma GCC unroll 4
    for (int r = 0; r < R; ++r)
#pragma GCC unroll 4
      for (int q = 0; q < C; ++q) s[r][q] = _mm256_fmadd_pd(va[r], vb[q], s[r][q]);
  }
#pragma GCC unroll 4
  for (int r = 0; r < R; ++r) {
#pragma GCC unroll 4
    for (int q = 0; q < C; ++q) {
      double v = hsum(s[r][q]);
      for (std::size_t p = k4; p < k; ++p) v += a[r * k + p] * b[q * k + p];
      c[r * ldc + q] = v;
    }
  }
}

template <int R>
inline void nt_rows(const double* a, const double* b, double* c, std::size_t k, std::size_t n) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) nt_block<R, 4>(a, b + j * k, c + j, k, n);
  for (; j < n; ++j) nt_block<R, 1>(a, b + j * k, c + j, k, n);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 3 <= m; i += 3) nt_rows<3>(a + i * k, b, c + i * n, k, n);
  for (; i < m; ++i) nt_rows<1>(a + i * k, b, c + i * n, k, n);
}

void relu(double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) x[i] = std::max(x[i], 0.0);
}

void relu_backward(double* g, const double* pre, double scale, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d vs = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
    const __m256d v = _mm256_mul_pd(_mm256_loadu_pd(g + i), vs);
    _mm256_storeu_pd(g + i, _mm256_and_pd(mask, v));
  }
  for (; i < n; ++i) g[i] = pre[i] > 0.0 ? g[i] * scale : 0.0;
}

constexpr KernelTable kTable{dot, axpy, gemv, ger, matmul_acc, matmul_tn_acc, matmul_nt, relu, relu_backward};

}  // namespace

const KernelTable* avx2_table() noexcept { return &kTable; }

}  // namespace duellab::simd
