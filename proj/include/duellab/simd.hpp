#pragma once

// Dense double-precision kernels behind a runtime-selected backend.
//
// Every kernel has a scalar reference implementation and an AVX2/FMA
// implementation. The AVX2 table is selected once at startup when the CPU
// supports it; setting DUELLAB_SIMD=scalar in the environment, or calling
// set_backend(), forces the reference path. All matrices are row-major and
// tightly packed.

#include <cstddef>
#include <string_view>

namespace duellab::simd {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = A x, A is rows x cols
  void (*gemv)(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols);
  // A += alpha * x y^T, A is rows x cols
  void (*ger)(double alpha, const double* x, const double* y, double* a, std::size_t rows, std::size_t cols);
  // C += A B; A is m x k, B is k x n, C is m x n
  void (*matmul_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
  // C += A^T B; A is k x m, B is k x n, C is m x n
  void (*matmul_tn_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
  // C = A B^T; A is m x k, B is n x k, C is m x n
  void (*matmul_nt)(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
  // x = max(x, 0)
  void (*relu)(double* x, std::size_t n);
  // g[i] = pre[i] > 0 ? g[i] * scale : 0
  void (*relu_backward)(double* g, const double* pre, double scale, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
// Null when the binary was built without AVX2 support.
const KernelTable* avx2_table() noexcept;

bool avx2_supported() noexcept;
Backend active_backend() noexcept;
void set_backend(Backend b);
std::string_view backend_name(Backend b) noexcept;

const KernelTable& kernels() noexcept;

inline double dot(const double* a, const double* b, std::size_t n) { return kernels().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { kernels().axpy(alpha, x, y, n); }
inline void gemv(const double* a, const double* x, double* y, std::size_t rows, std::size_t cols) {
  kernels().gemv(a, x, y, rows, cols);
}
inline void ger(double alpha, const double* x, const double* y, double* a, std::size_t rows, std::size_t cols) {
  kernels().ger(alpha, x, y, a, rows, cols);
}
inline void matmul_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  kernels().matmul_acc(a, b, c, m, k, n);
}
inline void matmul_tn_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  kernels().matmul_tn_acc(a, b, c, m, k, n);
}
inline void matmul_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  kernels().matmul_nt(a, b, c, m, k, n);
}
inline void relu(double* x, std::size_t n) { kernels().relu(x, n); }
inline void relu_backward(double* g, const double* pre, double scale, std::size_t n) {
  kernels().relu_backward(g, pre, scale, n);
}

}  // namespace duellab::simd
