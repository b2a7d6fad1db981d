#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "duellab/rng.hpp"
#include "duellab/simd.hpp"

using namespace duellab;
namespace simd = duellab::simd;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// naive C = A B, A m x k, B k x n
std::vector<double> naive_mm(const std::vector<double>& a, const std::vector<double>& b, std::size_t m, std::size_t k,
                             std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += static_cast<long double>(a[i * k + p]) * b[p * n + j];
      c[i * n + j] = static_cast<double>(s);
    }
  return c;
}

std::vector<double> transpose(const std::vector<double>& a, std::size_t r, std::size_t c) {
  std::vector<double> t(a.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) t[j * r + i] = a[i * c + j];
  return t;
}

void expect_close(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_NEAR(got[i], want[i], tol * (1.0 + std::fabs(want[i]))) << "index " << i;
  }
}

const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 64};

class KernelsTest : public ::testing::TestWithParam<simd::Backend> {
 protected:
  void SetUp() override {
    if (GetParam() == simd::Backend::Avx2 && !simd::avx2_supported()) GTEST_SKIP() << "no AVX2 on this CPU";
    table_ = GetParam() == simd::Backend::Avx2 ? simd::avx2_table() : &simd::scalar_table();
  }
  const simd::KernelTable* table_ = nullptr;
};

}  // namespace

TEST_P(KernelsTest, DotAxpy) {
  Rng rng(1);
  for (std::size_t n : kSizes) {
    const auto a = random_vec(rng, n), b = random_vec(rng, n);
    long double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += static_cast<long double>(a[i]) * b[i];
    EXPECT_NEAR(table_->dot(a.data(), b.data(), n), static_cast<double>(s), 1e-12 * (1 + n));
    auto y = b;
    table_->axpy(0.75, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y[i], b[i] + 0.75 * a[i], 1e-15);
  }
}

TEST_P(KernelsTest, GemvGer) {
  Rng rng(2);
  for (std::size_t r : {1, 3, 8, 13})
    for (std::size_t c : kSizes) {
      const auto a = random_vec(rng, r * c), x = random_vec(rng, c), y0 = random_vec(rng, r);
      std::vector<double> y(r);
      table_->gemv(a.data(), x.data(), y.data(), r, c);
      expect_close(y, naive_mm(a, x, r, c, 1), 1e-13);
      auto g = a;
      table_->ger(-0.5, y0.data(), x.data(), g.data(), r, c);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) EXPECT_NEAR(g[i * c + j], a[i * c + j] - 0.5 * y0[i] * x[j], 1e-14);
    }
}

TEST_P(KernelsTest, MatmulVariants) {
  Rng rng(3);
  const std::size_t dims[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 8, 8}, {5, 9, 17}, {32, 6, 40}, {6, 32, 33}, {13, 2, 64}};
  for (const auto& d : dims) {
    const std::size_t m = d[0], k = d[1], n = d[2];
    const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n), c0 = random_vec(rng, m * n);
    const auto ab = naive_mm(a, b, m, k, n);

    auto c = c0;
    table_->matmul_acc(a.data(), b.data(), c.data(), m, k, n);
    std::vector<double> want(m * n);
    for (std::size_t i = 0; i < m * n; ++i) want[i] = c0[i] + ab[i];
    expect_close(c, want, 1e-13);

    // A^T B with A stored k x m
    const auto at = transpose(a, m, k);
    c = c0;
    table_->matmul_tn_acc(at.data(), b.data(), c.data(), m, k, n);
    expect_close(c, want, 1e-13);

    // A B^T with B stored n x k
    const auto bt = transpose(b, k, n);
    std::vector<double> out(m * n, 123.0);
    table_->matmul_nt(a.data(), bt.data(), out.data(), m, k, n);
    expect_close(out, ab, 1e-13);
  }
}

TEST_P(KernelsTest, ReluAndBackward) {
  Rng rng(4);
  for (std::size_t n : kSizes) {
    auto x = random_vec(rng, n);
    x[0] = 0.0;
    const auto pre = x;
    table_->relu(x.data(), n);
    auto g = random_vec(rng, n);
    const auto g0 = g;
    table_->relu_backward(g.data(), pre.data(), 2.0, n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(x[i], pre[i] > 0 ? pre[i] : 0.0);
      EXPECT_EQ(g[i], pre[i] > 0 ? 2.0 * g0[i] : 0.0);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Backends, KernelsTest, ::testing::Values(simd::Backend::Scalar, simd::Backend::Avx2),
                         [](const auto& info) { return std::string(simd::backend_name(info.param)); });

TEST(KernelDispatch, SwitchingBackends) {
  const auto original = simd::active_backend();
  simd::set_backend(simd::Backend::Scalar);
  EXPECT_EQ(simd::active_backend(), simd::Backend::Scalar);
  EXPECT_EQ(&simd::kernels(), &simd::scalar_table());
  if (simd::avx2_supported()) {
    simd::set_backend(simd::Backend::Avx2);
    EXPECT_EQ(simd::active_backend(), simd::Backend::Avx2);
    EXPECT_EQ(&simd::kernels(), simd::avx2_table());
  }
  simd::set_backend(original);
}

TEST(KernelDispatch, BackendsAgreeOnLargeProduct) {
  if (!simd::avx2_supported()) GTEST_SKIP();
  Rng rng(5);
  const std::size_t m = 32, k = 32, n = 200;
  const auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
  std::vector<double> c1(m * n, 0.0), c2(m * n, 0.0);
  simd::scalar_table().matmul_acc(a.data(), b.data(), c1.data(), m, k, n);
  simd::avx2_table()->matmul_acc(a.data(), b.data(), c2.data(), m, k, n);
  expect_close(c2, c1, 1e-13);
}
