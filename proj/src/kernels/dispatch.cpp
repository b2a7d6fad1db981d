#include <atomic>
#include <cstdlib>
#include <string_view>

#include "duellab/error.hpp"
#include "duellab/simd.hpp"

namespace duellab::simd {

#ifndef DUELLAB_HAVE_AVX2
const KernelTable* avx2_table() noexcept { return nullptr; }
#endif

bool avx2_supported() noexcept {
#if defined(DUELLAB_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Backend initial_backend() noexcept {
  if (const char* env = std::getenv("DUELLAB_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return Backend::Scalar;
  }
  return avx2_supported() ? Backend::Avx2 : Backend::Scalar;
}

const KernelTable* table_for(Backend b) noexcept {
  if (b == Backend::Avx2 && avx2_supported()) return avx2_table();
  return &scalar_table();
}

struct Active {
  std::atomic<Backend> backend;
  std::atomic<const KernelTable*> table;
};

Active& active() noexcept {
  static Active slot{initial_backend(), table_for(initial_backend())};
  return slot;
}

}  // namespace

Backend active_backend() noexcept { return active().backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2_supported()) throw ConfigError("AVX2 backend requested but not supported here");
  active().backend.store(b, std::memory_order_relaxed);
  active().table.store(table_for(b), std::memory_order_relaxed);
}

std::string_view backend_name(Backend b) noexcept { return b == Backend::Avx2 ? "avx2" : "scalar"; }

const KernelTable& kernels() noexcept { return *active().table.load(std::memory_order_relaxed); }

}  // namespace duellab::simd
