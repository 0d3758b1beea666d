#include <atomic>

#include "ynet/kernels.hpp"

namespace ynet::kernels {

namespace {
std::atomic<bool> g_force_scalar{false};
}

#ifndef YNET_AVX2_BUILD
const Backend* avx2_backend() { return nullptr; }
#endif

void set_force_scalar(bool force) { g_force_scalar.store(force); }

const Backend& active_backend() {
  if (!g_force_scalar.load()) {
    if (const Backend* b = avx2_backend()) return *b;
  }
  return scalar_backend();
}

bool simd_active() { return &active_backend() != &scalar_backend(); }

}  // namespace ynet::kernels
