#include "rfx/kernels.hpp"

namespace rfx::kern {

namespace {

constexpr Dispatch kScalar{
    scalar::dot,   scalar::axpy,  scalar::scale, scalar::add, scalar::mul,
    scalar::sum,   scalar::sumsq, scalar::gemm,  "scalar"};

#if defined(RFX_HAVE_AVX2_BUILD)
constexpr Dispatch kAvx2{avx2::dot,   avx2::axpy,  avx2::scale,
                         avx2::add,   avx2::mul,   avx2::sum,
                         avx2::sumsq, avx2::gemm,  "avx2"};

bool cpu_has_avx2_fma() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const Dispatch* g_active = nullptr;

const Dispatch* detect() {
#if defined(RFX_HAVE_AVX2_BUILD)
  if (cpu_has_avx2_fma()) return &kAvx2;
#endif
  return &kScalar;
}

}  // namespace

const Dispatch& active() {
  if (!g_active) g_active = detect();
  return *g_active;
}

const Dispatch& scalar_table() { return kScalar; }

bool select_backend(std::string_view name) {
  if (name == "scalar") {
    g_active = &kScalar;
    return true;
  }
#if defined(RFX_HAVE_AVX2_BUILD)
  if (name == "avx2" && cpu_has_avx2_fma()) {
    g_active = &kAvx2;
    return true;
  }
#endif
  return false;
}

}  // namespace rfx::kern
