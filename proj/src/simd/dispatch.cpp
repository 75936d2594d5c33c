#include <atomic>
#include <cstdlib>
#include <string_view>

#include "scvi/simd/kernels.hpp"

namespace scvi::simd {

#if defined(SCVI_HAVE_AVX2_TU)
const KernelTable& avx2_kernel_table() noexcept;
#endif

namespace {

bool cpu_has_avx2() noexcept {
#if defined(SCVI_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* detect() noexcept {
  const char* forced = std::getenv("SCVI_ISA");
  if (forced != nullptr && std::string_view(forced) == "scalar") return &scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active() noexcept {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

const KernelTable* avx2_kernels() noexcept {
#if defined(SCVI_HAVE_AVX2_TU)
  static const bool supported = cpu_has_avx2();
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& kernels() noexcept { return *active().load(std::memory_order_acquire); }

bool select_isa(Isa isa) noexcept {
  const KernelTable* table = isa == Isa::Scalar ? &scalar_kernels() : avx2_kernels();
  if (table == nullptr) return false;
  active().store(table, std::memory_order_release);
  return true;
}

}  // namespace scvi::simd
