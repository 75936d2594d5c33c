#pragma once

// Vector kernels for the inner loops of message passing and the stochastic
// statistic updates. Each kernel has a scalar reference implementation and,
// on x86-64, an AVX2/FMA implementation; the active table is chosen once at
// first use from CPUID, or forced with SCVI_ISA=scalar.

#include <cstddef>
#include <string_view>

namespace scvi::simd {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// y = keep * y + gain * x
  void (*blend)(double keep, double gain, const double* x, double* y, std::size_t n);
  /// out = a * b elementwise
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  /// x *= s
  void (*scale)(double s, double* x, std::size_t n);
  /// y += s * a * b elementwise
  void (*scaled_mul_add)(double s, const double* a, const double* b, double* y, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;

/// AVX2 table, or nullptr when not compiled in or unsupported by this CPU.
const KernelTable* avx2_kernels() noexcept;

/// Active table.
const KernelTable& kernels() noexcept;

/// Overrides the active table; returns false if the ISA is unavailable.
bool select_isa(Isa isa) noexcept;

}  // namespace scvi::simd
