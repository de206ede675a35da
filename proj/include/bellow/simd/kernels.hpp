#pragma once

#include <cstddef>
#include <string_view>

namespace bellow::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

// Dense double-precision kernels used by the surrogate's batched forward and
// backward passes. Every variant computes the same quantities; reductions may
// differ in summation order, so results agree to rounding, not bitwise.
struct Kernels {
  Isa isa;
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  // out = x * y, elementwise
  void (*mul)(const double* x, const double* y, double* out, std::size_t n);
  // g *= 1 - h^2  (tanh derivative applied in place)
  void (*mul_one_minus_sq)(const double* h, double* g, std::size_t n);
  // sum (a - b)^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

const Kernels& scalar_kernels();
#if defined(BELLOW_HAVE_AVX2)
const Kernels& avx2_kernels();
#endif
#if defined(BELLOW_HAVE_NEON)
const Kernels& neon_kernels();
#endif

bool isa_supported(Isa isa);
// Kernels for `isa`; falls back to scalar when unsupported.
const Kernels& kernels_for(Isa isa);

// Best supported variant, chosen once. BELLOW_SIMD=scalar|avx2|neon overrides.
const Kernels& active_kernels();

}  // namespace bellow::simd
