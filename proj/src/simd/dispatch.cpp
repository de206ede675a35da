#include <cstdlib>
#include <string>

#include "bellow/simd/kernels.hpp"

namespace bellow::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
    case Isa::scalar: break;
  }
  return "scalar";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(BELLOW_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(BELLOW_HAVE_NEON)
      return true;  // mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

const Kernels& kernels_for(Isa isa) {
  if (!isa_supported(isa)) return scalar_kernels();
#if defined(BELLOW_HAVE_AVX2)
  if (isa == Isa::avx2) return avx2_kernels();
#endif
#if defined(BELLOW_HAVE_NEON)
  if (isa == Isa::neon) return neon_kernels();
#endif
  return scalar_kernels();
}

namespace {

const Kernels& select() {
  if (const char* env = std::getenv("BELLOW_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == isa_name(isa)) return kernels_for(isa);
    }
  }
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (isa_supported(isa)) return kernels_for(isa);
  }
  return scalar_kernels();
}

}  // namespace

const Kernels& active_kernels() {
  static const Kernels& k = select();
  return k;
}

}  // namespace bellow::simd
