#include "bellow/simd/kernels.hpp"

namespace bellow::simd {
namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_one_minus_sq(const double* h, double* g, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) g[i] *= 1.0 - h[i] * h[i];
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{Isa::scalar, axpy, dot, sum, mul, mul_one_minus_sq, squared_distance};
  return k;
}

}  // namespace bellow::simd
