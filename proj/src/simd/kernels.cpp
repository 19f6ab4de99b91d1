#include "uechecker/simd/kernels.hpp"

namespace uechecker::simd {

namespace {
bool use_avx2() { return active_isa() == Isa::kAvx2; }
}  // namespace

void gemm(const GemmArgs<float>& g) { use_avx2() ? avx2::gemm(g) : scalar::gemm(g); }
void gemm(const GemmArgs<double>& g) { use_avx2() ? avx2::gemm(g) : scalar::gemm(g); }

float dot(const float* x, const float* y, std::size_t n) {
  return use_avx2() ? avx2::dot(x, y, n) : scalar::dot(x, y, n);
}
double dot(const double* x, const double* y, std::size_t n) {
  return use_avx2() ? avx2::dot(x, y, n) : scalar::dot(x, y, n);
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  use_avx2() ? avx2::axpy(alpha, x, y, n) : scalar::axpy(alpha, x, y, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  use_avx2() ? avx2::axpy(alpha, x, y, n) : scalar::axpy(alpha, x, y, n);
}

}  // namespace uechecker::simd
