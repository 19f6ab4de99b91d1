#pragma once

// Dense inner-loop kernels shared by the tensor engine.
//
// Every routine has a scalar reference implementation (namespace
// `scalar`) and, on x86-64, an AVX2+FMA implementation (namespace
// `avx2`). The free functions in `uechecker::simd` dispatch at runtime
// according to active_isa(). All matrices are row-major.

#include <cstddef>

#include "uechecker/simd/cpu_features.hpp"

namespace uechecker::simd {

/// C[M x N] (+)= A[M x K] * B[K x N]. Leading dimensions are row strides.
/// When `accumulate` is false C is overwritten.
template <typename T>
struct GemmArgs {
  std::size_t m = 0, n = 0, k = 0;
  const T* a = nullptr;
  std::size_t lda = 0;
  const T* b = nullptr;
  std::size_t ldb = 0;
  T* c = nullptr;
  std::size_t ldc = 0;
  bool accumulate = false;
};

namespace scalar {
void gemm(const GemmArgs<float>& g);
void gemm(const GemmArgs<double>& g);
float dot(const float* x, const float* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
void gemm(const GemmArgs<float>& g);
void gemm(const GemmArgs<double>& g);
float dot(const float* x, const float* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

void gemm(const GemmArgs<float>& g);
void gemm(const GemmArgs<double>& g);
float dot(const float* x, const float* y, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
// y += alpha * x
void axpy(float alpha, const float* x, float* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);

}  // namespace uechecker::simd
