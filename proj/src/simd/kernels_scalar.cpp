#include "uechecker/simd/kernels.hpp"

namespace uechecker::simd::scalar {

namespace {

template <typename T>
void gemm_impl(const GemmArgs<T>& g) {
  for (std::size_t i = 0; i < g.m; ++i) {
    T* c_row = g.c + i * g.ldc;
    if (!g.accumulate) {
      for (std::size_t j = 0; j < g.n; ++j) c_row[j] = T(0);
    }
    const T* a_row = g.a + i * g.lda;
    for (std::size_t p = 0; p < g.k; ++p) {
      const T a = a_row[p];
      const T* b_row = g.b + p * g.ldb;
      for (std::size_t j = 0; j < g.n; ++j) c_row[j] += a * b_row[j];
    }
  }
}

template <typename T>
T dot_impl(const T* x, const T* y, std::size_t n) {
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename T>
void axpy_impl(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

void gemm(const GemmArgs<float>& g) { gemm_impl(g); }
void gemm(const GemmArgs<double>& g) { gemm_impl(g); }
float dot(const float* x, const float* y, std::size_t n) { return dot_impl(x, y, n); }
double dot(const double* x, const double* y, std::size_t n) { return dot_impl(x, y, n); }
void axpy(float alpha, const float* x, float* y, std::size_t n) { axpy_impl(alpha, x, y, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { axpy_impl(alpha, x, y, n); }

}  // namespace uechecker::simd::scalar
