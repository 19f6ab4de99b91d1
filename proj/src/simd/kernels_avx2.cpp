// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma;
// callers must only reach it through the runtime dispatcher.

#include "uechecker/simd/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

#include <algorithm>
#include <array>
#include <vector>

namespace uechecker::simd::avx2 {

namespace {

template <typename T>
struct Lanes;

template <>
struct Lanes<float> {
  using V = __m256;
  static constexpr int kWidth = 8;
  static V zero() { return _mm256_setzero_ps(); }
  static V load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, V v) { _mm256_storeu_ps(p, v); }
  static V splat(float x) { return _mm256_set1_ps(x); }
  static V fma(V a, V b, V c) { return _mm256_fmadd_ps(a, b, c); }
  static V add(V a, V b) { return _mm256_add_ps(a, b); }
  static V mul(V a, V b) { return _mm256_mul_ps(a, b); }
  static float hsum(V v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehdup_ps(lo);
    __m128 s = _mm_add_ps(lo, sh);
    sh = _mm_movehl_ps(sh, s);
    s = _mm_add_ss(s, sh);
    return _mm_cvtss_f32(s);
  }
};

template <>
struct Lanes<double> {
  using V = __m256d;
  static constexpr int kWidth = 4;
  static V zero() { return _mm256_setzero_pd(); }
  static V load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, V v) { _mm256_storeu_pd(p, v); }
  static V splat(double x) { return _mm256_set1_pd(x); }
  static V fma(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
  static V add(V a, V b) { return _mm256_add_pd(a, b); }
  static V mul(V a, V b) { return _mm256_mul_pd(a, b); }
  static double hsum(V v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d h = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, h));
  }
};

constexpr int kRowBlock = 6;
constexpr std::size_t kDepthBlock = 256;

// Computes a rows x (2 * lanes) tile of A * panel over `depth` steps.
// `panel` is a packed [depth x 2W] slab of B. Results are written into
// `tile` (row stride 2W) and combined with C by the caller.
template <typename T, int Rows>
void micro_tile(const T* a, std::size_t lda, const T* panel, std::size_t depth, T* tile) {
  using L = Lanes<T>;
  constexpr int W = L::kWidth;
  typename L::V acc0[Rows];
  typename L::V acc1[Rows];
  for (int r = 0; r < Rows; ++r) {
    acc0[r] = L::zero();
    acc1[r] = L::zero();
  }
  for (std::size_t p = 0; p < depth; ++p) {
    const auto b0 = L::load(panel + p * 2 * W);
    const auto b1 = L::load(panel + p * 2 * W + W);
    for (int r = 0; r < Rows; ++r) {
      const auto av = L::splat(a[r * lda + p]);
      acc0[r] = L::fma(av, b0, acc0[r]);
      acc1[r] = L::fma(av, b1, acc1[r]);
    }
  }
  for (int r = 0; r < Rows; ++r) {
    L::store(tile + r * 2 * W, acc0[r]);
    L::store(tile + r * 2 * W + W, acc1[r]);
  }
}

template <typename T>
void run_tile(int rows, const T* a, std::size_t lda, const T* panel, std::size_t depth, T* tile) {
  switch (rows) {
    case 6: micro_tile<T, 6>(a, lda, panel, depth, tile); break;
    case 5: micro_tile<T, 5>(a, lda, panel, depth, tile); break;
    case 4: micro_tile<T, 4>(a, lda, panel, depth, tile); break;
    case 3: micro_tile<T, 3>(a, lda, panel, depth, tile); break;
    case 2: micro_tile<T, 2>(a, lda, panel, depth, tile); break;
    default: micro_tile<T, 1>(a, lda, panel, depth, tile); break;
  }
}

template <typename T>
void gemm_impl(const GemmArgs<T>& g) {
  using L = Lanes<T>;
  constexpr std::size_t NR = 2 * L::kWidth;
  if (g.m == 0 || g.n == 0) return;
  if (g.k == 0) {
    if (!g.accumulate) {
      for (std::size_t i = 0; i < g.m; ++i) std::fill(g.c + i * g.ldc, g.c + i * g.ldc + g.n, T(0));
    }
    return;
  }
  thread_local std::vector<T> panel;
  panel.resize(kDepthBlock * NR);
  std::array<T, kRowBlock * NR> tile{};

  for (std::size_t k0 = 0; k0 < g.k; k0 += kDepthBlock) {
    const std::size_t depth = std::min(kDepthBlock, g.k - k0);
    const bool overwrite = !g.accumulate && k0 == 0;
    for (std::size_t j0 = 0; j0 < g.n; j0 += NR) {
      const std::size_t cols = std::min(NR, g.n - j0);
      for (std::size_t p = 0; p < depth; ++p) {
        const T* src = g.b + (k0 + p) * g.ldb + j0;
        T* dst = panel.data() + p * NR;
        std::size_t j = 0;
        for (; j < cols; ++j) dst[j] = src[j];
        for (; j < NR; ++j) dst[j] = T(0);
      }
      for (std::size_t i0 = 0; i0 < g.m; i0 += kRowBlock) {
        const int rows = static_cast<int>(std::min<std::size_t>(kRowBlock, g.m - i0));
        run_tile<T>(rows, g.a + i0 * g.lda + k0, g.lda, panel.data(), depth, tile.data());
        for (int r = 0; r < rows; ++r) {
          T* c_row = g.c + (i0 + r) * g.ldc + j0;
          const T* t_row = tile.data() + r * NR;
          if (cols == NR) {
            auto lo = L::load(t_row);
            auto hi = L::load(t_row + L::kWidth);
            if (!overwrite) {
              lo = L::add(lo, L::load(c_row));
              hi = L::add(hi, L::load(c_row + L::kWidth));
            }
            L::store(c_row, lo);
            L::store(c_row + L::kWidth, hi);
          } else if (overwrite) {
            for (std::size_t j = 0; j < cols; ++j) c_row[j] = t_row[j];
          } else {
            for (std::size_t j = 0; j < cols; ++j) c_row[j] += t_row[j];
          }
        }
      }
    }
  }
}

template <typename T>
T dot_impl(const T* x, const T* y, std::size_t n) {
  using L = Lanes<T>;
  constexpr std::size_t W = L::kWidth;
  auto acc0 = L::zero();
  auto acc1 = L::zero();
  std::size_t i = 0;
  for (; i + 2 * W <= n; i += 2 * W) {
    acc0 = L::fma(L::load(x + i), L::load(y + i), acc0);
    acc1 = L::fma(L::load(x + i + W), L::load(y + i + W), acc1);
  }
  for (; i + W <= n; i += W) acc0 = L::fma(L::load(x + i), L::load(y + i), acc0);
  T acc = L::hsum(L::add(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename T>
void axpy_impl(T alpha, const T* x, T* y, std::size_t n) {
  using L = Lanes<T>;
  constexpr std::size_t W = L::kWidth;
  const auto a = L::splat(alpha);
  std::size_t i = 0;
  for (; i + W <= n; i += W) L::store(y + i, L::fma(a, L::load(x + i), L::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

void gemm(const GemmArgs<float>& g) { gemm_impl(g); }
void gemm(const GemmArgs<double>& g) { gemm_impl(g); }
float dot(const float* x, const float* y, std::size_t n) { return dot_impl(x, y, n); }
double dot(const double* x, const double* y, std::size_t n) { return dot_impl(x, y, n); }
void axpy(float alpha, const float* x, float* y, std::size_t n) { axpy_impl(alpha, x, y, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { axpy_impl(alpha, x, y, n); }

}  // namespace uechecker::simd::avx2

#else

// Non-x86 builds route every call to the scalar reference.
namespace uechecker::simd::avx2 {
void gemm(const GemmArgs<float>& g) { scalar::gemm(g); }
void gemm(const GemmArgs<double>& g) { scalar::gemm(g); }
float dot(const float* x, const float* y, std::size_t n) { return scalar::dot(x, y, n); }
double dot(const double* x, const double* y, std::size_t n) { return scalar::dot(x, y, n); }
void axpy(float alpha, const float* x, float* y, std::size_t n) { scalar::axpy(alpha, x, y, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { scalar::axpy(alpha, x, y, n); }
}  // namespace uechecker::simd::avx2

#endif
