#include "uechecker/autograd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uechecker/autograd/rng.hpp"
#include "uechecker/simd/kernels.hpp"

namespace uechecker::ag {

using detail::check_finite;
using detail::make_result;

namespace {

template <typename T>
using NodeP = std::shared_ptr<Node<T>>;

template <typename T>
void require_same(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ShapeMismatch(op, a.shape(), b.shape());
}

// (outer, len, inner) view of an axis.
struct AxisView {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis, const char* op) {
  if (axis >= s.size()) throw ShapeMismatch(std::string(op) + ": axis out of range for shape " + shape_str(s));
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out.push_back(s[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

template <typename T, typename F, typename D>
Tensor<T> unary(const Tensor<T>& x, const char* op, F f, D df) {
  check_finite<T>({&x}, op);
  std::vector<T> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  auto px = x.node();
  return make_result<T>(x.shape(), std::move(out), {px}, op, [px, df](Node<T>& self) {
    auto& gx = px->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * df(px->value[i], self.value[i]);
  });
}

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  simd::GemmArgs<T> g;
  g.m = m;
  g.n = n;
  g.k = k;
  g.a = a;
  g.lda = k;
  g.b = b;
  g.ldb = n;
  g.c = c;
  g.ldc = n;
  g.accumulate = accumulate;
  simd::gemm(g);
}

template <typename T>
std::vector<T> transposed(const T* src, std::size_t rows, std::size_t cols) {
  std::vector<T> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = src[i * cols + j];
  }
  return out;
}

// C[m x n] += A[m x k] * B^T where B is [n x k].
template <typename T>
void gemm_bt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  auto bt = transposed(b, n, k);
  gemm(m, n, k, a, bt.data(), c, true);
}

// C[k x n] += A^T * B where A is [m x k], B is [m x n].
template <typename T>
void gemm_at(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  auto at = transposed(a, m, k);
  gemm(k, n, m, at.data(), b, c, true);
}

}  // namespace

// ---------------------------------------------------------------- elementwise

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same("add", a, b);
  check_finite<T>({&a, &b}, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  auto pa = a.node();
  auto pb = b.node();
  return make_result<T>(a.shape(), std::move(out), {pa, pb}, "add", [pa, pb](Node<T>& self) {
    if (pa->requires_grad) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      auto& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same("sub", a, b);
  check_finite<T>({&a, &b}, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  auto pa = a.node();
  auto pb = b.node();
  return make_result<T>(a.shape(), std::move(out), {pa, pb}, "sub", [pa, pb](Node<T>& self) {
    if (pa->requires_grad) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      auto& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same("mul", a, b);
  check_finite<T>({&a, &b}, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  auto pa = a.node();
  auto pb = b.node();
  return make_result<T>(a.shape(), std::move(out), {pa, pb}, "mul", [pa, pb](Node<T>& self) {
    if (pa->requires_grad) {
      auto& g = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      auto& g = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa->value[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T s) {
  return unary<T>(
      x, "scale", [s](T v) { return v * s; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T s) {
  return unary<T>(
      x, "add_scalar", [s](T v) { return v + s; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> scale_by(const Tensor<T>& x, const Tensor<T>& s) {
  if (s.numel() != 1) throw ShapeMismatch("scale_by", x.shape(), s.shape());
  check_finite<T>({&x, &s}, "scale_by");
  const T k = s.data()[0];
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * k;
  auto px = x.node();
  auto ps = s.node();
  return make_result<T>(x.shape(), std::move(out), {px, ps}, "scale_by", [px, ps](Node<T>& self) {
    const T k = ps->value[0];
    if (px->requires_grad) {
      auto& g = px->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * k;
    }
    if (ps->requires_grad) {
      T acc = T(0);
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * px->value[i];
      ps->grad_buffer()[0] += acc;
    }
  });
}

template <typename T>
Tensor<T> add_rowvec(const Tensor<T>& x, const Tensor<T>& v) {
  const std::size_t c = x.shape().back();
  if (v.numel() != c) throw ShapeMismatch("add_rowvec", x.shape(), v.shape());
  check_finite<T>({&x, &v}, "add_rowvec");
  const std::size_t rows = x.numel() / c;
  std::vector<T> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = x.data()[r * c + j] + v.data()[j];
  }
  auto px = x.node();
  auto pv = v.node();
  return make_result<T>(x.shape(), std::move(out), {px, pv}, "add_rowvec", [px, pv, rows, c](Node<T>& self) {
    if (px->requires_grad) {
      auto& g = px->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pv->requires_grad) {
      auto& g = pv->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[r * c + j];
      }
    }
  });
}

template <typename T>
Tensor<T> mul_rowvec(const Tensor<T>& x, const Tensor<T>& v) {
  const std::size_t c = x.shape().back();
  if (v.numel() != c) throw ShapeMismatch("mul_rowvec", x.shape(), v.shape());
  check_finite<T>({&x, &v}, "mul_rowvec");
  const std::size_t rows = x.numel() / c;
  std::vector<T> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = x.data()[r * c + j] * v.data()[j];
  }
  auto px = x.node();
  auto pv = v.node();
  return make_result<T>(x.shape(), std::move(out), {px, pv}, "mul_rowvec", [px, pv, rows, c](Node<T>& self) {
    if (px->requires_grad) {
      auto& g = px->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) g[r * c + j] += self.grad[r * c + j] * pv->value[j];
      }
    }
    if (pv->requires_grad) {
      auto& g = pv->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[r * c + j] * px->value[r * c + j];
      }
    }
  });
}

// ---------------------------------------------------------------- unary

template <typename T>
Tensor<T> exp(const Tensor<T>& x) {
  return unary<T>(
      x, "exp", [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
  return unary<T>(
      x, "log", [](T v) { return std::log(v); }, [](T v, T) { return T(1) / v; });
}

template <typename T>
Tensor<T> sqrt(const Tensor<T>& x) {
  return unary<T>(
      x, "sqrt", [](T v) { return std::sqrt(v); }, [](T, T y) { return T(0.5) / y; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary<T>(
      x, "relu", [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T kInvSqrt2 = T(0.70710678118654752440);
  constexpr T kInvSqrt2Pi = T(0.39894228040143267794);
  return unary<T>(
      x, "gelu", [](T v) { return T(0.5) * v * (T(1) + std::erf(v * kInvSqrt2)); },
      [](T v, T) {
        const T cdf = T(0.5) * (T(1) + std::erf(v * kInvSqrt2));
        const T pdf = kInvSqrt2Pi * std::exp(T(-0.5) * v * v);
        return cdf + v * pdf;
      });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary<T>(
      x, "sigmoid",
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  return unary<T>(
      x, "clamp", [lo, hi](T v) { return std::clamp(v, lo, hi); },
      [lo, hi](T v, T) { return (v >= lo && v <= hi) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> glu(const Tensor<T>& x) {
  const std::size_t c2 = x.shape().back();
  if (c2 % 2 != 0) throw ShapeMismatch("glu: last axis must be even, got " + shape_str(x.shape()));
  check_finite<T>({&x}, "glu");
  const std::size_t c = c2 / 2;
  const std::size_t rows = x.numel() / c2;
  Shape shape = x.shape();
  shape.back() = c;
  std::vector<T> out(rows * c);
  std::vector<T> gate(rows * c);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < c; ++j) {
      const T b = x.data()[r * c2 + c + j];
      const T s = b >= T(0) ? T(1) / (T(1) + std::exp(-b)) : std::exp(b) / (T(1) + std::exp(b));
      gate[r * c + j] = s;
      out[r * c + j] = x.data()[r * c2 + j] * s;
    }
  }
  auto px = x.node();
  return make_result<T>(std::move(shape), std::move(out), {px}, "glu",
                        [px, gate = std::move(gate), rows, c, c2](Node<T>& self) {
                          auto& g = px->grad_buffer();
                          for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t j = 0; j < c; ++j) {
                              const T dy = self.grad[r * c + j];
                              const T s = gate[r * c + j];
                              const T a = px->value[r * c2 + j];
                              g[r * c2 + j] += dy * s;
                              g[r * c2 + c + j] += dy * a * s * (T(1) - s);
                            }
                          }
                        });
}

// ---------------------------------------------------------------- reductions

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  check_finite<T>({&x}, "sum");
  T acc = T(0);
  for (T v : x.data()) acc += v;
  auto px = x.node();
  return make_result<T>({1}, {acc}, {px}, "sum", [px](Node<T>& self) {
    auto& g = px->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  const T n = static_cast<T>(x.numel());
  return scale(sum(x), T(1) / n);
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x, std::size_t axis) {
  check_finite<T>({&x}, "sum_axis");
  const auto v = axis_view(x.shape(), axis, "sum");
  std::vector<T> out(v.outer * v.inner, T(0));
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t l = 0; l < v.len; ++l) {
      const T* src = x.data().data() + (o * v.len + l) * v.inner;
      T* dst = out.data() + o * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) dst[i] += src[i];
    }
  }
  auto px = x.node();
  return make_result<T>(drop_axis(x.shape(), axis), std::move(out), {px}, "sum_axis", [px, v](Node<T>& self) {
    auto& g = px->grad_buffer();
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t l = 0; l < v.len; ++l) {
        for (std::size_t i = 0; i < v.inner; ++i) g[(o * v.len + l) * v.inner + i] += self.grad[o * v.inner + i];
      }
    }
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, std::size_t axis) {
  const T n = static_cast<T>(x.shape().at(axis));
  return scale(sum(x, axis), T(1) / n);
}

template <typename T>
Tensor<T> max_pool_over_axis(const Tensor<T>& x, std::size_t axis) {
  check_finite<T>({&x}, "max_pool");
  const auto v = axis_view(x.shape(), axis, "max_pool");
  if (v.len == 0) throw ShapeMismatch("max_pool over empty axis of " + shape_str(x.shape()));
  std::vector<T> out(v.outer * v.inner);
  std::vector<std::size_t> arg(v.outer * v.inner);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      std::size_t best = o * v.len * v.inner + i;
      for (std::size_t l = 1; l < v.len; ++l) {
        const std::size_t idx = (o * v.len + l) * v.inner + i;
        if (x.data()[idx] > x.data()[best]) best = idx;
      }
      out[o * v.inner + i] = x.data()[best];
      arg[o * v.inner + i] = best;
    }
  }
  auto px = x.node();
  return make_result<T>(drop_axis(x.shape(), axis), std::move(out), {px}, "max_pool",
                        [px, arg = std::move(arg)](Node<T>& self) {
                          auto& g = px->grad_buffer();
                          for (std::size_t i = 0; i < arg.size(); ++i) g[arg[i]] += self.grad[i];
                        });
}

template <typename T>
Tensor<T> masked_max_pool_nodes(const Tensor<T>& x, const std::vector<std::uint8_t>& mask) {
  if (x.rank() != 3) throw ShapeMismatch("masked_max_pool_nodes expects [B, N, C], got " + shape_str(x.shape()));
  const std::size_t b = x.dim(0), n = x.dim(1), c = x.dim(2);
  if (mask.size() != b * n) throw ShapeMismatch("masked_max_pool_nodes", x.shape(), {b, n});
  check_finite<T>({&x}, "masked_max_pool_nodes");
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<T> out(b * c, T(0));
  std::vector<std::size_t> arg(b * c, kNone);
  for (std::size_t bi = 0; bi < b; ++bi) {
    for (std::size_t j = 0; j < c; ++j) {
      T best = -std::numeric_limits<T>::infinity();
      for (std::size_t ni = 0; ni < n; ++ni) {
        if (!mask[bi * n + ni]) continue;
        const std::size_t idx = (bi * n + ni) * c + j;
        if (arg[bi * c + j] == kNone || x.data()[idx] > best) {
          best = x.data()[idx];
          arg[bi * c + j] = idx;
        }
      }
      if (arg[bi * c + j] != kNone) out[bi * c + j] = best;
    }
  }
  auto px = x.node();
  return make_result<T>({b, c}, std::move(out), {px}, "masked_max_pool_nodes",
                        [px, arg = std::move(arg)](Node<T>& self) {
                          auto& g = px->grad_buffer();
                          for (std::size_t i = 0; i < arg.size(); ++i) {
                            if (arg[i] != std::numeric_limits<std::size_t>::max()) g[arg[i]] += self.grad[i];
                          }
                        });
}

// ---------------------------------------------------------------- shape

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) throw ShapeMismatch("reshape", x.shape(), shape);
  std::vector<T> out(x.data().begin(), x.data().end());
  auto px = x.node();
  return make_result<T>(std::move(shape), std::move(out), {px}, "reshape", [px](Node<T>& self) {
    auto& g = px->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  if (x.rank() < 2) throw ShapeMismatch("transpose needs rank >= 2, got " + shape_str(x.shape()));
  const std::size_t r = x.shape()[x.rank() - 2];
  const std::size_t c = x.shape().back();
  const std::size_t batch = x.numel() / (r * c);
  Shape shape = x.shape();
  std::swap(shape[shape.size() - 1], shape[shape.size() - 2]);
  std::vector<T> out(x.numel());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) out[b * r * c + j * r + i] = x.data()[b * r * c + i * c + j];
    }
  }
  auto px = x.node();
  return make_result<T>(std::move(shape), std::move(out), {px}, "transpose", [px, batch, r, c](Node<T>& self) {
    auto& g = px->grad_buffer();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) g[b * r * c + i * c + j] += self.grad[b * r * c + j * r + i];
      }
    }
  });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeMismatch("concat of zero tensors");
  const Shape& base = parts.front().shape();
  Shape shape = base;
  shape.at(axis) = 0;
  std::vector<std::size_t> lens;
  std::vector<NodeP<T>> parents;
  for (const auto& p : parts) {
    if (p.rank() != base.size()) throw ShapeMismatch("concat", base, p.shape());
    for (std::size_t d = 0; d < base.size(); ++d) {
      if (d != axis && p.shape()[d] != base[d]) throw ShapeMismatch("concat", base, p.shape());
    }
    check_finite<T>({&p}, "concat");
    lens.push_back(p.shape()[axis]);
    shape[axis] += p.shape()[axis];
    parents.push_back(p.node());
  }
  const auto v = axis_view(shape, axis, "concat");
  std::vector<T> out(shape_numel(shape));
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t chunk = lens[k] * v.inner;
    for (std::size_t o = 0; o < v.outer; ++o) {
      std::copy_n(parts[k].data().data() + o * chunk, chunk, out.data() + o * v.len * v.inner + offset);
    }
    offset += chunk;
  }
  auto nodes = parents;
  return make_result<T>(std::move(shape), std::move(out), std::move(parents), "concat",
                        [nodes, lens, v](Node<T>& self) {
                          std::size_t offset = 0;
                          for (std::size_t k = 0; k < nodes.size(); ++k) {
                            const std::size_t chunk = lens[k] * v.inner;
                            if (nodes[k]->requires_grad) {
                              auto& g = nodes[k]->grad_buffer();
                              for (std::size_t o = 0; o < v.outer; ++o) {
                                const T* src = self.grad.data() + o * v.len * v.inner + offset;
                                for (std::size_t i = 0; i < chunk; ++i) g[o * chunk + i] += src[i];
                              }
                            }
                            offset += chunk;
                          }
                        });
}

template <typename T>
Tensor<T> slice_last(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  const std::size_t c = x.shape().back();
  if (begin > end || end > c) throw ShapeMismatch("slice_last [" + std::to_string(begin) + ", " +
                                                  std::to_string(end) + ") of " + shape_str(x.shape()));
  const std::size_t rows = x.numel() / c;
  const std::size_t w = end - begin;
  Shape shape = x.shape();
  shape.back() = w;
  std::vector<T> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(x.data().data() + r * c + begin, w, out.data() + r * w);
  auto px = x.node();
  return make_result<T>(std::move(shape), std::move(out), {px}, "slice_last", [px, rows, c, w, begin](Node<T>& self) {
    auto& g = px->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < w; ++j) g[r * c + begin + j] += self.grad[r * w + j];
    }
  });
}

template <typename T>
Tensor<T> masked_fill(const Tensor<T>& x, const std::vector<std::uint8_t>& mask, T value) {
  if (mask.size() != x.numel()) throw ShapeMismatch("masked_fill", x.shape(), {mask.size()});
  std::vector<T> out(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i]) out[i] = value;
  }
  auto px = x.node();
  return make_result<T>(x.shape(), std::move(out), {px}, "masked_fill", [px, mask](Node<T>& self) {
    auto& g = px->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!mask[i]) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mask_rows(const Tensor<T>& x, const std::vector<std::uint8_t>& mask) {
  const std::size_t c = x.shape().back();
  const std::size_t rows = x.numel() / c;
  if (mask.size() != rows) throw ShapeMismatch("mask_rows", x.shape(), {mask.size()});
  std::vector<T> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    std::copy_n(x.data().data() + r * c, c, out.data() + r * c);
  }
  auto px = x.node();
  return make_result<T>(x.shape(), std::move(out), {px}, "mask_rows", [px, mask, c](Node<T>& self) {
    auto& g = px->grad_buffer();
    for (std::size_t r = 0; r < mask.size(); ++r) {
      if (!mask[r]) continue;
      for (std::size_t j = 0; j < c; ++j) g[r * c + j] += self.grad[r * c + j];
    }
  });
}

// ---------------------------------------------------------------- linear algebra

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) throw ShapeMismatch("matmul", a.shape(), b.shape());
  check_finite<T>({&a, &b}, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(m * n);
  gemm(m, n, k, a.data().data(), b.data().data(), out.data(), false);
  auto pa = a.node();
  auto pb = b.node();
  return make_result<T>({m, n}, std::move(out), {pa, pb}, "matmul", [pa, pb, m, n, k](Node<T>& self) {
    if (pa->requires_grad) gemm_bt(m, k, n, self.grad.data(), pb->value.data(), pa->grad_buffer().data());
    if (pb->requires_grad) gemm_at(m, n, k, pa->value.data(), self.grad.data(), pb->grad_buffer().data());
  });
}

template <typename T>
Tensor<T> batched_matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    throw ShapeMismatch("batched_matmul", a.shape(), b.shape());
  }
  check_finite<T>({&a, &b}, "batched_matmul");
  const std::size_t bs = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  std::vector<T> out(bs * m * n);
  for (std::size_t i = 0; i < bs; ++i) {
    gemm(m, n, k, a.data().data() + i * m * k, b.data().data() + i * k * n, out.data() + i * m * n, false);
  }
  auto pa = a.node();
  auto pb = b.node();
  return make_result<T>({bs, m, n}, std::move(out), {pa, pb}, "batched_matmul",
                        [pa, pb, bs, m, n, k](Node<T>& self) {
                          for (std::size_t i = 0; i < bs; ++i) {
                            const T* g = self.grad.data() + i * m * n;
                            if (pa->requires_grad) {
                              gemm_bt(m, k, n, g, pb->value.data() + i * k * n, pa->grad_buffer().data() + i * m * k);
                            }
                            if (pb->requires_grad) {
                              gemm_at(m, n, k, pa->value.data() + i * m * k, g, pb->grad_buffer().data() + i * k * n);
                            }
                          }
                        });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  const std::size_t in = x.shape().back();
  if (w.rank() != 2 || w.dim(0) != in) throw ShapeMismatch("linear", x.shape(), w.shape());
  const std::size_t out_f = w.dim(1);
  const bool has_bias = b.defined();
  if (has_bias && b.numel() != out_f) throw ShapeMismatch("linear(bias)", w.shape(), b.shape());
  check_finite<T>({&x, &w, has_bias ? &b : nullptr}, "linear");
  const std::size_t rows = x.numel() / in;
  Shape shape = x.shape();
  shape.back() = out_f;
  std::vector<T> out(rows * out_f);
  if (has_bias) {
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(b.data().data(), out_f, out.data() + r * out_f);
  }
  gemm(rows, out_f, in, x.data().data(), w.data().data(), out.data(), has_bias);
  auto px = x.node();
  auto pw = w.node();
  std::vector<NodeP<T>> parents{px, pw};
  NodeP<T> pb = has_bias ? b.node() : nullptr;
  if (pb) parents.push_back(pb);
  return make_result<T>(std::move(shape), std::move(out), std::move(parents), "linear",
                        [px, pw, pb, rows, in, out_f](Node<T>& self) {
                          if (px->requires_grad) {
                            gemm_bt(rows, in, out_f, self.grad.data(), pw->value.data(), px->grad_buffer().data());
                          }
                          if (pw->requires_grad) {
                            gemm_at(rows, out_f, in, px->value.data(), self.grad.data(), pw->grad_buffer().data());
                          }
                          if (pb && pb->requires_grad) {
                            auto& g = pb->grad_buffer();
                            for (std::size_t r = 0; r < rows; ++r) {
                              for (std::size_t j = 0; j < out_f; ++j) g[j] += self.grad[r * out_f + j];
                            }
                          }
                        });
}

// ---------------------------------------------------------------- normalization

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  check_finite<T>({&x}, "softmax");
  const auto v = axis_view(x.shape(), axis, "softmax");
  std::vector<T> out(x.numel());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      const std::size_t base = o * v.len * v.inner + i;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t l = 0; l < v.len; ++l) mx = std::max(mx, x.data()[base + l * v.inner]);
      T z = T(0);
      for (std::size_t l = 0; l < v.len; ++l) {
        const T e = std::exp(x.data()[base + l * v.inner] - mx);
        out[base + l * v.inner] = e;
        z += e;
      }
      for (std::size_t l = 0; l < v.len; ++l) out[base + l * v.inner] /= z;
    }
  }
  auto px = x.node();
  return make_result<T>(x.shape(), std::move(out), {px}, "softmax", [px, v](Node<T>& self) {
    auto& g = px->grad_buffer();
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t i = 0; i < v.inner; ++i) {
        const std::size_t base = o * v.len * v.inner + i;
        T dot = T(0);
        for (std::size_t l = 0; l < v.len; ++l) dot += self.grad[base + l * v.inner] * self.value[base + l * v.inner];
        for (std::size_t l = 0; l < v.len; ++l) {
          const std::size_t idx = base + l * v.inner;
          g[idx] += self.value[idx] * (self.grad[idx] - dot);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  const std::size_t c = x.shape().back();
  if (gamma.numel() != c || beta.numel() != c) throw ShapeMismatch("layer_norm", x.shape(), gamma.shape());
  check_finite<T>({&x, &gamma, &beta}, "layer_norm");
  const std::size_t rows = x.numel() / c;
  std::vector<T> out(x.numel());
  std::vector<T> xhat(x.numel());
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data().data() + r * c;
    T mu = T(0);
    for (std::size_t j = 0; j < c; ++j) mu += xr[j];
    mu /= static_cast<T>(c);
    T var = T(0);
    for (std::size_t j = 0; j < c; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<T>(c);
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < c; ++j) {
      const T h = (xr[j] - mu) * is;
      xhat[r * c + j] = h;
      out[r * c + j] = h * gamma.data()[j] + beta.data()[j];
    }
  }
  auto px = x.node();
  auto pg = gamma.node();
  auto pb = beta.node();
  return make_result<T>(
      x.shape(), std::move(out), {px, pg, pb}, "layer_norm",
      [px, pg, pb, xhat = std::move(xhat), inv_std = std::move(inv_std), rows, c](Node<T>& self) {
        if (pg->requires_grad || pb->requires_grad) {
          auto& gg = pg->grad_buffer();
          auto& gb = pb->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < c; ++j) {
              gg[j] += self.grad[r * c + j] * xhat[r * c + j];
              gb[j] += self.grad[r * c + j];
            }
          }
        }
        if (!px->requires_grad) return;
        auto& gx = px->grad_buffer();
        const T inv_c = T(1) / static_cast<T>(c);
        for (std::size_t r = 0; r < rows; ++r) {
          T sum_d = T(0), sum_dx = T(0);
          for (std::size_t j = 0; j < c; ++j) {
            const T d = self.grad[r * c + j] * pg->value[j];
            sum_d += d;
            sum_dx += d * xhat[r * c + j];
          }
          for (std::size_t j = 0; j < c; ++j) {
            const T d = self.grad[r * c + j] * pg->value[j];
            gx[r * c + j] += inv_std[r] * (d - inv_c * sum_d - xhat[r * c + j] * inv_c * sum_dx);
          }
        }
      });
}

template <typename T>
Tensor<T> batch_norm_1d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                        BatchNormState<T>& state, bool train) {
  if (x.rank() != 2) throw ShapeMismatch("batch_norm_1d expects [R, C], got " + shape_str(x.shape()));
  const std::size_t rows = x.dim(0), c = x.dim(1);
  if (gamma.numel() != c || beta.numel() != c || state.running_mean.size() != c) {
    throw ShapeMismatch("batch_norm_1d", x.shape(), gamma.shape());
  }
  check_finite<T>({&x, &gamma, &beta}, "batch_norm_1d");
  const bool use_batch = train && rows > 1;
  std::vector<T> mean(c, T(0)), inv_std(c);
  if (use_batch) {
    std::vector<T> var(c, T(0));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < c; ++j) mean[j] += x.data()[r * c + j];
    }
    for (auto& m : mean) m /= static_cast<T>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < c; ++j) {
        const T d = x.data()[r * c + j] - mean[j];
        var[j] += d * d;
      }
    }
    for (std::size_t j = 0; j < c; ++j) {
      const T biased = var[j] / static_cast<T>(rows);
      inv_std[j] = T(1) / std::sqrt(biased + state.eps);
      const T unbiased = var[j] / static_cast<T>(rows - 1);
      state.running_mean[j] = (T(1) - state.momentum) * state.running_mean[j] + state.momentum * mean[j];
      state.running_var[j] = (T(1) - state.momentum) * state.running_var[j] + state.momentum * unbiased;
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      mean[j] = state.running_mean[j];
      inv_std[j] = T(1) / std::sqrt(state.running_var[j] + state.eps);
    }
  }
  std::vector<T> xhat(x.numel()), out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < c; ++j) {
      const T h = (x.data()[r * c + j] - mean[j]) * inv_std[j];
      xhat[r * c + j] = h;
      out[r * c + j] = h * gamma.data()[j] + beta.data()[j];
    }
  }
  auto px = x.node();
  auto pg = gamma.node();
  auto pb = beta.node();
  return make_result<T>(
      x.shape(), std::move(out), {px, pg, pb}, "batch_norm_1d",
      [px, pg, pb, xhat = std::move(xhat), inv_std = std::move(inv_std), rows, c, use_batch](Node<T>& self) {
        if (pg->requires_grad || pb->requires_grad) {
          auto& gg = pg->grad_buffer();
          auto& gb = pb->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < c; ++j) {
              gg[j] += self.grad[r * c + j] * xhat[r * c + j];
              gb[j] += self.grad[r * c + j];
            }
          }
        }
        if (!px->requires_grad) return;
        auto& gx = px->grad_buffer();
        if (!use_batch) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += self.grad[r * c + j] * pg->value[j] * inv_std[j];
          }
          return;
        }
        const T inv_n = T(1) / static_cast<T>(rows);
        std::vector<T> sum_d(c, T(0)), sum_dx(c, T(0));
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < c; ++j) {
            const T d = self.grad[r * c + j] * pg->value[j];
            sum_d[j] += d;
            sum_dx[j] += d * xhat[r * c + j];
          }
        }
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < c; ++j) {
            const T d = self.grad[r * c + j] * pg->value[j];
            gx[r * c + j] += inv_std[j] * (d - inv_n * sum_d[j] - xhat[r * c + j] * inv_n * sum_dx[j]);
          }
        }
      });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, T p, bool train, std::uint64_t key) {
  if (!(p >= T(0) && p < T(1))) throw std::invalid_argument("dropout probability must be in [0, 1)");
  if (!train || p == T(0)) return x;
  check_finite<T>({&x}, "dropout");
  const T keep_scale = T(1) / (T(1) - p);
  std::vector<T> factor(x.numel());
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    factor[i] = hashed_uniform(key, i) < static_cast<double>(p) ? T(0) : keep_scale;
    out[i] = x.data()[i] * factor[i];
  }
  auto px = x.node();
  return make_result<T>(x.shape(), std::move(out), {px}, "dropout", [px, factor = std::move(factor)](Node<T>& self) {
    auto& g = px->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor[i];
  });
}

template <typename T>
std::vector<std::size_t> argmax_rows(const Tensor<T>& x) {
  const std::size_t c = x.shape().back();
  const std::size_t rows = x.numel() / c;
  std::vector<std::size_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = x.data().data() + r * c;
    out[r] = static_cast<std::size_t>(std::max_element(row, row + c) - row);
  }
  return out;
}

template <typename T>
std::vector<std::size_t> argmin_rows(const Tensor<T>& x) {
  const std::size_t c = x.shape().back();
  const std::size_t rows = x.numel() / c;
  std::vector<std::size_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = x.data().data() + r * c;
    out[r] = static_cast<std::size_t>(std::min_element(row, row + c) - row);
  }
  return out;
}

#define UECHECKER_INSTANTIATE_OPS(T)                                                                   \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> scale(const Tensor<T>&, T);                                                       \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                                  \
  template Tensor<T> scale_by(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> add_rowvec(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> mul_rowvec(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> exp(const Tensor<T>&);                                                            \
  template Tensor<T> log(const Tensor<T>&);                                                            \
  template Tensor<T> sqrt(const Tensor<T>&);                                                           \
  template Tensor<T> relu(const Tensor<T>&);                                                           \
  template Tensor<T> gelu(const Tensor<T>&);                                                           \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                        \
  template Tensor<T> clamp(const Tensor<T>&, T, T);                                                    \
  template Tensor<T> glu(const Tensor<T>&);                                                            \
  template Tensor<T> sum(const Tensor<T>&);                                                            \
  template Tensor<T> mean(const Tensor<T>&);                                                           \
  template Tensor<T> sum(const Tensor<T>&, std::size_t);                                               \
  template Tensor<T> mean(const Tensor<T>&, std::size_t);                                              \
  template Tensor<T> max_pool_over_axis(const Tensor<T>&, std::size_t);                                \
  template Tensor<T> masked_max_pool_nodes(const Tensor<T>&, const std::vector<std::uint8_t>&);        \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                 \
  template Tensor<T> transpose(const Tensor<T>&);                                                      \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                               \
  template Tensor<T> slice_last(const Tensor<T>&, std::size_t, std::size_t);                           \
  template Tensor<T> masked_fill(const Tensor<T>&, const std::vector<std::uint8_t>&, T);               \
  template Tensor<T> mask_rows(const Tensor<T>&, const std::vector<std::uint8_t>&);                    \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> batched_matmul(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                           \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);              \
  template Tensor<T> batch_norm_1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,               \
                                   BatchNormState<T>&, bool);                                          \
  template Tensor<T> dropout(const Tensor<T>&, T, bool, std::uint64_t);                                \
  template std::vector<std::size_t> argmax_rows(const Tensor<T>&);                                     \
  template std::vector<std::size_t> argmin_rows(const Tensor<T>&);

UECHECKER_INSTANTIATE_OPS(float)
UECHECKER_INSTANTIATE_OPS(double)

}  // namespace uechecker::ag
