#include "uechecker/autograd/graph_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uechecker/simd/kernels.hpp"

namespace uechecker::ag {

using detail::check_finite;
using detail::make_result;

SegmentLayout SegmentLayout::from_sizes(const std::vector<std::size_t>& sizes) {
  SegmentLayout l;
  for (auto n : sizes) {
    l.offsets_.push_back(l.offsets_.back() + n);
    l.block_offsets_.push_back(l.block_offsets_.back() + n * n);
  }
  return l;
}

namespace {

template <typename T>
void gemm_rows(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
               std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  simd::GemmArgs<T> g;
  g.m = m;
  g.n = n;
  g.k = k;
  g.a = a;
  g.lda = lda;
  g.b = b;
  g.ldb = ldb;
  g.c = c;
  g.ldc = ldc;
  g.accumulate = accumulate;
  simd::gemm(g);
}

}  // namespace

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, const std::vector<std::size_t>& ids) {
  if (table.rank() != 2) throw ShapeMismatch("embedding_lookup expects a [V, C] table, got " + shape_str(table.shape()));
  const std::size_t v = table.dim(0), c = table.dim(1);
  std::vector<T> out(ids.size() * c);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= v) throw std::out_of_range("embedding id out of range");
    std::copy_n(table.data().data() + ids[r] * c, c, out.data() + r * c);
  }
  auto pt = table.node();
  return make_result<T>({ids.size(), c}, std::move(out), {pt}, "embedding_lookup", [pt, ids, c](Node<T>& self) {
    auto& g = pt->grad_buffer();
    for (std::size_t r = 0; r < ids.size(); ++r) {
      for (std::size_t j = 0; j < c; ++j) g[ids[r] * c + j] += self.grad[r * c + j];
    }
  });
}

template <typename T>
Tensor<T> pair_concat(const Tensor<T>& x, const std::vector<ScoredPair>& pairs) {
  if (x.rank() != 2) throw ShapeMismatch("pair_concat expects [R, C], got " + shape_str(x.shape()));
  check_finite<T>({&x}, "pair_concat");
  const std::size_t c = x.dim(1);
  std::vector<T> out(pairs.size() * 2 * c);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    std::copy_n(x.data().data() + pairs[p].row_i * c, c, out.data() + p * 2 * c);
    std::copy_n(x.data().data() + pairs[p].row_j * c, c, out.data() + p * 2 * c + c);
  }
  auto px = x.node();
  return make_result<T>({pairs.size(), 2 * c}, std::move(out), {px}, "pair_concat", [px, pairs, c](Node<T>& self) {
    auto& g = px->grad_buffer();
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const T* src = self.grad.data() + p * 2 * c;
      T* gi = g.data() + pairs[p].row_i * c;
      T* gj = g.data() + pairs[p].row_j * c;
      for (std::size_t k = 0; k < c; ++k) gi[k] += src[k];
      for (std::size_t k = 0; k < c; ++k) gj[k] += src[c + k];
    }
  });
}

template <typename T>
Tensor<T> symmetric_pair_scores(const Tensor<T>& f, const std::vector<ScoredPair>& pairs, T limit) {
  if (f.numel() != pairs.size()) throw ShapeMismatch("symmetric_pair_scores", f.shape(), {pairs.size()});
  check_finite<T>({&f}, "symmetric_pair_scores");
  const std::size_t np = pairs.size();
  std::vector<T> out(np);
  std::vector<std::uint8_t> inside(np);
  for (std::size_t p = 0; p < np; ++p) {
    const std::size_t m = pairs[p].mirror;
    // Sum in (min, max) index order so both members of a pair see the same
    // rounding regardless of which one is evaluated first.
    const std::size_t lo = std::min(p, m), hi = std::max(p, m);
    const T z = T(0.5) * (f.data()[lo] + f.data()[hi]);
    inside[p] = (z > -limit && z < limit) ? 1 : 0;
    out[p] = std::exp(std::clamp(z, -limit, limit));
  }
  auto pf = f.node();
  return make_result<T>({np}, std::move(out), {pf}, "symmetric_pair_scores",
                        [pf, pairs, inside = std::move(inside)](Node<T>& self) {
                          auto& g = pf->grad_buffer();
                          for (std::size_t p = 0; p < pairs.size(); ++p) {
                            if (!inside[p]) continue;
                            const T d = T(0.5) * self.grad[p] * self.value[p];
                            g[p] += d;
                            g[pairs[p].mirror] += d;
                          }
                        });
}

template <typename T>
Tensor<T> assemble_adjacency(const Tensor<T>& scores, const std::vector<ScoredPair>& pairs,
                             const std::vector<T>& original, const SegmentLayout& layout) {
  if (original.size() != layout.block_elements()) {
    throw ShapeMismatch("assemble_adjacency", {original.size()}, {layout.block_elements()});
  }
  const bool has_scores = scores.defined();
  if (has_scores && scores.numel() != pairs.size()) {
    throw ShapeMismatch("assemble_adjacency(scores)", scores.shape(), {pairs.size()});
  }
  std::vector<T> m = original;
  if (has_scores) {
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& pr = pairs[p];
      const std::size_t n = layout.size(pr.segment);
      m[layout.block_offset(pr.segment) + pr.local_i * n + pr.local_j] += scores.data()[p];
    }
  }
  std::vector<T> out(m.size());
  for (std::size_t b = 0; b < layout.segments(); ++b) {
    const std::size_t n = layout.size(b);
    const T* mb = m.data() + layout.block_offset(b);
    T* ob = out.data() + layout.block_offset(b);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) ob[i * n + j] = mb[i * n + j] + mb[j * n + i];
    }
  }
  const std::size_t total = out.size();
  if (!has_scores) return Tensor<T>::from({total}, std::move(out));
  auto ps = scores.node();
  return make_result<T>({total}, std::move(out), {ps}, "assemble_adjacency",
                        [ps, pairs, layout](Node<T>& self) {
                          auto& g = ps->grad_buffer();
                          for (std::size_t p = 0; p < pairs.size(); ++p) {
                            const auto& pr = pairs[p];
                            const std::size_t n = layout.size(pr.segment);
                            const T* gb = self.grad.data() + layout.block_offset(pr.segment);
                            g[p] += gb[pr.local_i * n + pr.local_j] + gb[pr.local_j * n + pr.local_i];
                          }
                        });
}

template <typename T>
Tensor<T> normalize_blocks(const Tensor<T>& blocks, const SegmentLayout& layout) {
  if (blocks.numel() != layout.block_elements()) {
    throw ShapeMismatch("normalize_blocks", blocks.shape(), {layout.block_elements()});
  }
  check_finite<T>({&blocks}, "normalize_blocks");
  std::vector<T> out(blocks.numel());
  std::vector<T> inv_sqrt_deg(layout.rows());
  for (std::size_t b = 0; b < layout.segments(); ++b) {
    const std::size_t n = layout.size(b);
    const T* a = blocks.data().data() + layout.block_offset(b);
    T* o = out.data() + layout.block_offset(b);
    T* s = inv_sqrt_deg.data() + layout.begin(b);
    for (std::size_t i = 0; i < n; ++i) {
      T d = T(1);
      for (std::size_t j = 0; j < n; ++j) d += a[i * n + j];
      s[i] = d > T(0) ? T(1) / std::sqrt(d) : T(0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const T mij = a[i * n + j] + (i == j ? T(1) : T(0));
        o[i * n + j] = mij * (s[i] * s[j]);  // symmetric bit for bit when A is
      }
    }
  }
  auto pb = blocks.node();
  return make_result<T>(
      blocks.shape(), std::move(out), {pb}, "normalize_blocks",
      [pb, layout, inv_sqrt_deg = std::move(inv_sqrt_deg)](Node<T>& self) {
        auto& g = pb->grad_buffer();
        std::vector<T> ds;
        for (std::size_t b = 0; b < layout.segments(); ++b) {
          const std::size_t n = layout.size(b);
          const T* a = pb->value.data() + layout.block_offset(b);
          const T* gy = self.grad.data() + layout.block_offset(b);
          T* ga = g.data() + layout.block_offset(b);
          const T* s = inv_sqrt_deg.data() + layout.begin(b);
          ds.assign(n, T(0));
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              const T mij = a[i * n + j] + (i == j ? T(1) : T(0));
              const T gij = gy[i * n + j];
              ga[i * n + j] += gij * s[i] * s[j];
              ds[i] += gij * mij * s[j];
              ds[j] += gij * s[i] * mij;
            }
          }
          for (std::size_t i = 0; i < n; ++i) {
            // d s_i / d deg_i = -1/2 deg_i^{-3/2} = -1/2 s_i^3
            const T dd = ds[i] * T(-0.5) * s[i] * s[i] * s[i];
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += dd;
          }
        }
      });
}

template <typename T>
Tensor<T> block_propagate(const Tensor<T>& blocks, const Tensor<T>& x, const SegmentLayout& layout) {
  if (blocks.numel() != layout.block_elements() || x.rank() != 2 || x.dim(0) != layout.rows()) {
    throw ShapeMismatch("block_propagate", blocks.shape(), x.shape());
  }
  check_finite<T>({&blocks, &x}, "block_propagate");
  const std::size_t c = x.dim(1);
  std::vector<T> out(x.numel());
  for (std::size_t b = 0; b < layout.segments(); ++b) {
    const std::size_t n = layout.size(b);
    if (n == 0) continue;
    gemm_rows<T>(n, c, n, blocks.data().data() + layout.block_offset(b), n, x.data().data() + layout.begin(b) * c, c,
                 out.data() + layout.begin(b) * c, c, false);
  }
  auto pl = blocks.node();
  auto px = x.node();
  return make_result<T>(x.shape(), std::move(out), {pl, px}, "block_propagate", [pl, px, layout, c](Node<T>& self) {
    std::vector<T> tmp;
    for (std::size_t b = 0; b < layout.segments(); ++b) {
      const std::size_t n = layout.size(b);
      if (n == 0) continue;
      const T* l = pl->value.data() + layout.block_offset(b);
      const T* gy = self.grad.data() + layout.begin(b) * c;
      if (px->requires_grad) {
        // dx = L^T dy
        tmp.resize(n * n);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) tmp[j * n + i] = l[i * n + j];
        }
        gemm_rows<T>(n, c, n, tmp.data(), n, gy, c, px->grad_buffer().data() + layout.begin(b) * c, c, true);
      }
      if (pl->requires_grad) {
        // dL = dy x^T
        T* gl = pl->grad_buffer().data() + layout.block_offset(b);
        const T* xb = px->value.data() + layout.begin(b) * c;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) gl[i * n + j] += simd::dot(gy + i * c, xb + j * c, c);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> segment_attention(const Tensor<T>& qkv, const SegmentLayout& layout, std::size_t heads,
                            std::size_t head_dim, const std::vector<std::uint8_t>& key_mask,
                            std::vector<T>* probs_out) {
  const std::size_t inner = heads * head_dim;
  if (qkv.rank() != 2 || qkv.dim(0) != layout.rows() || qkv.dim(1) != 3 * inner) {
    throw ShapeMismatch("segment_attention", qkv.shape(), {layout.rows(), 3 * inner});
  }
  if (!key_mask.empty() && key_mask.size() != layout.rows()) {
    throw ShapeMismatch("segment_attention(key_mask)", qkv.shape(), {key_mask.size()});
  }
  check_finite<T>({&qkv}, "segment_attention");
  const std::size_t stride = 3 * inner;
  const T scale = T(1) / std::sqrt(static_cast<T>(head_dim));
  std::vector<std::size_t> prob_offsets(layout.segments() + 1, 0);
  for (std::size_t b = 0; b < layout.segments(); ++b) {
    prob_offsets[b + 1] = prob_offsets[b] + heads * layout.size(b) * layout.size(b);
  }
  std::vector<T> probs(prob_offsets.back(), T(0));
  std::vector<T> out(layout.rows() * inner, T(0));
  const T* base = qkv.data().data();
  for (std::size_t b = 0; b < layout.segments(); ++b) {
    const std::size_t n = layout.size(b);
    const std::size_t r0 = layout.begin(b);
    for (std::size_t h = 0; h < heads; ++h) {
      T* pm = probs.data() + prob_offsets[b] + h * n * n;
      for (std::size_t i = 0; i < n; ++i) {
        const T* q = base + (r0 + i) * stride + h * head_dim;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          if (!key_mask.empty() && !key_mask[r0 + j]) continue;
          const T* k = base + (r0 + j) * stride + inner + h * head_dim;
          const T s = simd::dot(q, k, head_dim) * scale;
          pm[i * n + j] = s;
          mx = std::max(mx, s);
        }
        if (mx == -std::numeric_limits<T>::infinity()) continue;
        T z = T(0);
        for (std::size_t j = 0; j < n; ++j) {
          if (!key_mask.empty() && !key_mask[r0 + j]) continue;
          pm[i * n + j] = std::exp(pm[i * n + j] - mx);
          z += pm[i * n + j];
        }
        T* o = out.data() + (r0 + i) * inner + h * head_dim;
        for (std::size_t j = 0; j < n; ++j) {
          if (!key_mask.empty() && !key_mask[r0 + j]) continue;
          pm[i * n + j] /= z;
          simd::axpy(pm[i * n + j], base + (r0 + j) * stride + 2 * inner + h * head_dim, o, head_dim);
        }
      }
    }
  }
  if (probs_out) *probs_out = probs;
  auto pq = qkv.node();
  return make_result<T>(
      {layout.rows(), inner}, std::move(out), {pq}, "segment_attention",
      [pq, layout, heads, head_dim, inner, stride, scale, probs = std::move(probs),
       prob_offsets = std::move(prob_offsets)](Node<T>& self) {
        auto& g = pq->grad_buffer();
        const T* base = pq->value.data();
        std::vector<T> ds;
        for (std::size_t b = 0; b < layout.segments(); ++b) {
          const std::size_t n = layout.size(b);
          const std::size_t r0 = layout.begin(b);
          ds.resize(n);
          for (std::size_t h = 0; h < heads; ++h) {
            const T* pm = probs.data() + prob_offsets[b] + h * n * n;
            for (std::size_t i = 0; i < n; ++i) {
              const T* go = self.grad.data() + (r0 + i) * inner + h * head_dim;
              T acc = T(0);
              for (std::size_t j = 0; j < n; ++j) {
                const T p = pm[i * n + j];
                if (p == T(0)) {
                  ds[j] = T(0);
                  continue;
                }
                const T* v = base + (r0 + j) * stride + 2 * inner + h * head_dim;
                const T dp = simd::dot(go, v, head_dim);
                ds[j] = dp;
                acc += p * dp;
                simd::axpy(p, go, g.data() + (r0 + j) * stride + 2 * inner + h * head_dim, head_dim);
              }
              const T* q = base + (r0 + i) * stride + h * head_dim;
              T* gq = g.data() + (r0 + i) * stride + h * head_dim;
              for (std::size_t j = 0; j < n; ++j) {
                const T p = pm[i * n + j];
                if (p == T(0)) continue;
                const T dsij = p * (ds[j] - acc) * scale;
                const T* k = base + (r0 + j) * stride + inner + h * head_dim;
                simd::axpy(dsij, k, gq, head_dim);
                simd::axpy(dsij, q, g.data() + (r0 + j) * stride + inner + h * head_dim, head_dim);
              }
            }
          }
        }
      });
}

template <typename T>
Tensor<T> segment_depthwise_conv(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                                 const SegmentLayout& layout) {
  if (x.rank() != 2 || x.dim(0) != layout.rows()) throw ShapeMismatch("segment_depthwise_conv", x.shape(), {layout.rows()});
  const std::size_t c = x.dim(1);
  if (weight.rank() != 2 || weight.dim(0) != c || weight.dim(1) % 2 == 0 || bias.numel() != c) {
    throw ShapeMismatch("segment_depthwise_conv(weight)", weight.shape(), {c});
  }
  check_finite<T>({&x, &weight, &bias}, "segment_depthwise_conv");
  const std::size_t kw = weight.dim(1);
  const long half = static_cast<long>(kw / 2);
  std::vector<T> out(x.numel());
  for (std::size_t b = 0; b < layout.segments(); ++b) {
    const long n = static_cast<long>(layout.size(b));
    const std::size_t r0 = layout.begin(b);
    for (long t = 0; t < n; ++t) {
      T* o = out.data() + (r0 + t) * c;
      for (std::size_t ch = 0; ch < c; ++ch) o[ch] = bias.data()[ch];
      for (std::size_t k = 0; k < kw; ++k) {
        const long src = t + static_cast<long>(k) - half;
        if (src < 0 || src >= n) continue;
        const T* xi = x.data().data() + (r0 + src) * c;
        for (std::size_t ch = 0; ch < c; ++ch) o[ch] += weight.data()[ch * kw + k] * xi[ch];
      }
    }
  }
  auto px = x.node();
  auto pw = weight.node();
  auto pb = bias.node();
  return make_result<T>(x.shape(), std::move(out), {px, pw, pb}, "segment_depthwise_conv",
                        [px, pw, pb, layout, c, kw, half](Node<T>& self) {
                          for (std::size_t b = 0; b < layout.segments(); ++b) {
                            const long n = static_cast<long>(layout.size(b));
                            const std::size_t r0 = layout.begin(b);
                            for (long t = 0; t < n; ++t) {
                              const T* go = self.grad.data() + (r0 + t) * c;
                              if (pb->requires_grad) {
                                auto& gb = pb->grad_buffer();
                                for (std::size_t ch = 0; ch < c; ++ch) gb[ch] += go[ch];
                              }
                              for (std::size_t k = 0; k < kw; ++k) {
                                const long src = t + static_cast<long>(k) - half;
                                if (src < 0 || src >= n) continue;
                                if (px->requires_grad) {
                                  T* gx = px->grad_buffer().data() + (r0 + src) * c;
                                  for (std::size_t ch = 0; ch < c; ++ch) gx[ch] += pw->value[ch * kw + k] * go[ch];
                                }
                                if (pw->requires_grad) {
                                  auto& gw = pw->grad_buffer();
                                  const T* xi = px->value.data() + (r0 + src) * c;
                                  for (std::size_t ch = 0; ch < c; ++ch) gw[ch * kw + k] += xi[ch] * go[ch];
                                }
                              }
                            }
                          }
                        });
}

template <typename T>
std::pair<std::vector<T>, std::vector<std::size_t>> nearest_centers(const Tensor<T>& x, const Tensor<T>& centers) {
  const std::size_t c = x.shape().back();
  if (centers.rank() != 2 || centers.dim(1) != c || centers.dim(0) == 0) {
    throw ShapeMismatch("nearest_centers", x.shape(), centers.shape());
  }
  const std::size_t rows = x.numel() / c;
  const std::size_t k = centers.dim(0);
  std::vector<T> dist(rows * k);
  std::vector<std::size_t> assign(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data().data() + r * c;
    std::size_t best = 0;
    for (std::size_t q = 0; q < k; ++q) {
      const T* cq = centers.data().data() + q * c;
      T d = T(0);
      for (std::size_t j = 0; j < c; ++j) {
        const T diff = xr[j] - cq[j];
        d += diff * diff;
      }
      dist[r * k + q] = d;
      if (d < dist[r * k + best]) best = q;
    }
    assign[r] = best;
  }
  return {std::move(dist), std::move(assign)};
}

template <typename T>
Tensor<T> cluster_straight_through(const Tensor<T>& x, const Tensor<T>& centers,
                                   std::vector<std::size_t>* assignments_out) {
  check_finite<T>({&x, &centers}, "cluster_straight_through");
  auto [dist, assign] = nearest_centers(x, centers);
  const std::size_t c = x.shape().back();
  const std::size_t rows = x.numel() / c;
  std::vector<T> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(centers.data().data() + assign[r] * c, c, out.data() + r * c);
  if (assignments_out) *assignments_out = assign;
  auto px = x.node();
  auto pc = centers.node();
  return make_result<T>(x.shape(), std::move(out), {px, pc}, "cluster_straight_through",
                        [px, pc, assign = std::move(assign), c](Node<T>& self) {
                          if (px->requires_grad) {
                            auto& g = px->grad_buffer();
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                          }
                          if (pc->requires_grad) {
                            auto& g = pc->grad_buffer();
                            for (std::size_t r = 0; r < assign.size(); ++r) {
                              for (std::size_t j = 0; j < c; ++j) g[assign[r] * c + j] += self.grad[r * c + j];
                            }
                          }
                        });
}

template <typename T>
Tensor<T> segment_max_pool(const Tensor<T>& x, const SegmentLayout& layout) {
  if (x.rank() != 2 || x.dim(0) != layout.rows()) throw ShapeMismatch("segment_max_pool", x.shape(), {layout.rows()});
  check_finite<T>({&x}, "segment_max_pool");
  const std::size_t c = x.dim(1);
  const std::size_t bs = layout.segments();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<T> out(bs * c, T(0));
  std::vector<std::size_t> arg(bs * c, kNone);
  for (std::size_t b = 0; b < bs; ++b) {
    const std::size_t n = layout.size(b);
    if (n == 0) continue;
    const std::size_t r0 = layout.begin(b);
    for (std::size_t j = 0; j < c; ++j) {
      std::size_t best = r0 * c + j;
      for (std::size_t t = 1; t < n; ++t) {
        const std::size_t idx = (r0 + t) * c + j;
        if (x.data()[idx] > x.data()[best]) best = idx;
      }
      out[b * c + j] = x.data()[best];
      arg[b * c + j] = best;
    }
  }
  auto px = x.node();
  return make_result<T>({bs, c}, std::move(out), {px}, "segment_max_pool", [px, arg = std::move(arg)](Node<T>& self) {
    auto& g = px->grad_buffer();
    for (std::size_t i = 0; i < arg.size(); ++i) {
      if (arg[i] != std::numeric_limits<std::size_t>::max()) g[arg[i]] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> pack_rows(const Tensor<T>& x, const std::vector<std::uint8_t>& mask) {
  if (x.rank() != 3 || mask.size() != x.dim(0) * x.dim(1)) throw ShapeMismatch("pack_rows", x.shape(), {mask.size()});
  const std::size_t c = x.dim(2);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(i);
  }
  std::vector<T> out(rows.size() * c);
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy_n(x.data().data() + rows[r] * c, c, out.data() + r * c);
  auto px = x.node();
  return make_result<T>({rows.size(), c}, std::move(out), {px}, "pack_rows", [px, rows, c](Node<T>& self) {
    auto& g = px->grad_buffer();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t j = 0; j < c; ++j) g[rows[r] * c + j] += self.grad[r * c + j];
    }
  });
}

template <typename T>
Tensor<T> unpack_rows(const Tensor<T>& packed, const std::vector<std::uint8_t>& mask, std::size_t batch,
                      std::size_t nodes) {
  if (packed.rank() != 2 || mask.size() != batch * nodes) throw ShapeMismatch("unpack_rows", packed.shape(), {batch, nodes});
  const std::size_t c = packed.dim(1);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) rows.push_back(i);
  }
  if (rows.size() != packed.dim(0)) throw ShapeMismatch("unpack_rows: mask selects " + std::to_string(rows.size()) +
                                                        " rows, packed has " + std::to_string(packed.dim(0)));
  std::vector<T> out(batch * nodes * c, T(0));
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy_n(packed.data().data() + r * c, c, out.data() + rows[r] * c);
  auto pp = packed.node();
  return make_result<T>({batch, nodes, c}, std::move(out), {pp}, "unpack_rows", [pp, rows, c](Node<T>& self) {
    auto& g = pp->grad_buffer();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t j = 0; j < c; ++j) g[r * c + j] += self.grad[rows[r] * c + j];
    }
  });
}

#define UECHECKER_INSTANTIATE_GRAPH_OPS(T)                                                                       \
  template Tensor<T> embedding_lookup(const Tensor<T>&, const std::vector<std::size_t>&);                        \
  template Tensor<T> pair_concat(const Tensor<T>&, const std::vector<ScoredPair>&);                              \
  template Tensor<T> symmetric_pair_scores(const Tensor<T>&, const std::vector<ScoredPair>&, T);                 \
  template Tensor<T> assemble_adjacency(const Tensor<T>&, const std::vector<ScoredPair>&, const std::vector<T>&, \
                                        const SegmentLayout&);                                                   \
  template Tensor<T> normalize_blocks(const Tensor<T>&, const SegmentLayout&);                                   \
  template Tensor<T> block_propagate(const Tensor<T>&, const Tensor<T>&, const SegmentLayout&);                  \
  template Tensor<T> segment_attention(const Tensor<T>&, const SegmentLayout&, std::size_t, std::size_t,         \
                                       const std::vector<std::uint8_t>&, std::vector<T>*);                       \
  template Tensor<T> segment_depthwise_conv(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                \
                                            const SegmentLayout&);                                               \
  template std::pair<std::vector<T>, std::vector<std::size_t>> nearest_centers(const Tensor<T>&,                 \
                                                                               const Tensor<T>&);                \
  template Tensor<T> cluster_straight_through(const Tensor<T>&, const Tensor<T>&, std::vector<std::size_t>*);    \
  template Tensor<T> segment_max_pool(const Tensor<T>&, const SegmentLayout&);                                   \
  template Tensor<T> pack_rows(const Tensor<T>&, const std::vector<std::uint8_t>&);                              \
  template Tensor<T> unpack_rows(const Tensor<T>&, const std::vector<std::uint8_t>&, std::size_t, std::size_t);

UECHECKER_INSTANTIATE_GRAPH_OPS(float)
UECHECKER_INSTANTIATE_GRAPH_OPS(double)

}  // namespace uechecker::ag
