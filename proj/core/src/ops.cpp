#include "avt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <string>

#include "avt/errors.hpp"

namespace avt {

namespace {

template <typename T, typename Fn>
Tensor<T> record(Tensor<T> out, std::initializer_list<Tensor<T>> inputs, Fn&& fn) {
  if (!grad_enabled()) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  detail::Node<T>* node = out.node().get();
  node->requires_grad = true;
  for (const auto& in : inputs) {
    if (in.requires_grad()) node->parents.push_back(in.node());
  }
  node->backward_fn = [node, fn = std::forward<Fn>(fn)]() {
    fn(std::span<const T>(node->grad));
  };
  return out;
}

template <typename T>
T* grad_of(const Tensor<T>& t) {
  return t.requires_grad() ? t.node()->grad_buffer() : nullptr;
}

// Returns the leading-axes count when `b` matches a trailing suffix of `a`.
template <typename T>
std::size_t broadcast_outer(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  bool ok = sb.size() <= sa.size() &&
            std::equal(sb.begin(), sb.end(), sa.end() - static_cast<std::ptrdiff_t>(sb.size()));
  if (!ok) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(sa) + " and " + shape_str(sb) +
                         " are not broadcast-compatible");
  }
  return b.numel() == 0 ? 0 : a.numel() / b.numel();
}

void require_axis(std::size_t axis, std::size_t rank, const char* op) {
  if (axis >= rank) {
    throw IndexError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for rank " +
                     std::to_string(rank));
  }
}

struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

// c[m,n] = a[m,k] * b[k,n], accumulated in ascending k for every element.
template <typename T>
void gemm(const T* __restrict a, const T* __restrict b, T* __restrict c, std::size_t m, std::size_t k,
          std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* __restrict crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      const T* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// ga[m,k] += gc[m,n] * b[k,n]^T, accumulated over ascending j per element.
template <typename T>
void gemm_grad_a(const T* __restrict gc, const T* __restrict b, T* __restrict ga, std::size_t m, std::size_t k,
                 std::size_t n) {
  std::vector<T> bt(k * n);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  std::vector<T> row(k);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(row.begin(), row.end(), T{0});
    T* __restrict r = row.data();
    for (std::size_t j = 0; j < n; ++j) {
      const T g = gc[i * n + j];
      const T* __restrict btrow = bt.data() + j * k;
      for (std::size_t p = 0; p < k; ++p) r[p] += g * btrow[p];
    }
    T* __restrict garow = ga + i * k;
    for (std::size_t p = 0; p < k; ++p) garow[p] += r[p];
  }
}

// gb[k,n] += a[m,k]^T * gc[m,n]
template <typename T>
void gemm_grad_b(const T* __restrict a, const T* __restrict gc, T* __restrict gb, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* __restrict grow = gc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      T* __restrict gbrow = gb + p * n;
      for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const std::size_t outer = broadcast_outer(a, b, "add");
  const std::size_t inner = b.numel();
  Tensor<T> out(a.shape());
  auto o = out.data();
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t r = 0; r < outer; ++r)
    for (std::size_t j = 0; j < inner; ++j) o[r * inner + j] = av[r * inner + j] + bv[j];
  return record(out, {a, b}, [a, b, outer, inner](std::span<const T> g) {
    if (T* ga = grad_of(a))
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    if (T* gb = grad_of(b))
      for (std::size_t r = 0; r < outer; ++r)
        for (std::size_t j = 0; j < inner; ++j) gb[j] += g[r * inner + j];
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  const std::size_t outer = broadcast_outer(a, b, "sub");
  const std::size_t inner = b.numel();
  Tensor<T> out(a.shape());
  auto o = out.data();
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t r = 0; r < outer; ++r)
    for (std::size_t j = 0; j < inner; ++j) o[r * inner + j] = av[r * inner + j] - bv[j];
  return record(out, {a, b}, [a, b, outer, inner](std::span<const T> g) {
    if (T* ga = grad_of(a))
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    if (T* gb = grad_of(b))
      for (std::size_t r = 0; r < outer; ++r)
        for (std::size_t j = 0; j < inner; ++j) gb[j] -= g[r * inner + j];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("mul: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                         " differ");
  }
  Tensor<T> out(a.shape());
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * b[i];
  return record(out, {a, b}, [a, b](std::span<const T> g) {
    if (T* ga = grad_of(a))
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
    if (T* gb = grad_of(b))
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  Tensor<T> out(a.shape());
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] * factor;
  return record(out, {a}, [a, factor](std::span<const T> g) {
    T* ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const bool plain = sa.size() == 2 && sb.size() == 2;
  const bool batched = sa.size() == 3 && sb.size() == 3 && sa[0] == sb[0];
  if ((!plain && !batched) || sa[sa.size() - 1] != sb[sb.size() - 2]) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(sa) + " and " + shape_str(sb));
  }
  const std::size_t batch = plain ? 1 : sa[0];
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa[sa.size() - 1];
  const std::size_t n = sb[sb.size() - 1];
  Tensor<T> out(plain ? Shape{m, n} : Shape{batch, m, n});
  for (std::size_t q = 0; q < batch; ++q)
    gemm(a.data().data() + q * m * k, b.data().data() + q * k * n, out.data().data() + q * m * n, m,
         k, n);
  return record(out, {a, b}, [a, b, batch, m, k, n](std::span<const T> g) {
    if (T* ga = grad_of(a))
      for (std::size_t q = 0; q < batch; ++q)
        gemm_grad_a(g.data() + q * m * n, b.data().data() + q * k * n, ga + q * m * k, m, k, n);
    if (T* gb = grad_of(b))
      for (std::size_t q = 0; q < batch; ++q)
        gemm_grad_b(a.data().data() + q * m * k, g.data() + q * m * n, gb + q * k * n, m, k, n);
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  Tensor<T> out(std::move(shape), std::vector<T>(a.data().begin(), a.data().end()));
  return record(out, {a}, [a](std::span<const T> g) {
    T* ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

template <typename T>
Tensor<T> gather(const Tensor<T>& a, std::span<const std::size_t> index, Shape out_shape) {
  if (shape_numel(out_shape) != index.size()) {
    throw DimensionError("gather: " + std::to_string(index.size()) + " indices for shape " +
                         shape_str(out_shape));
  }
  Tensor<T> out(std::move(out_shape));
  auto o = out.data();
  auto av = a.data();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= av.size()) throw IndexError("gather: index out of range");
    o[i] = av[index[i]];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return record(out, {a}, [a, idx = std::move(idx)](std::span<const T> g) {
    T* ga = grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[idx[i]] += g[i];
  });
}

template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& axes) {
  const Shape& s = a.shape();
  const std::size_t r = s.size();
  std::vector<bool> seen(r, false);
  if (axes.size() != r) throw DimensionError("permute: axis list does not match rank");
  for (std::size_t ax : axes) {
    require_axis(ax, r, "permute");
    if (seen[ax]) throw DimensionError("permute: repeated axis");
    seen[ax] = true;
  }
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * s[i];
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = s[axes[i]];
  std::vector<std::size_t> index(a.numel());
  std::vector<std::size_t> counter(r, 0);
  for (std::size_t flat = 0; flat < index.size(); ++flat) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < r; ++i) src += counter[i] * in_stride[axes[i]];
    index[flat] = src;
    for (std::size_t i = r; i-- > 0;) {
      if (++counter[i] < out_shape[i]) break;
      counter[i] = 0;
    }
  }
  return gather(a, index, std::move(out_shape));
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  if (a.rank() < 2) throw DimensionError("transpose: need rank >= 2, got " + shape_str(a.shape()));
  std::vector<std::size_t> axes(a.rank());
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
  std::swap(axes[axes.size() - 1], axes[axes.size() - 2]);
  return permute(a, axes);
}

template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b, std::size_t axis) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  require_axis(axis, sa.size(), "concat");
  bool ok = sa.size() == sb.size();
  for (std::size_t i = 0; ok && i < sa.size(); ++i) ok = (i == axis) || sa[i] == sb[i];
  if (!ok) {
    throw DimensionError("concat: shapes " + shape_str(sa) + " and " + shape_str(sb) +
                         " differ off axis " + std::to_string(axis));
  }
  const AxisSplit pa = split_axis(sa, axis);
  const AxisSplit pb = split_axis(sb, axis);
  const std::size_t chunk_a = pa.extent * pa.inner;
  const std::size_t chunk_b = pb.extent * pb.inner;
  Shape out_shape = sa;
  out_shape[axis] += sb[axis];
  Tensor<T> out(out_shape);
  auto o = out.data();
  for (std::size_t r = 0; r < pa.outer; ++r) {
    std::copy_n(a.data().begin() + r * chunk_a, chunk_a, o.begin() + r * (chunk_a + chunk_b));
    std::copy_n(b.data().begin() + r * chunk_b, chunk_b, o.begin() + r * (chunk_a + chunk_b) + chunk_a);
  }
  return record(out, {a, b}, [a, b, outer = pa.outer, chunk_a, chunk_b](std::span<const T> g) {
    T* ga = grad_of(a);
    T* gb = grad_of(b);
    for (std::size_t r = 0; r < outer; ++r) {
      const T* row = g.data() + r * (chunk_a + chunk_b);
      if (ga)
        for (std::size_t j = 0; j < chunk_a; ++j) ga[r * chunk_a + j] += row[j];
      if (gb)
        for (std::size_t j = 0; j < chunk_b; ++j) gb[r * chunk_b + j] += row[chunk_a + j];
    }
  });
}

template <typename T>
Tensor<T> repeat(const Tensor<T>& a, std::size_t count) {
  Shape out_shape{count};
  out_shape.insert(out_shape.end(), a.shape().begin(), a.shape().end());
  std::vector<std::size_t> index(count * a.numel());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i % a.numel();
  return gather(a, index, std::move(out_shape));
}

template <typename T>
Tensor<T> index_rows(const Tensor<T>& a, std::span<const std::size_t> rows) {
  if (a.rank() == 0) throw DimensionError("index_rows: scalar input");
  const std::size_t row_size = a.numel() / a.dim(0);
  std::vector<std::size_t> index;
  index.reserve(rows.size() * row_size);
  for (std::size_t r : rows) {
    if (r >= a.dim(0)) {
      throw IndexError("index_rows: row " + std::to_string(r) + " out of range for " +
                       shape_str(a.shape()));
    }
    for (std::size_t j = 0; j < row_size; ++j) index.push_back(r * row_size + j);
  }
  Shape out_shape = a.shape();
  out_shape[0] = rows.size();
  return gather(a, index, std::move(out_shape));
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  require_axis(axis, x.rank(), "softmax");
  const AxisSplit p = split_axis(x.shape(), axis);
  Tensor<T> out(x.shape());
  auto y = out.data();
  auto xv = x.data();
  for (std::size_t o = 0; o < p.outer; ++o) {
    for (std::size_t in = 0; in < p.inner; ++in) {
      const std::size_t base = o * p.extent * p.inner + in;
      T mx = xv[base];
      for (std::size_t j = 1; j < p.extent; ++j) mx = std::max(mx, xv[base + j * p.inner]);
      T total{0};
      for (std::size_t j = 0; j < p.extent; ++j) {
        const T e = std::exp(xv[base + j * p.inner] - mx);
        y[base + j * p.inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < p.extent; ++j) y[base + j * p.inner] /= total;
    }
  }
  return record(out, {x}, [x, out_node = out.node().get(), p](std::span<const T> g) {
    T* gx = grad_of(x);
    const auto& yv = out_node->data;
    for (std::size_t o = 0; o < p.outer; ++o) {
      for (std::size_t in = 0; in < p.inner; ++in) {
        const std::size_t base = o * p.extent * p.inner + in;
        T dot{0};
        for (std::size_t j = 0; j < p.extent; ++j) dot += g[base + j * p.inner] * yv[base + j * p.inner];
        for (std::size_t j = 0; j < p.extent; ++j) {
          const std::size_t k = base + j * p.inner;
          gx[k] += yv[k] * (g[k] - dot);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x, std::size_t axis) {
  require_axis(axis, x.rank(), "log_softmax");
  const AxisSplit p = split_axis(x.shape(), axis);
  Tensor<T> out(x.shape());
  auto y = out.data();
  auto xv = x.data();
  for (std::size_t o = 0; o < p.outer; ++o) {
    for (std::size_t in = 0; in < p.inner; ++in) {
      const std::size_t base = o * p.extent * p.inner + in;
      T mx = xv[base];
      for (std::size_t j = 1; j < p.extent; ++j) mx = std::max(mx, xv[base + j * p.inner]);
      T total{0};
      for (std::size_t j = 0; j < p.extent; ++j) total += std::exp(xv[base + j * p.inner] - mx);
      const T lse = mx + std::log(total);
      for (std::size_t j = 0; j < p.extent; ++j) y[base + j * p.inner] = xv[base + j * p.inner] - lse;
    }
  }
  return record(out, {x}, [x, out_node = out.node().get(), p](std::span<const T> g) {
    T* gx = grad_of(x);
    const auto& yv = out_node->data;
    for (std::size_t o = 0; o < p.outer; ++o) {
      for (std::size_t in = 0; in < p.inner; ++in) {
        const std::size_t base = o * p.extent * p.inner + in;
        T gsum{0};
        for (std::size_t j = 0; j < p.extent; ++j) gsum += g[base + j * p.inner];
        for (std::size_t j = 0; j < p.extent; ++j) {
          const std::size_t k = base + j * p.inner;
          gx[k] += g[k] - std::exp(yv[k]) * gsum;
        }
      }
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  if (x.rank() == 0) throw DimensionError("layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  if (gain.numel() != d || bias.numel() != d) {
    throw DimensionError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                         shape_str(bias.shape()) + " do not match feature extent " +
                         std::to_string(d));
  }
  const std::size_t rows = d == 0 ? 0 : x.numel() / d;
  Tensor<T> out(x.shape());
  std::vector<T> xhat(x.numel());
  std::vector<T> rstd(rows);
  auto y = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data().data() + r * d;
    T mu{0};
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<T>(d);
    T var{0};
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<T>(d);
    rstd[r] = T{1} / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (xr[j] - mu) * rstd[r];
      y[r * d + j] = xhat[r * d + j] * gain[j] + bias[j];
    }
  }
  return record(out, {x, gain, bias},
                [x, gain, bias, d, rows, xhat = std::move(xhat), rstd = std::move(rstd)](
                    std::span<const T> g) {
                  T* gx = grad_of(x);
                  T* gg = grad_of(gain);
                  T* gb = grad_of(bias);
                  for (std::size_t r = 0; r < rows; ++r) {
                    const T* gr = g.data() + r * d;
                    const T* xh = xhat.data() + r * d;
                    if (gg)
                      for (std::size_t j = 0; j < d; ++j) gg[j] += gr[j] * xh[j];
                    if (gb)
                      for (std::size_t j = 0; j < d; ++j) gb[j] += gr[j];
                    if (gx) {
                      T mean_dxh{0}, mean_dxh_xh{0};
                      for (std::size_t j = 0; j < d; ++j) {
                        const T dxh = gr[j] * gain[j];
                        mean_dxh += dxh;
                        mean_dxh_xh += dxh * xh[j];
                      }
                      mean_dxh /= static_cast<T>(d);
                      mean_dxh_xh /= static_cast<T>(d);
                      for (std::size_t j = 0; j < d; ++j) {
                        const T dxh = gr[j] * gain[j];
                        gx[r * d + j] += rstd[r] * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
                      }
                    }
                  }
                });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  auto y = out.data();
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * T(0.5) * (T(1) + std::erf(x[i] * inv_sqrt2));
  return record(out, {x}, [x, inv_sqrt2](std::span<const T> g) {
    T* gx = grad_of(x);
    const T inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T v = x[i];
      const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
      gx[i] += g[i] * (cdf + v * pdf);
    }
  });
}

template <typename T>
Tensor<T> normalize_rows(const Tensor<T>& x, T eps) {
  if (x.rank() == 0) throw DimensionError("normalize_rows: scalar input");
  const std::size_t d = x.shape().back();
  const std::size_t rows = d == 0 ? 0 : x.numel() / d;
  Tensor<T> out(x.shape());
  std::vector<T> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    T ss{0};
    for (std::size_t j = 0; j < d; ++j) ss += x[r * d + j] * x[r * d + j];
    norms[r] = std::max(std::sqrt(ss), eps);
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = x[r * d + j] / norms[r];
  }
  return record(out, {x}, [x, out_node = out.node().get(), d, rows, norms = std::move(norms)](
                              std::span<const T> g) {
    T* gx = grad_of(x);
    const auto& y = out_node->data;
    for (std::size_t r = 0; r < rows; ++r) {
      T dot{0};
      for (std::size_t j = 0; j < d; ++j) dot += y[r * d + j] * g[r * d + j];
      for (std::size_t j = 0; j < d; ++j)
        gx[r * d + j] += (g[r * d + j] - y[r * d + j] * dot) / norms[r];
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total{0};
  for (T v : x.data()) total += v;
  return record(Tensor<T>::scalar(total), {x}, [x](std::span<const T> g) {
    T* gx = grad_of(x);
    for (std::size_t i = 0; i < x.numel(); ++i) gx[i] += g[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.numel() == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& x, std::span<const T> weights) {
  if (weights.size() != x.numel()) {
    throw DimensionError("weighted_sum: " + std::to_string(weights.size()) + " weights for " +
                         shape_str(x.shape()));
  }
  T total{0};
  for (std::size_t i = 0; i < weights.size(); ++i) total += weights[i] * x[i];
  std::vector<T> w(weights.begin(), weights.end());
  return record(Tensor<T>::scalar(total), {x}, [x, w = std::move(w)](std::span<const T> g) {
    T* gx = grad_of(x);
    for (std::size_t i = 0; i < w.size(); ++i) gx[i] += g[0] * w[i];
  });
}

template <typename T>
Tensor<T> nll_rows(const Tensor<T>& log_probs, std::span<const int> targets) {
  if (log_probs.rank() != 2 || log_probs.dim(0) != targets.size()) {
    throw DimensionError("nll_rows: log-probs " + shape_str(log_probs.shape()) + " vs " +
                         std::to_string(targets.size()) + " targets");
  }
  const std::size_t k = log_probs.dim(1);
  Tensor<T> out(Shape{targets.size()});
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const int c = targets[i];
    if (c < -1 || c >= static_cast<int>(k)) {
      throw IndexError("class index " + std::to_string(c) + " out of range [0, " +
                       std::to_string(k) + ")");
    }
    out[i] = c < 0 ? T{0} : -log_probs[i * k + static_cast<std::size_t>(c)];
  }
  std::vector<int> tgt(targets.begin(), targets.end());
  return record(out, {log_probs}, [log_probs, k, tgt = std::move(tgt)](std::span<const T> g) {
    T* gl = grad_of(log_probs);
    for (std::size_t i = 0; i < tgt.size(); ++i)
      if (tgt[i] >= 0) gl[i * k + static_cast<std::size_t>(tgt[i])] -= g[i];
  });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, int target) {
  const std::size_t k = logits.numel();
  if (target < 0 || target >= static_cast<int>(k)) {
    throw IndexError("cross_entropy: class " + std::to_string(target) + " out of range [0, " +
                     std::to_string(k) + ")");
  }
  const int targets[1] = {target};
  auto logp = log_softmax(reshape(logits, Shape{1, k}), 1);
  return reshape(nll_rows(logp, std::span<const int>(targets)), Shape{});
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2 || x.rank() == 0 || x.shape().back() != weight.dim(0) ||
      bias.numel() != weight.dim(1)) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + ", weight " +
                         shape_str(weight.shape()) + ", bias " + shape_str(bias.shape()));
  }
  const std::size_t in = weight.dim(0);
  const std::size_t out_dim = weight.dim(1);
  Shape out_shape = x.shape();
  out_shape.back() = out_dim;
  auto flat = x.rank() == 2 ? x : reshape(x, Shape{x.numel() / in, in});
  auto y = add(matmul(flat, weight), bias);
  return x.rank() == 2 ? y : reshape(y, std::move(out_shape));
}

#define AVT_INSTANTIATE_OPS(T)                                                                 \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> scale(const Tensor<T>&, T);                                               \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> transpose(const Tensor<T>&);                                              \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                         \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);               \
  template Tensor<T> concat(const Tensor<T>&, const Tensor<T>&, std::size_t);                  \
  template Tensor<T> repeat(const Tensor<T>&, std::size_t);                                    \
  template Tensor<T> gather(const Tensor<T>&, std::span<const std::size_t>, Shape);            \
  template Tensor<T> index_rows(const Tensor<T>&, std::span<const std::size_t>);               \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                   \
  template Tensor<T> log_softmax(const Tensor<T>&, std::size_t);                               \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);      \
  template Tensor<T> gelu(const Tensor<T>&);                                                   \
  template Tensor<T> normalize_rows(const Tensor<T>&, T);                                      \
  template Tensor<T> sum(const Tensor<T>&);                                                    \
  template Tensor<T> mean(const Tensor<T>&);                                                   \
  template Tensor<T> weighted_sum(const Tensor<T>&, std::span<const T>);                       \
  template Tensor<T> nll_rows(const Tensor<T>&, std::span<const int>);                         \
  template Tensor<T> cross_entropy(const Tensor<T>&, int);                                     \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

AVT_INSTANTIATE_OPS(float)
AVT_INSTANTIATE_OPS(double)

}  // namespace avt
