#include "stance/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stance {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw DimensionError(what);
}

void require_matrix(const Tensor& a, const char* op) {
  require(a.rank() == 2, std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
}

detail::Node& parent(detail::Node& self, std::size_t i) { return *self.parents[i]; }

// Elementwise binary op with scalar broadcasting. fwd(x, y) gives the value,
// dx(x, y, z) and dy(x, y, z) the local partials.
template <typename Fwd, typename Dx, typename Dy>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, Dx dx, Dy dy) {
  const bool same = a.shape() == b.shape();
  const bool a_scalar = a.size() == 1;
  const bool b_scalar = b.size() == 1;
  if (!same && !a_scalar && !b_scalar) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
  const Shape shape = (same || !a_scalar) ? a.shape() : b.shape();
  const std::size_t n = shape_size(shape);
  const std::size_t sa = a.size() == n ? 1 : 0;
  const std::size_t sb = b.size() == n ? 1 : 0;
  auto ad = a.data();
  auto bd = b.data();
  std::vector<Real> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(ad[i * sa], bd[i * sb]);
  return make_result(op, shape, std::move(out), {a, b},
                     [sa, sb, n, dx, dy](detail::Node& self) {
                       auto& pa = parent(self, 0);
                       auto& pb = parent(self, 1);
                       for (std::size_t i = 0; i < n; ++i) {
                         const Real x = pa.data[i * sa];
                         const Real y = pb.data[i * sb];
                         const Real g = self.grad[i];
                         if (pa.requires_grad) pa.grad[i * sa] += g * dx(x, y, self.data[i]);
                         if (pb.requires_grad) pb.grad[i * sb] += g * dy(x, y, self.data[i]);
                       }
                     });
}

// Elementwise unary op; d(x, z) is the local derivative given input and output.
template <typename Fwd, typename D>
Tensor unary(const char* op, const Tensor& a, Fwd fwd, D d) {
  const std::size_t n = a.size();
  auto ad = a.data();
  std::vector<Real> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(ad[i]);
  return make_result(op, a.shape(), std::move(out), {a}, [n, d](detail::Node& self) {
    auto& pa = parent(self, 0);
    for (std::size_t i = 0; i < n; ++i) pa.grad[i] += self.grad[i] * d(pa.data[i], self.data[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.shape()) + " * " +
                         shape_string(b.shape()));
  }
  auto ad = a.data();
  auto bd = b.data();
  std::vector<Real> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    Real* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real x = ad[i * k + p];
      if (x == 0.0) continue;
      const Real* brow = bd.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += x * brow[j];
    }
  }
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    const Real* g = self.grad.data();
    if (pa.requires_grad) {
      // dA = dC * B^T
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const Real* brow = pb.data.data() + p * n;
          const Real* grow = g + i * n;
          Real acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          pa.grad[i * k + p] += acc;
        }
      }
    }
    if (pb.requires_grad) {
      // dB = A^T * dC
      for (std::size_t i = 0; i < m; ++i) {
        const Real* grow = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const Real x = pa.data[i * k + p];
          if (x == 0.0) continue;
          Real* bgrow = pb.grad.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) bgrow[j] += x * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  auto ad = a.data();
  std::vector<Real> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = ad[i * n + j];
  return make_result("transpose", {n, m}, std::move(out), {a}, [m, n](detail::Node& self) {
    auto& pa = parent(self, 0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) pa.grad[i * n + j] += self.grad[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](Real x, Real y) { return x + y; }, [](Real, Real, Real) { return 1.0; },
      [](Real, Real, Real) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](Real x, Real y) { return x - y; }, [](Real, Real, Real) { return 1.0; },
      [](Real, Real, Real) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](Real x, Real y) { return x * y; }, [](Real, Real y, Real) { return y; },
      [](Real x, Real, Real) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  for (Real y : b.data()) {
    if (y == 0.0) throw DomainError("div: zero denominator");
  }
  return binary(
      "div", a, b, [](Real x, Real y) { return x / y; }, [](Real, Real y, Real) { return 1.0 / y; },
      [](Real, Real y, Real z) { return -z / y; });
}

Tensor add_scalar(const Tensor& a, Real s) {
  return unary(
      "add_scalar", a, [s](Real x) { return x + s; }, [](Real, Real) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, Real s) {
  return unary(
      "mul_scalar", a, [s](Real x) { return x * s; }, [s](Real, Real) { return s; });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](Real x) { return std::exp(x); }, [](Real, Real z) { return z; });
}

Tensor log(const Tensor& a) {
  for (Real x : a.data()) {
    if (!(x > 0.0)) throw DomainError("log: nonpositive input");
  }
  return unary(
      "log", a, [](Real x) { return std::log(x); }, [](Real x, Real) { return 1.0 / x; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](Real x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const Real e = std::exp(x);
        return e / (1.0 + e);
      },
      [](Real, Real z) { return z * (1.0 - z); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](Real x) { return std::tanh(x); }, [](Real, Real z) { return 1.0 - z * z; });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](Real x) { return x < 0.0 ? 0.0 : x; },
      [](Real x, Real) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor clamp_min(const Tensor& a, Real lo) {
  return unary(
      "clamp_min", a, [lo](Real x) { return x < lo ? lo : x; },
      [lo](Real x, Real) { return x > lo ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a) {
  Real acc = 0.0;
  for (Real x : a.data()) acc += x;
  return make_result("sum", {1}, {acc}, {a}, [](detail::Node& self) {
    auto& pa = parent(self, 0);
    const Real g = self.grad[0];
    for (Real& x : pa.grad) x += g;
  });
}

Tensor max(const Tensor& a) {
  auto ad = a.data();
  std::size_t best = 0;
  for (std::size_t i = 1; i < ad.size(); ++i) {
    if (ad[i] > ad[best]) best = i;
  }
  return make_result("max", {1}, {ad[best]}, {a}, [best](detail::Node& self) {
    parent(self, 0).grad[best] += self.grad[0];
  });
}

Tensor sum_rows(const Tensor& a) {
  require_matrix(a, "sum_rows");
  const std::size_t m = a.dim(0), n = a.dim(1);
  auto ad = a.data();
  std::vector<Real> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += ad[i * n + j];
  return make_result("sum_rows", {m, 1}, std::move(out), {a}, [m, n](detail::Node& self) {
    auto& pa = parent(self, 0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) pa.grad[i * n + j] += self.grad[i];
  });
}

Tensor logsumexp_rows(const Tensor& a) {
  require_matrix(a, "logsumexp_rows");
  const std::size_t m = a.dim(0), n = a.dim(1);
  auto ad = a.data();
  std::vector<Real> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Real* row = ad.data() + i * n;
    const Real hi = *std::max_element(row, row + n);
    if (hi == -std::numeric_limits<Real>::infinity()) {
      out[i] = hi;
      continue;
    }
    Real acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += std::exp(row[j] - hi);
    out[i] = hi + std::log(acc);
  }
  return make_result("logsumexp_rows", {m, 1}, std::move(out), {a}, [m, n](detail::Node& self) {
    auto& pa = parent(self, 0);
    for (std::size_t i = 0; i < m; ++i) {
      const Real lse = self.data[i];
      for (std::size_t j = 0; j < n; ++j) {
        pa.grad[i * n + j] += self.grad[i] * std::exp(pa.data[i * n + j] - lse);
      }
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw DimensionError("reshape: " + shape_string(a.shape()) + " -> " + shape_string(shape));
  }
  std::vector<Real> out(a.data().begin(), a.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {a}, [](detail::Node& self) {
    auto& pa = parent(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
  });
}

Tensor slice(const Tensor& a, std::size_t row0, std::size_t rows, std::size_t col0,
             std::size_t cols) {
  require_matrix(a, "slice");
  const std::size_t n = a.dim(1);
  require(row0 + rows <= a.dim(0) && col0 + cols <= n && rows > 0 && cols > 0,
          "slice: block out of range for " + shape_string(a.shape()));
  auto ad = a.data();
  std::vector<Real> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = ad[(row0 + i) * n + col0 + j];
  return make_result("slice", {rows, cols}, std::move(out), {a},
                     [row0, rows, col0, cols, n](detail::Node& self) {
                       auto& pa = parent(self, 0);
                       for (std::size_t i = 0; i < rows; ++i)
                         for (std::size_t j = 0; j < cols; ++j)
                           pa.grad[(row0 + i) * n + col0 + j] += self.grad[i * cols + j];
                     });
}

Tensor pad(const Tensor& a, std::size_t rows, std::size_t cols) {
  require_matrix(a, "pad");
  const std::size_t m = a.dim(0), n = a.dim(1);
  require(m <= rows && n <= cols, "pad: target smaller than " + shape_string(a.shape()));
  auto ad = a.data();
  std::vector<Real> out(rows * cols, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * cols + j] = ad[i * n + j];
  return make_result("pad", {rows, cols}, std::move(out), {a}, [m, n, cols](detail::Node& self) {
    auto& pa = parent(self, 0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) pa.grad[i * n + j] += self.grad[i * cols + j];
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_matrix(a, "concat_cols");
  require_matrix(b, "concat_cols");
  require(a.dim(0) == b.dim(0), "concat_cols: row counts differ");
  const std::size_t m = a.dim(0), na = a.dim(1), nb = b.dim(1), n = na + nb;
  std::vector<Real> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(a.data().data() + i * na, na, out.data() + i * n);
    std::copy_n(b.data().data() + i * nb, nb, out.data() + i * n + na);
  }
  return make_result("concat_cols", {m, n}, std::move(out), {a, b}, [m, na, nb, n](detail::Node& self) {
    auto& pa = parent(self, 0);
    auto& pb = parent(self, 1);
    for (std::size_t i = 0; i < m; ++i) {
      if (pa.requires_grad)
        for (std::size_t j = 0; j < na; ++j) pa.grad[i * na + j] += self.grad[i * n + j];
      if (pb.requires_grad)
        for (std::size_t j = 0; j < nb; ++j) pb.grad[i * nb + j] += self.grad[i * n + na + j];
    }
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t n = parts[0].rank() == 2 ? parts[0].dim(1) : 0;
  std::size_t m = 0;
  for (const Tensor& t : parts) {
    require(t.rank() == 2 && t.dim(1) == n, "concat_rows: column counts differ");
    m += t.dim(0);
  }
  std::vector<Real> out;
  out.reserve(m * n);
  for (const Tensor& t : parts) out.insert(out.end(), t.data().begin(), t.data().end());
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_result("concat_rows", {m, n}, std::move(out), std::move(inputs), [](detail::Node& self) {
    std::size_t offset = 0;
    for (auto& p : self.parents) {
      if (p->requires_grad) {
        for (std::size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += self.grad[offset + i];
      }
      offset += p->data.size();
    }
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::uint32_t> ids) {
  require_matrix(table, "gather_rows");
  require(!ids.empty(), "gather_rows: no ids");
  const std::size_t v = table.dim(0), e = table.dim(1);
  std::vector<std::uint32_t> rows(ids.begin(), ids.end());
  std::vector<Real> out(rows.size() * e);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < v, "gather_rows: id out of range");
    std::copy_n(table.data().data() + rows[i] * e, e, out.data() + i * e);
  }
  const std::size_t m = rows.size();
  return make_result("gather_rows", {m, e}, std::move(out), {table},
                     [rows = std::move(rows), e](detail::Node& self) {
                       auto& pt = parent(self, 0);
                       for (std::size_t i = 0; i < rows.size(); ++i)
                         for (std::size_t j = 0; j < e; ++j) pt.grad[rows[i] * e + j] += self.grad[i * e + j];
                     });
}

Tensor conv2d(const Tensor& input, const Tensor& filters, const Tensor& bias) {
  require(input.rank() == 3, "conv2d: input must be [c x h x w]");
  require(filters.rank() == 4, "conv2d: filters must be [c_out x c_in x f x f]");
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t cout = filters.dim(0), f = filters.dim(2);
  require(filters.dim(1) == cin, "conv2d: filter channels do not match input");
  require(filters.dim(3) == f && f % 2 == 1, "conv2d: filters must be square with odd size");
  require(bias.size() == cout, "conv2d: bias size must equal output channels");
  const std::size_t half = f / 2;
  require(f <= h + 2 * half && f <= w + 2 * half, "conv2d: filter larger than padded input");

  const long H = static_cast<long>(h), W = static_cast<long>(w), F = static_cast<long>(f);
  const long P = static_cast<long>(half);
  auto in = input.data();
  auto wt = filters.data();
  auto bs = bias.data();
  std::vector<Real> out(cout * h * w);
  for (std::size_t co = 0; co < cout; ++co) {
    Real* o = out.data() + co * h * w;
    std::fill(o, o + h * w, bs[co]);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const Real* x = in.data() + ci * h * w;
      for (long ky = 0; ky < F; ++ky) {
        const long dy = ky - P;
        const long y0 = std::max(0L, -dy), y1 = std::min(H, H - dy);
        for (long kx = 0; kx < F; ++kx) {
          const Real k = wt[((co * cin + ci) * f + ky) * f + kx];
          if (k == 0.0) continue;
          const long dx = kx - P;
          const long x0 = std::max(0L, -dx), x1 = std::min(W, W - dx);
          for (long y = y0; y < y1; ++y) {
            Real* orow = o + y * W;
            const Real* xrow = x + (y + dy) * W + dx;
            for (long xx = x0; xx < x1; ++xx) orow[xx] += k * xrow[xx];
          }
        }
      }
    }
  }
  return make_result(
      "conv2d", {cout, h, w}, std::move(out), {input, filters, bias},
      [cin, cout, f, H, W, F, P](detail::Node& self) {
        auto& pi = parent(self, 0);
        auto& pf = parent(self, 1);
        auto& pb = parent(self, 2);
        const std::size_t hw = static_cast<std::size_t>(H * W);
        for (std::size_t co = 0; co < cout; ++co) {
          const Real* g = self.grad.data() + co * hw;
          if (pb.requires_grad) {
            Real acc = 0.0;
            for (std::size_t i = 0; i < hw; ++i) acc += g[i];
            pb.grad[co] += acc;
          }
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const Real* x = pi.data.data() + ci * hw;
            Real* gx = pi.requires_grad ? pi.grad.data() + ci * hw : nullptr;
            for (long ky = 0; ky < F; ++ky) {
              const long dy = ky - P;
              const long y0 = std::max(0L, -dy), y1 = std::min(H, H - dy);
              for (long kx = 0; kx < F; ++kx) {
                const std::size_t widx = ((co * cin + ci) * f + ky) * f + kx;
                const Real k = pf.data[widx];
                const long dx = kx - P;
                const long x0 = std::max(0L, -dx), x1 = std::min(W, W - dx);
                Real acc = 0.0;
                for (long y = y0; y < y1; ++y) {
                  const Real* grow = g + y * W;
                  const Real* xrow = x + (y + dy) * W + dx;
                  for (long xx = x0; xx < x1; ++xx) acc += grow[xx] * xrow[xx];
                  if (gx != nullptr && k != 0.0) {
                    Real* gxrow = gx + (y + dy) * W + dx;
                    for (long xx = x0; xx < x1; ++xx) gxrow[xx] += k * grow[xx];
                  }
                }
                if (pf.requires_grad) pf.grad[widx] += acc;
              }
            }
          }
        }
      });
}

Tensor maxpool2d(const Tensor& input) {
  require(input.rank() == 3, "maxpool2d: input must be [c x h x w]");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t oh = (h + 1) / 2, ow = (w + 1) / 2;
  auto in = input.data();
  std::vector<Real> out(c * oh * ow);
  std::vector<std::size_t> arg(out.size());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = ch * h * w + (2 * oy) * w + 2 * ox;
        // Row-major scan inside the window keeps the smallest index on ties.
        for (std::size_t y = 2 * oy; y < std::min(h, 2 * oy + 2); ++y) {
          for (std::size_t x = 2 * ox; x < std::min(w, 2 * ox + 2); ++x) {
            const std::size_t idx = ch * h * w + y * w + x;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (ch * oh + oy) * ow + ox;
        out[o] = in[best];
        arg[o] = best;
      }
    }
  }
  return make_result("maxpool2d", {c, oh, ow}, std::move(out), {input},
                     [arg = std::move(arg)](detail::Node& self) {
                       auto& pi = parent(self, 0);
                       for (std::size_t o = 0; o < arg.size(); ++o) pi.grad[arg[o]] += self.grad[o];
                     });
}

}  // namespace stance
