#include <algorithm>
#include <cmath>
#include <cstring>

#include "snntcl/tensor.hpp"

namespace snntcl {

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

Graph* tracking_graph(std::initializer_list<const Tensor*> ins) {
  Graph* g = Graph::active();
  if (!g) return nullptr;
  for (auto* t : ins)
    if (t->tracked()) return g;
  return nullptr;
}

void accumulate(Graph& g, int node, const std::vector<double>& delta) {
  if (node < 0) return;
  auto& buf = g.grad_buf(node);
  for (std::size_t i = 0; i < delta.size(); ++i) buf[i] += delta[i];
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = a[i] + b[i];
  if (Graph* g = tracking_graph({&a, &b})) {
    int na = a.node(), nb = b.node();
    out.set_node(g->add_node({na, nb}, out.size(), [na, nb](Graph& g, int self) {
      const auto& go = g.grad_buf(self);
      accumulate(g, na, go);
      accumulate(g, nb, go);
    }));
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = a[i] - b[i];
  if (Graph* g = tracking_graph({&a, &b})) {
    int na = a.node(), nb = b.node();
    out.set_node(g->add_node({na, nb}, out.size(), [na, nb](Graph& g, int self) {
      const auto& go = g.grad_buf(self);
      accumulate(g, na, go);
      if (nb >= 0) {
        auto& buf = g.grad_buf(nb);
        for (std::size_t i = 0; i < go.size(); ++i) buf[i] -= go[i];
      }
    }));
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = a[i] * b[i];
  if (Graph* g = tracking_graph({&a, &b})) {
    int na = a.node(), nb = b.node();
    Tensor av = a.detached(), bv = b.detached();
    out.set_node(
        g->add_node({na, nb}, out.size(), [na, nb, av, bv](Graph& g, int self) {
          const auto& go = g.grad_buf(self);
          if (na >= 0) {
            auto& buf = g.grad_buf(na);
            for (std::size_t i = 0; i < go.size(); ++i) buf[i] += go[i] * bv[i];
          }
          if (nb >= 0) {
            auto& buf = g.grad_buf(nb);
            for (std::size_t i = 0; i < go.size(); ++i) buf[i] += go[i] * av[i];
          }
        }));
  }
  return out;
}

Tensor scalar_mul(const Tensor& a, double c) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = a[i] * c;
  if (Graph* g = tracking_graph({&a})) {
    int na = a.node();
    out.set_node(g->add_node({na}, out.size(), [na, c](Graph& g, int self) {
      const auto& go = g.grad_buf(self);
      auto& buf = g.grad_buf(na);
      for (std::size_t i = 0; i < go.size(); ++i) buf[i] += go[i] * c;
    }));
  }
  return out;
}

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = a[i] + c;
  if (Graph* g = tracking_graph({&a})) {
    int na = a.node();
    out.set_node(g->add_node({na}, out.size(), [na](Graph& g, int self) {
      accumulate(g, na, g.grad_buf(self));
    }));
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  const std::size_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
  Tensor out(Shape{M, N});
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t k = 0; k < K; ++k) {
      const double av = a[m * K + k];
      for (std::size_t n = 0; n < N; ++n)
        out.at(m * N + n) += av * b[k * N + n];
    }
  if (Graph* g = tracking_graph({&a, &b})) {
    int na = a.node(), nb = b.node();
    Tensor av = a.detached(), bv = b.detached();
    out.set_node(g->add_node(
        {na, nb}, out.size(), [na, nb, av, bv, M, K, N](Graph& g, int self) {
          const auto& go = g.grad_buf(self);
          if (na >= 0) {  // dA = dC * B^T
            auto& da = g.grad_buf(na);
            for (std::size_t m = 0; m < M; ++m)
              for (std::size_t n = 0; n < N; ++n) {
                const double gv = go[m * N + n];
                for (std::size_t k = 0; k < K; ++k)
                  da[m * K + k] += gv * bv[k * N + n];
              }
          }
          if (nb >= 0) {  // dB = A^T * dC
            auto& db = g.grad_buf(nb);
            for (std::size_t m = 0; m < M; ++m)
              for (std::size_t k = 0; k < K; ++k) {
                const double avk = av[m * K + k];
                for (std::size_t n = 0; n < N; ++n)
                  db[k * N + n] += avk * go[m * N + n];
              }
          }
        }));
  }
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = a[i] > 0 ? a[i] : 0.0;
  if (Graph* g = tracking_graph({&a})) {
    int na = a.node();
    Tensor av = a.detached();
    out.set_node(g->add_node({na}, out.size(), [na, av](Graph& g, int self) {
      const auto& go = g.grad_buf(self);
      auto& buf = g.grad_buf(na);
      for (std::size_t i = 0; i < go.size(); ++i)
        if (av[i] > 0) buf[i] += go[i];
    }));
  }
  return out;
}

Tensor exp(const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = std::exp(a[i]);
  if (Graph* g = tracking_graph({&a})) {
    int na = a.node();
    Tensor ov = out.detached();
    out.set_node(g->add_node({na}, out.size(), [na, ov](Graph& g, int self) {
      const auto& go = g.grad_buf(self);
      auto& buf = g.grad_buf(na);
      for (std::size_t i = 0; i < go.size(); ++i) buf[i] += go[i] * ov[i];
    }));
  }
  return out;
}

Tensor log(const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = std::log(a[i]);
  if (Graph* g = tracking_graph({&a})) {
    int na = a.node();
    Tensor av = a.detached();
    out.set_node(g->add_node({na}, out.size(), [na, av](Graph& g, int self) {
      const auto& go = g.grad_buf(self);
      auto& buf = g.grad_buf(na);
      for (std::size_t i = 0; i < go.size(); ++i) buf[i] += go[i] / av[i];
    }));
  }
  return out;
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
  Tensor out = Tensor::scalar(s);
  if (Graph* g = tracking_graph({&a})) {
    int na = a.node();
    std::size_t n = a.size();
    out.set_node(g->add_node({na}, 1, [na, n](Graph& g, int self) {
      const double gv = g.grad_buf(self)[0];
      auto& buf = g.grad_buf(na);
      for (std::size_t i = 0; i < n; ++i) buf[i] += gv;
    }));
  }
  return out;
}

Tensor sum_axis(const Tensor& a, std::size_t axis) {
  if (axis >= a.rank())
    throw ShapeError("sum_axis: axis " + std::to_string(axis) +
                     " out of range for " + shape_str(a.shape()));
  Shape os;
  std::size_t outer = 1, mid = a.dim(axis), inner = 1;
  for (std::size_t i = 0; i < a.rank(); ++i) {
    if (i < axis) outer *= a.dim(i);
    if (i > axis) inner *= a.dim(i);
    if (i != axis) os.push_back(a.dim(i));
  }
  Tensor out(os);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t m = 0; m < mid; ++m)
      for (std::size_t i = 0; i < inner; ++i)
        out.at(o * inner + i) += a[(o * mid + m) * inner + i];
  if (Graph* g = tracking_graph({&a})) {
    int na = a.node();
    out.set_node(g->add_node(
        {na}, out.size(), [na, outer, mid, inner](Graph& g, int self) {
          const auto& go = g.grad_buf(self);
          auto& buf = g.grad_buf(na);
          for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t m = 0; m < mid; ++m)
              for (std::size_t i = 0; i < inner; ++i)
                buf[(o * mid + m) * inner + i] += go[o * inner + i];
        }));
  }
  return out;
}

Tensor mean_axis(const Tensor& a, std::size_t axis) {
  return scalar_mul(sum_axis(a, axis), 1.0 / static_cast<double>(a.dim(axis)));
}

Tensor reshape(const Tensor& a, Shape shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  if (n != a.size())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  Tensor out(shape, a.data());
  if (Graph* g = tracking_graph({&a})) {
    int na = a.node();
    out.set_node(g->add_node({na}, out.size(), [na](Graph& g, int self) {
      accumulate(g, na, g.grad_buf(self));
    }));
  }
  return out;
}

Tensor flatten(const Tensor& a) {
  if (a.rank() < 1) throw ShapeError("flatten: rank-0 input");
  std::size_t rest = a.size() / a.dim(0);
  return reshape(a, Shape{a.dim(0), rest});
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) throw ShapeError("concat: axis out of range");
  std::size_t cat = 0;
  for (const auto& p : parts) {
    if (p.rank() != s0.size())
      throw ShapeError("concat: rank mismatch");
    for (std::size_t i = 0; i < s0.size(); ++i)
      if (i != axis && p.dim(i) != s0[i])
        throw ShapeError("concat: shape mismatch " + shape_str(p.shape()) +
                         " vs " + shape_str(s0));
    cat += p.dim(axis);
  }
  Shape os = s0;
  os[axis] = cat;
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s0[i];
  for (std::size_t i = axis + 1; i < s0.size(); ++i) inner *= s0[i];
  Tensor out(os);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    for (std::size_t o = 0; o < outer; ++o)
      std::memcpy(out.data().data() + (o * cat + off) * inner,
                  p.data().data() + o * p.dim(axis) * inner,
                  p.dim(axis) * inner * sizeof(double));
    off += p.dim(axis);
  }
  Graph* g = Graph::active();
  bool any = false;
  if (g)
    for (const auto& p : parts) any = any || p.tracked();
  if (g && any) {
    std::vector<int> ids;
    std::vector<std::size_t> mids;
    for (const auto& p : parts) {
      ids.push_back(p.node());
      mids.push_back(p.dim(axis));
    }
    out.set_node(g->add_node(
        ids, out.size(),
        [ids, mids, offsets, outer, inner, cat](Graph& g, int self) {
          const auto& go = g.grad_buf(self);
          for (std::size_t pi = 0; pi < ids.size(); ++pi) {
            if (ids[pi] < 0) continue;
            auto& buf = g.grad_buf(ids[pi]);
            for (std::size_t o = 0; o < outer; ++o)
              for (std::size_t m = 0; m < mids[pi]; ++m)
                for (std::size_t i = 0; i < inner; ++i)
                  buf[(o * mids[pi] + m) * inner + i] +=
                      go[(o * cat + offsets[pi] + m) * inner + i];
          }
        }));
  }
  return out;
}

namespace {

struct ConvDims {
  std::size_t B, Cin, H, W, Cout, kh, kw, Ho, Wo, stride, pad;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, std::size_t stride,
                   std::size_t pad) {
  if (x.rank() != 4 || w.rank() != 4)
    throw ShapeError("conv2d: expected rank-4 input and weight, got " +
                     shape_str(x.shape()) + " and " + shape_str(w.shape()));
  if (x.dim(1) != w.dim(1))
    throw ShapeError("conv2d: channel mismatch " + shape_str(x.shape()) +
                     " vs " + shape_str(w.shape()));
  if (stride != 1 && stride != 2)
    throw ValidationError("conv2d: stride must be 1 or 2");
  ConvDims d;
  d.B = x.dim(0); d.Cin = x.dim(1); d.H = x.dim(2); d.W = x.dim(3);
  d.Cout = w.dim(0); d.kh = w.dim(2); d.kw = w.dim(3);
  d.stride = stride; d.pad = pad;
  d.Ho = (d.H + 2 * pad - d.kh) / stride + 1;
  d.Wo = (d.W + 2 * pad - d.kw) / stride + 1;
  return d;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
              std::size_t stride, std::size_t pad) {
  ConvDims d = conv_dims(x, w, stride, pad);
  if (bias.size() != 0 && bias.size() != d.Cout)
    throw ShapeError("conv2d: bias shape " + shape_str(bias.shape()));
  Tensor out(Shape{d.B, d.Cout, d.Ho, d.Wo});
  const double* xp = x.data().data();
  const double* wp = w.data().data();
  double* op = out.data().data();
  for (std::size_t b = 0; b < d.B; ++b)
    for (std::size_t co = 0; co < d.Cout; ++co) {
      const double bv = bias.size() ? bias[co] : 0.0;
      for (std::size_t oy = 0; oy < d.Ho; ++oy)
        for (std::size_t ox = 0; ox < d.Wo; ++ox) {
          double acc = bv;
          for (std::size_t ci = 0; ci < d.Cin; ++ci)
            for (std::size_t ky = 0; ky < d.kh; ++ky) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                        static_cast<std::ptrdiff_t>(pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.H)) continue;
              for (std::size_t kx = 0; kx < d.kw; ++kx) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                          static_cast<std::ptrdiff_t>(pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.W)) continue;
                acc += xp[((b * d.Cin + ci) * d.H + iy) * d.W + ix] *
                       wp[((co * d.Cin + ci) * d.kh + ky) * d.kw + kx];
              }
            }
          op[((b * d.Cout + co) * d.Ho + oy) * d.Wo + ox] = acc;
        }
    }
  if (Graph* g = tracking_graph({&x, &w, &bias})) {
    int nx = x.node(), nw = w.node(), nb = bias.node();
    Tensor xv = x.detached(), wv = w.detached();
    out.set_node(g->add_node(
        {nx, nw, nb}, out.size(), [nx, nw, nb, xv, wv, d](Graph& g, int self) {
          const auto& go = g.grad_buf(self);
          const double* xp = xv.data().data();
          const double* wp = wv.data().data();
          std::vector<double>* dx = nx >= 0 ? &g.grad_buf(nx) : nullptr;
          std::vector<double>* dw = nw >= 0 ? &g.grad_buf(nw) : nullptr;
          std::vector<double>* db = nb >= 0 ? &g.grad_buf(nb) : nullptr;
          for (std::size_t b = 0; b < d.B; ++b)
            for (std::size_t co = 0; co < d.Cout; ++co)
              for (std::size_t oy = 0; oy < d.Ho; ++oy)
                for (std::size_t ox = 0; ox < d.Wo; ++ox) {
                  const double gv =
                      go[((b * d.Cout + co) * d.Ho + oy) * d.Wo + ox];
                  if (gv == 0.0) continue;
                  if (db) (*db)[co] += gv;
                  for (std::size_t ci = 0; ci < d.Cin; ++ci)
                    for (std::size_t ky = 0; ky < d.kh; ++ky) {
                      const std::ptrdiff_t iy =
                          static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                          static_cast<std::ptrdiff_t>(d.pad);
                      if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.H))
                        continue;
                      for (std::size_t kx = 0; kx < d.kw; ++kx) {
                        const std::ptrdiff_t ix =
                            static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                            static_cast<std::ptrdiff_t>(d.pad);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(d.W))
                          continue;
                        const std::size_t xi =
                            ((b * d.Cin + ci) * d.H + iy) * d.W + ix;
                        const std::size_t wi =
                            ((co * d.Cin + ci) * d.kh + ky) * d.kw + kx;
                        if (dw) (*dw)[wi] += gv * xp[xi];
                        if (dx) (*dx)[xi] += gv * wp[wi];
                      }
                    }
                }
        }));
  }
  return out;
}

Tensor avgpool2d(const Tensor& x, std::size_t k, std::size_t stride) {
  if (x.rank() != 4) throw ShapeError("avgpool2d: expected rank-4 input");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (k == 0 || k > H || k > W)
    throw ShapeError("avgpool2d: kernel does not fit input " +
                     shape_str(x.shape()));
  const std::size_t Ho = (H - k) / stride + 1, Wo = (W - k) / stride + 1;
  const double inv = 1.0 / static_cast<double>(k * k);
  Tensor out(Shape{B, C, Ho, Wo});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Wo; ++ox) {
          double acc = 0.0;
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx)
              acc += x[((b * C + c) * H + oy * stride + ky) * W + ox * stride + kx];
          out.at(((b * C + c) * Ho + oy) * Wo + ox) = acc * inv;
        }
  if (Graph* g = tracking_graph({&x})) {
    int nx = x.node();
    out.set_node(g->add_node(
        {nx}, out.size(), [nx, B, C, H, W, Ho, Wo, k, stride, inv](Graph& g, int self) {
          const auto& go = g.grad_buf(self);
          auto& dx = g.grad_buf(nx);
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c)
              for (std::size_t oy = 0; oy < Ho; ++oy)
                for (std::size_t ox = 0; ox < Wo; ++ox) {
                  const double gv = go[((b * C + c) * Ho + oy) * Wo + ox] * inv;
                  for (std::size_t ky = 0; ky < k; ++ky)
                    for (std::size_t kx = 0; kx < k; ++kx)
                      dx[((b * C + c) * H + oy * stride + ky) * W + ox * stride + kx] += gv;
                }
        }));
  }
  return out;
}

Tensor global_avg_pool(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("global_avg_pool: expected rank-4 input");
  const std::size_t B = x.dim(0), C = x.dim(1), S = x.dim(2) * x.dim(3);
  const double inv = 1.0 / static_cast<double>(S);
  Tensor out(Shape{B, C});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      double acc = 0.0;
      for (std::size_t s = 0; s < S; ++s) acc += x[(b * C + c) * S + s];
      out.at(b * C + c) = acc * inv;
    }
  if (Graph* g = tracking_graph({&x})) {
    int nx = x.node();
    out.set_node(
        g->add_node({nx}, out.size(), [nx, B, C, S, inv](Graph& g, int self) {
          const auto& go = g.grad_buf(self);
          auto& dx = g.grad_buf(nx);
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c) {
              const double gv = go[b * C + c] * inv;
              for (std::size_t s = 0; s < S; ++s) dx[(b * C + c) * S + s] += gv;
            }
        }));
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(1))
    throw ShapeError("linear: incompatible shapes " + shape_str(x.shape()) +
                     " and " + shape_str(w.shape()));
  const std::size_t B = x.dim(0), In = x.dim(1), Out = w.dim(0);
  if (bias.size() != 0 && bias.size() != Out)
    throw ShapeError("linear: bias shape " + shape_str(bias.shape()));
  Tensor out(Shape{B, Out});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < Out; ++o) {
      double acc = bias.size() ? bias[o] : 0.0;
      for (std::size_t i = 0; i < In; ++i) acc += x[b * In + i] * w[o * In + i];
      out.at(b * Out + o) = acc;
    }
  if (Graph* g = tracking_graph({&x, &w, &bias})) {
    int nx = x.node(), nw = w.node(), nb = bias.node();
    Tensor xv = x.detached(), wv = w.detached();
    out.set_node(g->add_node(
        {nx, nw, nb}, out.size(),
        [nx, nw, nb, xv, wv, B, In, Out](Graph& g, int self) {
          const auto& go = g.grad_buf(self);
          std::vector<double>* dx = nx >= 0 ? &g.grad_buf(nx) : nullptr;
          std::vector<double>* dw = nw >= 0 ? &g.grad_buf(nw) : nullptr;
          std::vector<double>* db = nb >= 0 ? &g.grad_buf(nb) : nullptr;
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t o = 0; o < Out; ++o) {
              const double gv = go[b * Out + o];
              if (gv == 0.0) continue;
              if (db) (*db)[o] += gv;
              for (std::size_t i = 0; i < In; ++i) {
                if (dw) (*dw)[o * In + i] += gv * xv[b * In + i];
                if (dx) (*dx)[b * In + i] += gv * wv[o * In + i];
              }
            }
        }));
  }
  return out;
}

Tensor l2_normalize_rows(const Tensor& a, bool strict) {
  if (a.rank() != 2) throw ShapeError("l2_normalize_rows: expected rank-2 input");
  const std::size_t R = a.dim(0), D = a.dim(1);
  Tensor out(a.shape());
  std::vector<double> norms(R, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    double s = 0.0;
    for (std::size_t d = 0; d < D; ++d) s += a[r * D + d] * a[r * D + d];
    norms[r] = std::sqrt(s);
    if (norms[r] == 0.0) {
      if (strict)
        throw NumericError("l2_normalize_rows: zero-norm row " +
                           std::to_string(r));
      continue;  // row stays zero
    }
    for (std::size_t d = 0; d < D; ++d) out.at(r * D + d) = a[r * D + d] / norms[r];
  }
  if (Graph* g = tracking_graph({&a})) {
    int na = a.node();
    Tensor ov = out.detached();
    out.set_node(
        g->add_node({na}, out.size(), [na, ov, norms, R, D](Graph& g, int self) {
          const auto& go = g.grad_buf(self);
          auto& da = g.grad_buf(na);
          for (std::size_t r = 0; r < R; ++r) {
            if (norms[r] == 0.0) continue;
            double dot = 0.0;
            for (std::size_t d = 0; d < D; ++d) dot += go[r * D + d] * ov[r * D + d];
            for (std::size_t d = 0; d < D; ++d)
              da[r * D + d] += (go[r * D + d] - ov[r * D + d] * dot) / norms[r];
          }
        }));
  }
  return out;
}

double surrogate_derivative_scalar(double u_pre, double v_th,
                                   SurrogateKind kind, double width) {
  const double d = std::abs(u_pre - v_th);
  if (kind == SurrogateKind::Rectangular)
    return d < width / 2.0 ? 1.0 / width : 0.0;
  return std::max(0.0, 1.0 - d / width) / width;
}

Tensor heaviside_surrogate(const Tensor& u_pre, double v_th,
                           SurrogateKind kind, double width) {
  if (width <= 0) throw ValidationError("heaviside_surrogate: width must be > 0");
  Tensor out(u_pre.shape());
  for (std::size_t i = 0; i < u_pre.size(); ++i)
    out.at(i) = u_pre[i] - v_th >= 0.0 ? 1.0 : 0.0;
  if (Graph* g = tracking_graph({&u_pre})) {
    int nu = u_pre.node();
    Tensor uv = u_pre.detached();
    out.set_node(g->add_node(
        {nu}, out.size(), [nu, uv, v_th, kind, width](Graph& g, int self) {
          const auto& go = g.grad_buf(self);
          auto& du = g.grad_buf(nu);
          for (std::size_t i = 0; i < go.size(); ++i)
            du[i] += go[i] * surrogate_derivative_scalar(uv[i], v_th, kind, width);
        }));
  }
  return out;
}

Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 std::vector<double>& running_mean,
                 std::vector<double>& running_var, bool training,
                 double momentum, double eps) {
  if (x.rank() != 2 && x.rank() != 4)
    throw ShapeError("batchnorm: expected rank-2 or rank-4 input");
  const std::size_t B = x.dim(0), C = x.dim(1);
  const std::size_t S = x.rank() == 4 ? x.dim(2) * x.dim(3) : 1;
  const std::size_t N = B * S;
  if (gamma.size() != C || beta.size() != C || running_mean.size() != C ||
      running_var.size() != C)
    throw ShapeError("batchnorm: parameter size mismatch for " +
                     std::to_string(C) + " channels");
  std::vector<double> mean(C), var(C);
  if (training) {
    for (std::size_t c = 0; c < C; ++c) {
      double m = 0.0;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t s = 0; s < S; ++s) m += x[(b * C + c) * S + s];
      m /= static_cast<double>(N);
      double v = 0.0;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t s = 0; s < S; ++s) {
          const double d = x[(b * C + c) * S + s] - m;
          v += d * d;
        }
      v /= static_cast<double>(N);
      mean[c] = m;
      var[c] = v;
      running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * m;
      running_var[c] = (1.0 - momentum) * running_var[c] + momentum * v;
    }
  } else {
    mean = running_mean;
    var = running_var;
  }
  std::vector<double> inv_std(C);
  for (std::size_t c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
  Tensor out(x.shape());
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t s = 0; s < S; ++s) {
        const std::size_t i = (b * C + c) * S + s;
        out.at(i) = gamma[c] * (x[i] - mean[c]) * inv_std[c] + beta[c];
      }
  if (Graph* g = tracking_graph({&x, &gamma, &beta})) {
    int nx = x.node(), ng = gamma.node(), nb = beta.node();
    Tensor xv = x.detached(), gv = gamma.detached();
    out.set_node(g->add_node(
        {nx, ng, nb}, out.size(),
        [nx, ng, nb, xv, gv, mean, inv_std, training, B, C, S,
         N](Graph& g, int self) {
          const auto& go = g.grad_buf(self);
          std::vector<double>* dx = nx >= 0 ? &g.grad_buf(nx) : nullptr;
          std::vector<double>* dg = ng >= 0 ? &g.grad_buf(ng) : nullptr;
          std::vector<double>* db = nb >= 0 ? &g.grad_buf(nb) : nullptr;
          for (std::size_t c = 0; c < C; ++c) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t b = 0; b < B; ++b)
              for (std::size_t s = 0; s < S; ++s) {
                const std::size_t i = (b * C + c) * S + s;
                const double xhat = (xv[i] - mean[c]) * inv_std[c];
                sum_dy += go[i];
                sum_dy_xhat += go[i] * xhat;
              }
            if (dg) (*dg)[c] += sum_dy_xhat;
            if (db) (*db)[c] += sum_dy;
            if (!dx) continue;
            for (std::size_t b = 0; b < B; ++b)
              for (std::size_t s = 0; s < S; ++s) {
                const std::size_t i = (b * C + c) * S + s;
                const double xhat = (xv[i] - mean[c]) * inv_std[c];
                if (training) {
                  (*dx)[i] += gv[c] * inv_std[c] *
                              (go[i] - sum_dy / static_cast<double>(N) -
                               xhat * sum_dy_xhat / static_cast<double>(N));
                } else {
                  (*dx)[i] += gv[c] * inv_std[c] * go[i];
                }
              }
          }
        }));
  }
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits,
                             const std::vector<int>& labels) {
  if (logits.rank() != 2)
    throw ShapeError("softmax_cross_entropy: expected rank-2 logits");
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  if (labels.size() != B)
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for batch " + std::to_string(B));
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= C)
      throw ValidationError("softmax_cross_entropy: label " +
                            std::to_string(y) + " out of range [0," +
                            std::to_string(C) + ")");
  std::vector<double> probs(B * C);
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    double m = logits[b * C];
    for (std::size_t c = 1; c < C; ++c) m = std::max(m, logits[b * C + c]);
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      probs[b * C + c] = std::exp(logits[b * C + c] - m);
      z += probs[b * C + c];
    }
    for (std::size_t c = 0; c < C; ++c) probs[b * C + c] /= z;
    total += -std::log(probs[b * C + labels[b]]);
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(B));
  if (Graph* g = tracking_graph({&logits})) {
    int nl = logits.node();
    out.set_node(
        g->add_node({nl}, 1, [nl, probs, labels, B, C](Graph& g, int self) {
          const double gv = g.grad_buf(self)[0] / static_cast<double>(B);
          auto& dl = g.grad_buf(nl);
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c)
              dl[b * C + c] +=
                  gv * (probs[b * C + c] -
                        (static_cast<std::size_t>(labels[b]) == c ? 1.0 : 0.0));
        }));
  }
  return out;
}

}  // namespace snntcl
