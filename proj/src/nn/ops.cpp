#include "ktnext/nn/ops.hpp"

#include <algorithm>

#include "ktnext/error.hpp"

namespace ktnext::nn {

namespace {

void require_same(const Shape& a, const Shape& b, const char* op) {
  if (!(a == b)) {
    throw Error(ErrorCode::DimensionMismatch, std::string(op) + ": " + to_string(a) + " vs " + to_string(b));
  }
}

struct Tap {
  long dy, dx;
  std::size_t y0, y1, x0, x1;  // output rows/cols that read inside the input
};

Tap make_tap(std::size_t ky, std::size_t kx, std::size_t k, int dilation, std::size_t h, std::size_t w) {
  const long r = static_cast<long>(k / 2);
  Tap t{};
  t.dy = (static_cast<long>(ky) - r) * dilation;
  t.dx = (static_cast<long>(kx) - r) * dilation;
  const long H = static_cast<long>(h), W = static_cast<long>(w);
  t.y0 = static_cast<std::size_t>(std::clamp(-t.dy, 0L, H));
  t.y1 = static_cast<std::size_t>(std::clamp(H - t.dy, 0L, H));
  t.x0 = static_cast<std::size_t>(std::clamp(-t.dx, 0L, W));
  t.x1 = static_cast<std::size_t>(std::clamp(W - t.dx, 0L, W));
  return t;
}

void check_conv_shapes(const Shape& x, const Shape& w, const Tensor* bias, int dilation) {
  if (dilation < 1) throw Error(ErrorCode::InvalidArgument, "conv2d: dilation must be >= 1");
  if (w.h != w.w || w.h % 2 == 0) throw Error(ErrorCode::InvalidArgument, "conv2d: kernel must be square and odd");
  if (w.c != x.c) {
    throw Error(ErrorCode::DimensionMismatch, "conv2d: input has " + std::to_string(x.c) +
                                                  " channels, kernel expects " + std::to_string(w.c));
  }
  if (bias && !(bias->shape() == Shape{1, w.n, 1, 1})) {
    throw Error(ErrorCode::DimensionMismatch, "conv2d: bias shape " + to_string(bias->shape()));
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int dilation) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  check_conv_shapes(xs, ws, bias, dilation);
  Tensor out(Shape{xs.n, ws.n, xs.h, xs.w}, 0.0);
  const std::size_t k = ws.h, H = xs.h, W = xs.w, plane = H * W;
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t co = 0; co < ws.n; ++co) {
      double* o = &out(n, co, 0, 0);
      if (bias) std::fill(o, o + plane, (*bias)[co]);
      for (std::size_t ci = 0; ci < xs.c; ++ci) {
        const double* in = &x(n, ci, 0, 0);
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const double wv = w(co, ci, ky, kx);
            if (wv == 0.0) continue;
            const Tap t = make_tap(ky, kx, k, dilation, H, W);
            for (std::size_t y = t.y0; y < t.y1; ++y) {
              double* orow = o + y * W;
              const double* irow = in + static_cast<std::size_t>(static_cast<long>(y) + t.dy) * W;
              for (std::size_t xx = t.x0; xx < t.x1; ++xx) orow[xx] += wv * irow[static_cast<long>(xx) + t.dx];
            }
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, int dilation, Tensor* grad_x,
                     Tensor* grad_w, Tensor* grad_b) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  const std::size_t k = ws.h, H = xs.h, W = xs.w, plane = H * W;
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t co = 0; co < ws.n; ++co) {
      const double* g = &grad_out(n, co, 0, 0);
      if (grad_b) {
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += g[i];
        (*grad_b)[co] += s;
      }
      for (std::size_t ci = 0; ci < xs.c; ++ci) {
        const double* in = &x(n, ci, 0, 0);
        double* gin = grad_x ? &(*grad_x)(n, ci, 0, 0) : nullptr;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const Tap t = make_tap(ky, kx, k, dilation, H, W);
            const double wv = w(co, ci, ky, kx);
            double acc = 0.0;
            for (std::size_t y = t.y0; y < t.y1; ++y) {
              const double* grow = g + y * W;
              const std::size_t src_row = static_cast<std::size_t>(static_cast<long>(y) + t.dy) * W;
              if (grad_w) {
                const double* irow = in + src_row;
                for (std::size_t xx = t.x0; xx < t.x1; ++xx) acc += grow[xx] * irow[static_cast<long>(xx) + t.dx];
              }
              if (gin && wv != 0.0) {
                double* girow = gin + src_row;
                for (std::size_t xx = t.x0; xx < t.x1; ++xx) girow[static_cast<long>(xx) + t.dx] += wv * grow[xx];
              }
            }
            if (grad_w) (*grad_w)(co, ci, ky, kx) += acc;
          }
        }
      }
    }
  }
}

Var conv2d(const Var& x, const Var& weights, const std::optional<Var>& bias, int dilation) {
  Graph* g = x.graph();
  const Tensor* b = bias ? &bias->value() : nullptr;
  Tensor out = conv2d_forward(x.value(), weights.value(), b, dilation);
  std::vector<Var> parents{x, weights};
  if (bias) parents.push_back(*bias);
  return g->record(std::move(out), parents,
                   [x, weights, dilation](const Tensor& go, std::span<Tensor* const> pg) {
                     conv2d_backward(x.value(), weights.value(), go, dilation, pg[0], pg[1],
                                     pg.size() > 2 ? pg[2] : nullptr);
                   });
}

Var leaky_relu(const Var& x, double slope) {
  const Tensor& v = x.value();
  Tensor out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : slope * v[i];
  return x.graph()->record(std::move(out), {x}, [x, slope](const Tensor& go, std::span<Tensor* const> pg) {
    const Tensor& v = x.value();
    Tensor& gx = *pg[0];
    for (std::size_t i = 0; i < v.size(); ++i) gx[i] += v[i] > 0.0 ? go[i] : slope * go[i];
  });
}

Var relu(const Var& x) { return leaky_relu(x, 0.0); }

Var add(const std::vector<Var>& terms) {
  if (terms.empty()) throw Error(ErrorCode::InvalidArgument, "add: no terms");
  Tensor out = terms.front().value();
  for (std::size_t i = 1; i < terms.size(); ++i) {
    require_same(out.shape(), terms[i].shape(), "add");
    out += terms[i].value();
  }
  return terms.front().graph()->record(std::move(out), terms, [](const Tensor& go, std::span<Tensor* const> pg) {
    for (Tensor* p : pg) {
      if (p) *p += go;
    }
  });
}

Var add(const Var& a, const Var& b) { return add(std::vector<Var>{a, b}); }

Var scale(const Var& x, double s) {
  Tensor out = x.value();
  for (auto& v : out.values()) v *= s;
  return x.graph()->record(std::move(out), {x}, [s](const Tensor& go, std::span<Tensor* const> pg) {
    Tensor& gx = *pg[0];
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += s * go[i];
  });
}

Var sub(const Var& a, const Var& b) { return add(a, scale(b, -1.0)); }

Var add_channel_bias(const Var& x, const Var& bias) {
  const Shape s = x.shape();
  if (!(bias.shape() == Shape{1, s.c, 1, 1})) throw Error(ErrorCode::DimensionMismatch, "bias shape");
  Tensor out = x.value();
  const std::size_t plane = s.h * s.w;
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      double* o = &out(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) o[i] += bias.value()[c];
    }
  return x.graph()->record(std::move(out), {x, bias}, [s, plane](const Tensor& go, std::span<Tensor* const> pg) {
    if (pg[0]) *pg[0] += go;
    if (pg[1]) {
      for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c) {
          const double* g = &go(n, c, 0, 0);
          double acc = 0.0;
          for (std::size_t i = 0; i < plane; ++i) acc += g[i];
          (*pg[1])[c] += acc;
        }
    }
  });
}

Var concat_channels(const Var& a, const Var& b) {
  const Shape sa = a.shape(), sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw Error(ErrorCode::DimensionMismatch, "concat_channels: " + to_string(sa) + " vs " + to_string(sb));
  }
  const std::size_t plane = sa.h * sa.w;
  Tensor out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  for (std::size_t n = 0; n < sa.n; ++n) {
    std::copy_n(&a.value()(n, 0, 0, 0), sa.c * plane, &out(n, 0, 0, 0));
    std::copy_n(&b.value()(n, 0, 0, 0), sb.c * plane, &out(n, sa.c, 0, 0));
  }
  return a.graph()->record(std::move(out), {a, b}, [sa, sb, plane](const Tensor& go, std::span<Tensor* const> pg) {
    for (std::size_t n = 0; n < sa.n; ++n) {
      if (pg[0]) {
        const double* g = &go(n, 0, 0, 0);
        double* d = &(*pg[0])(n, 0, 0, 0);
        for (std::size_t i = 0; i < sa.c * plane; ++i) d[i] += g[i];
      }
      if (pg[1]) {
        const double* g = &go(n, sa.c, 0, 0);
        double* d = &(*pg[1])(n, 0, 0, 0);
        for (std::size_t i = 0; i < sb.c * plane; ++i) d[i] += g[i];
      }
    }
  });
}

Var slice_batch(const Var& x, std::size_t i) {
  const Shape s = x.shape();
  if (i >= s.n) throw Error(ErrorCode::InvalidArgument, "slice_batch: index out of range");
  const std::size_t len = s.c * s.h * s.w;
  const auto first = x.value().values().begin() + static_cast<std::ptrdiff_t>(i * len);
  Tensor out(Shape{1, s.c, s.h, s.w}, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(len)));
  return x.graph()->record(std::move(out), {x}, [i, len](const Tensor& go, std::span<Tensor* const> pg) {
    double* d = pg[0]->values().data() + i * len;
    for (std::size_t k = 0; k < len; ++k) d[k] += go[k];
  });
}

Var stack_batch(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "stack_batch: no parts");
  const Shape s = parts.front().shape();
  if (s.n != 1) throw Error(ErrorCode::DimensionMismatch, "stack_batch: parts must have batch 1");
  const std::size_t len = s.size();
  Tensor out(Shape{parts.size(), s.c, s.h, s.w});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    require_same(parts[i].shape(), s, "stack_batch");
    std::copy_n(parts[i].value().values().data(), len, out.values().data() + i * len);
  }
  return parts.front().graph()->record(std::move(out), parts, [len](const Tensor& go, std::span<Tensor* const> pg) {
    for (std::size_t i = 0; i < pg.size(); ++i) {
      if (!pg[i]) continue;
      const double* g = go.values().data() + i * len;
      for (std::size_t k = 0; k < len; ++k) (*pg[i])[k] += g[k];
    }
  });
}

namespace {
Tensor swap_nh(const Tensor& v) {
  const Shape s = v.shape();
  Tensor out(Shape{s.h, s.c, s.n, s.w});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t h = 0; h < s.h; ++h) std::copy_n(&v(n, c, h, 0), s.w, &out(h, c, n, 0));
  return out;
}
}  // namespace

Var swap_batch_height(const Var& x) {
  return x.graph()->record(swap_nh(x.value()), {x}, [](const Tensor& go, std::span<Tensor* const> pg) {
    *pg[0] += swap_nh(go);
  });
}

Var squared_error(const Var& a, const Var& b) {
  require_same(a.shape(), b.shape(), "squared_error");
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    acc += d * d;
  }
  return a.graph()->record(Tensor(Shape{}, acc), {a, b}, [a, b](const Tensor& go, std::span<Tensor* const> pg) {
    const Tensor& va = a.value();
    const Tensor& vb = b.value();
    const double g = go[0];
    for (std::size_t i = 0; i < va.size(); ++i) {
      const double d = 2.0 * g * (va[i] - vb[i]);
      if (pg[0]) (*pg[0])[i] += d;
      if (pg[1]) (*pg[1])[i] -= d;
    }
  });
}

Var sum(const Var& x) {
  double acc = 0.0;
  for (double v : x.value().values()) acc += v;
  return x.graph()->record(Tensor(Shape{}, acc), {x}, [](const Tensor& go, std::span<Tensor* const> pg) {
    for (auto& v : pg[0]->values()) v += go[0];
  });
}

Var linear_map(const Var& x, Shape out_shape, std::function<Tensor(const Tensor&)> forward,
               std::function<Tensor(const Tensor&)> adjoint) {
  Tensor out = forward(x.value());
  require_same(out.shape(), out_shape, "linear_map");
  return x.graph()->record(std::move(out), {x}, [adjoint = std::move(adjoint)](const Tensor& go, std::span<Tensor* const> pg) {
    *pg[0] += adjoint(go);
  });
}

Var affine_map(const Var& x, std::function<Tensor(const Tensor&)> forward,
               std::function<Tensor(const Tensor&)> adjoint) {
  Tensor out = forward(x.value());
  return x.graph()->record(std::move(out), {x}, [adjoint = std::move(adjoint)](const Tensor& go, std::span<Tensor* const> pg) {
    *pg[0] += adjoint(go);
  });
}

}  // namespace ktnext::nn
