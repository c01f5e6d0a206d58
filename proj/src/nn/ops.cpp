#include "snowfuse/nn/ops.hpp"

#include <cmath>

#include "snowfuse/error.hpp"

namespace snowfuse::nn {

namespace {

using detail::Node;

void require(bool ok, const std::string& op, const Tensor& a, const Tensor& b) {
  if (!ok) throw ShapeError(op + ": incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

#ifndef NDEBUG
void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericalError(std::string(op) + ": non-finite value in forward pass");
  }
}
#else
void check_finite(const std::vector<double>&, const char*) {}
#endif

std::size_t out_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

struct ConvGeom {
  std::size_t c_in, h, w, c_out, k, stride, pad, oh, ow;
};

ConvGeom conv_geometry(const std::string& op, const Tensor& input, const Tensor& weight, std::size_t stride,
                       std::size_t padding, bool depthwise) {
  require(input.ndim() == 3 && weight.ndim() == 4, op, input, weight);
  ConvGeom g{};
  g.c_in = input.dim(0);
  g.h = input.dim(1);
  g.w = input.dim(2);
  g.c_out = weight.dim(0);
  g.k = weight.dim(2);
  g.stride = stride;
  g.pad = padding;
  require(weight.dim(3) == g.k && g.k % 2 == 1, op, input, weight);
  if (depthwise) {
    require(weight.dim(1) == 1 && g.c_out == g.c_in, op, input, weight);
  } else {
    require(weight.dim(1) == g.c_in, op, input, weight);
  }
  if (stride == 0) throw ArgumentError(op + ": stride must be >= 1");
  require(g.h + 2 * padding >= g.k && g.w + 2 * padding >= g.k, op, input, weight);
  g.oh = out_extent(g.h, g.k, stride, padding);
  g.ow = out_extent(g.w, g.k, stride, padding);
  return g;
}

// Valid output range [lo, hi) along one axis for kernel offset kk.
inline void valid_range(std::size_t kk, const ConvGeom& g, std::size_t in, std::size_t out, std::size_t& lo,
                        std::size_t& hi) {
  // in_index = o * stride + kk - pad must lie in [0, in)
  lo = 0;
  if (kk < g.pad) lo = (g.pad - kk + g.stride - 1) / g.stride;
  const long last = static_cast<long>(in) - 1 + static_cast<long>(g.pad) - static_cast<long>(kk);
  hi = last < 0 ? 0 : std::min<std::size_t>(out, static_cast<std::size_t>(last) / g.stride + 1);
  if (hi < lo) hi = lo;
}

// Accumulates one input channel plane into one output plane.
inline void conv_plane(const double* x, double wv, double* y, const ConvGeom& g, std::size_t kh, std::size_t kw) {
  std::size_t r0, r1, c0, c1;
  valid_range(kh, g, g.h, g.oh, r0, r1);
  valid_range(kw, g, g.w, g.ow, c0, c1);
  for (std::size_t r = r0; r < r1; ++r) {
    const double* xr = x + (r * g.stride + kh - g.pad) * g.w;
    double* yr = y + r * g.ow;
    if (g.stride == 1) {
      const double* xs = xr + kw - g.pad;
      for (std::size_t c = c0; c < c1; ++c) yr[c] += wv * xs[c];
    } else {
      for (std::size_t c = c0; c < c1; ++c) yr[c] += wv * xr[c * g.stride + kw - g.pad];
    }
  }
}

// Backward counterpart: dx += wv * dy, and returns sum(dy * x) for dw.
inline double conv_plane_backward(const double* x, double* dx, double wv, const double* dy, const ConvGeom& g,
                                  std::size_t kh, std::size_t kw) {
  std::size_t r0, r1, c0, c1;
  valid_range(kh, g, g.h, g.oh, r0, r1);
  valid_range(kw, g, g.w, g.ow, c0, c1);
  double dw = 0.0;
  for (std::size_t r = r0; r < r1; ++r) {
    const std::size_t off = (r * g.stride + kh - g.pad) * g.w + kw - g.pad;
    const double* dyr = dy + r * g.ow;
    for (std::size_t c = c0; c < c1; ++c) {
      const std::size_t i = off + c * g.stride;
      dw += dyr[c] * x[i];
      if (dx) dx[i] += wv * dyr[c];
    }
  }
  return dw;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, std::size_t stride, std::size_t padding) {
  const auto g = conv_geometry("conv2d", input, weight, stride, padding, false);
  std::vector<double> out(g.c_out * g.oh * g.ow, 0.0);
  const double* x = input.values().data();
  const double* w = weight.values().data();
  const std::size_t plane_in = g.h * g.w, plane_out = g.oh * g.ow, kk = g.k * g.k;
  for (std::size_t co = 0; co < g.c_out; ++co) {
    double* y = out.data() + co * plane_out;
    for (std::size_t ci = 0; ci < g.c_in; ++ci) {
      const double* wk = w + (co * g.c_in + ci) * kk;
      for (std::size_t kh = 0; kh < g.k; ++kh) {
        for (std::size_t kw = 0; kw < g.k; ++kw) conv_plane(x + ci * plane_in, wk[kh * g.k + kw], y, g, kh, kw);
      }
    }
  }
  check_finite(out, "conv2d");
  return detail::make_result({g.c_out, g.oh, g.ow}, std::move(out), {input, weight}, [g](Node& self) {
    auto& in = *self.parents[0];
    auto& wt = *self.parents[1];
    double* dx = in.requires_grad ? in.grad_buffer().data() : nullptr;
    double* dw = wt.requires_grad ? wt.grad_buffer().data() : nullptr;
    const std::size_t plane_in = g.h * g.w, plane_out = g.oh * g.ow, kk = g.k * g.k;
    for (std::size_t co = 0; co < g.c_out; ++co) {
      const double* dy = self.grad.data() + co * plane_out;
      for (std::size_t ci = 0; ci < g.c_in; ++ci) {
        const std::size_t wbase = (co * g.c_in + ci) * kk;
        for (std::size_t kh = 0; kh < g.k; ++kh) {
          for (std::size_t kw = 0; kw < g.k; ++kw) {
            const double s = conv_plane_backward(in.value.data() + ci * plane_in, dx ? dx + ci * plane_in : nullptr,
                                                 wt.value[wbase + kh * g.k + kw], dy, g, kh, kw);
            if (dw) dw[wbase + kh * g.k + kw] += s;
          }
        }
      }
    }
  });
}

Tensor depthwise_conv2d(const Tensor& input, const Tensor& weight, std::size_t stride, std::size_t padding) {
  const auto g = conv_geometry("depthwise_conv2d", input, weight, stride, padding, true);
  std::vector<double> out(g.c_out * g.oh * g.ow, 0.0);
  const double* x = input.values().data();
  const double* w = weight.values().data();
  const std::size_t plane_in = g.h * g.w, plane_out = g.oh * g.ow, kk = g.k * g.k;
  for (std::size_t c = 0; c < g.c_in; ++c) {
    for (std::size_t kh = 0; kh < g.k; ++kh) {
      for (std::size_t kw = 0; kw < g.k; ++kw) {
        conv_plane(x + c * plane_in, w[c * kk + kh * g.k + kw], out.data() + c * plane_out, g, kh, kw);
      }
    }
  }
  check_finite(out, "depthwise_conv2d");
  return detail::make_result({g.c_out, g.oh, g.ow}, std::move(out), {input, weight}, [g](Node& self) {
    auto& in = *self.parents[0];
    auto& wt = *self.parents[1];
    double* dx = in.requires_grad ? in.grad_buffer().data() : nullptr;
    double* dw = wt.requires_grad ? wt.grad_buffer().data() : nullptr;
    const std::size_t plane_in = g.h * g.w, plane_out = g.oh * g.ow, kk = g.k * g.k;
    for (std::size_t c = 0; c < g.c_in; ++c) {
      for (std::size_t kh = 0; kh < g.k; ++kh) {
        for (std::size_t kw = 0; kw < g.k; ++kw) {
          const std::size_t wi = c * kk + kh * g.k + kw;
          const double s = conv_plane_backward(in.value.data() + c * plane_in, dx ? dx + c * plane_in : nullptr,
                                               wt.value[wi], self.grad.data() + c * plane_out, g, kh, kw);
          if (dw) dw[wi] += s;
        }
      }
    }
  });
}

Tensor add_channel_bias(const Tensor& input, const Tensor& bias) {
  require(input.ndim() == 3 && bias.ndim() == 1 && bias.dim(0) == input.dim(0), "add_channel_bias", input, bias);
  const std::size_t c = input.dim(0), plane = input.dim(1) * input.dim(2);
  std::vector<double> out(input.values().begin(), input.values().end());
  for (std::size_t i = 0; i < c; ++i) {
    const double b = bias.values()[i];
    for (std::size_t j = 0; j < plane; ++j) out[i * plane + j] += b;
  }
  return detail::make_result(input.shape(), std::move(out), {input, bias}, [c, plane](Node& self) {
    auto& in = *self.parents[0];
    auto& b = *self.parents[1];
    if (in.requires_grad) {
      auto& dx = in.grad_buffer();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
    }
    if (b.requires_grad) {
      auto& db = b.grad_buffer();
      for (std::size_t i = 0; i < c; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < plane; ++j) s += self.grad[i * plane + j];
        db[i] += s;
      }
    }
  });
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require(input.ndim() == 1 && weight.ndim() == 2 && weight.dim(1) == input.dim(0), "linear", input, weight);
  require(bias.ndim() == 1 && bias.dim(0) == weight.dim(0), "linear", weight, bias);
  const std::size_t g = weight.dim(0), f = weight.dim(1);
  std::vector<double> out(g);
  const double* x = input.values().data();
  const double* w = weight.values().data();
  for (std::size_t i = 0; i < g; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < f; ++j) s += w[i * f + j] * x[j];
    out[i] = s + bias.values()[i];
  }
  check_finite(out, "linear");
  return detail::make_result({g}, std::move(out), {input, weight, bias}, [g, f](Node& self) {
    auto& in = *self.parents[0];
    auto& wt = *self.parents[1];
    auto& b = *self.parents[2];
    const double* dy = self.grad.data();
    if (in.requires_grad) {
      auto& dx = in.grad_buffer();
      for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = 0; j < f; ++j) dx[j] += wt.value[i * f + j] * dy[i];
      }
    }
    if (wt.requires_grad) {
      auto& dw = wt.grad_buffer();
      for (std::size_t i = 0; i < g; ++i) {
        for (std::size_t j = 0; j < f; ++j) dw[i * f + j] += dy[i] * in.value[j];
      }
    }
    if (b.requires_grad) {
      auto& db = b.grad_buffer();
      for (std::size_t i = 0; i < g; ++i) db[i] += dy[i];
    }
  });
}

Tensor relu(const Tensor& t) {
  std::vector<double> out(t.values().begin(), t.values().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return detail::make_result(t.shape(), std::move(out), {t}, [](Node& self) {
    auto& in = *self.parents[0];
    auto& dx = in.grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (in.value[i] > 0.0) dx[i] += self.grad[i];
    }
  });
}

Tensor global_avg_pool(const Tensor& t) {
  if (t.ndim() != 3) throw ShapeError("global_avg_pool: expected [C,H,W], got " + shape_str(t.shape()));
  const std::size_t c = t.dim(0), plane = t.dim(1) * t.dim(2);
  std::vector<double> out(c);
  for (std::size_t i = 0; i < c; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < plane; ++j) s += t.values()[i * plane + j];
    out[i] = s / static_cast<double>(plane);
  }
  return detail::make_result({c}, std::move(out), {t}, [c, plane](Node& self) {
    auto& dx = self.parents[0]->grad_buffer();
    const double inv = 1.0 / static_cast<double>(plane);
    for (std::size_t i = 0; i < c; ++i) {
      const double g = self.grad[i] * inv;
      for (std::size_t j = 0; j < plane; ++j) dx[i * plane + j] += g;
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ArgumentError("concat: empty input list");
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  const std::size_t n = out.size();
  return detail::make_result({n}, std::move(out), parts, [offsets](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      auto& p = *self.parents[k];
      if (!p.requires_grad) continue;
      auto& dx = p.grad_buffer();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[offsets[k] + i];
    }
  });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  require(pred.size() == target.size(), "mse_loss", pred, target);
  const std::size_t n = pred.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.values()[i] - target.values()[i];
    s += d * d;
  }
  return detail::make_result({1}, {s / static_cast<double>(n)}, {pred, target}, [n](Node& self) {
    auto& p = *self.parents[0];
    auto& t = *self.parents[1];
    const double scale = 2.0 * self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = scale * (p.value[i] - t.value[i]);
      if (p.requires_grad) p.grad_buffer()[i] += d;
      if (t.requires_grad) t.grad_buffer()[i] -= d;
    }
  });
}

Tensor weighted_sum(const Tensor& t, std::span<const double> weights) {
  if (weights.size() != t.size()) {
    throw ShapeError("weighted_sum: " + std::to_string(weights.size()) + " weights for shape " + shape_str(t.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += weights[i] * t.values()[i];
  std::vector<double> w(weights.begin(), weights.end());
  return detail::make_result({1}, {s}, {t}, [w = std::move(w)](Node& self) {
    auto& dx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += w[i] * self.grad[0];
  });
}

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Tensor lstm_sequence(const Tensor& inputs, const LstmWeights& wts, const Tensor& h0, const Tensor& c0) {
  if (inputs.ndim() != 2) throw ShapeError("lstm_sequence: inputs must be [T,F], got " + shape_str(inputs.shape()));
  const std::size_t steps = inputs.dim(0), f = inputs.dim(1);
  if (steps == 0) throw ArgumentError("lstm_sequence: empty sequence");
  const std::size_t h = h0.size();
  require(h0.ndim() == 1 && c0.ndim() == 1 && c0.size() == h, "lstm_sequence", h0, c0);
  require(wts.w_ih.ndim() == 2 && wts.w_ih.dim(0) == 4 * h && wts.w_ih.dim(1) == f, "lstm_sequence", inputs, wts.w_ih);
  require(wts.w_hh.ndim() == 2 && wts.w_hh.dim(0) == 4 * h && wts.w_hh.dim(1) == h, "lstm_sequence", h0, wts.w_hh);
  require(wts.bias.ndim() == 1 && wts.bias.dim(0) == 4 * h, "lstm_sequence", h0, wts.bias);

  // Per step: gates (i,f,g,o activated, 4H), c_t, tanh(c_t), h_t.
  auto gates = std::make_shared<std::vector<double>>(steps * 4 * h);
  auto cells = std::make_shared<std::vector<double>>((steps + 1) * h);
  auto hidden = std::make_shared<std::vector<double>>((steps + 1) * h);
  auto tanh_c = std::make_shared<std::vector<double>>(steps * h);
  std::copy(h0.values().begin(), h0.values().end(), hidden->begin());
  std::copy(c0.values().begin(), c0.values().end(), cells->begin());

  const double* x = inputs.values().data();
  const double* wih = wts.w_ih.values().data();
  const double* whh = wts.w_hh.values().data();
  const double* b = wts.bias.values().data();
  std::vector<double> z(4 * h);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* xt = x + t * f;
    const double* hp = hidden->data() + t * h;
    for (std::size_t r = 0; r < 4 * h; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < f; ++j) s += wih[r * f + j] * xt[j];
      for (std::size_t j = 0; j < h; ++j) s += whh[r * h + j] * hp[j];
      z[r] = s + b[r];
    }
    double* gt = gates->data() + t * 4 * h;
    const double* cp = cells->data() + t * h;
    double* cn = cells->data() + (t + 1) * h;
    double* hn = hidden->data() + (t + 1) * h;
    for (std::size_t k = 0; k < h; ++k) {
      const double ig = sigmoid(z[k]), fg = sigmoid(z[h + k]), gg = std::tanh(z[2 * h + k]),
                   og = sigmoid(z[3 * h + k]);
      gt[k] = ig;
      gt[h + k] = fg;
      gt[2 * h + k] = gg;
      gt[3 * h + k] = og;
      cn[k] = fg * cp[k] + ig * gg;
      const double tc = std::tanh(cn[k]);
      (*tanh_c)[t * h + k] = tc;
      hn[k] = og * tc;
    }
  }
  std::vector<double> out(hidden->begin() + static_cast<std::ptrdiff_t>(steps * h), hidden->end());
  check_finite(out, "lstm_sequence");

  return detail::make_result(
      {h}, std::move(out), {inputs, wts.w_ih, wts.w_hh, wts.bias, h0, c0},
      [steps, f, h, gates, cells, hidden, tanh_c](Node& self) {
        auto& in = *self.parents[0];
        auto& wih_n = *self.parents[1];
        auto& whh_n = *self.parents[2];
        auto& b_n = *self.parents[3];
        auto& h0_n = *self.parents[4];
        auto& c0_n = *self.parents[5];
        std::vector<double> dh(self.grad.begin(), self.grad.end());
        std::vector<double> dc(h, 0.0), dz(4 * h), dh_prev(h);
        for (std::size_t t = steps; t-- > 0;) {
          const double* gt = gates->data() + t * 4 * h;
          const double* cp = cells->data() + t * h;
          const double* hp = hidden->data() + t * h;
          const double* tc = tanh_c->data() + t * h;
          for (std::size_t k = 0; k < h; ++k) {
            const double ig = gt[k], fg = gt[h + k], gg = gt[2 * h + k], og = gt[3 * h + k];
            const double d_o = dh[k] * tc[k];
            const double dct = dc[k] + dh[k] * og * (1.0 - tc[k] * tc[k]);
            dz[k] = dct * gg * ig * (1.0 - ig);
            dz[h + k] = dct * cp[k] * fg * (1.0 - fg);
            dz[2 * h + k] = dct * ig * (1.0 - gg * gg);
            dz[3 * h + k] = d_o * og * (1.0 - og);
            dc[k] = dct * fg;
          }
          const double* xt = in.value.data() + t * f;
          if (wih_n.requires_grad) {
            auto& g = wih_n.grad_buffer();
            for (std::size_t r = 0; r < 4 * h; ++r) {
              for (std::size_t j = 0; j < f; ++j) g[r * f + j] += dz[r] * xt[j];
            }
          }
          if (whh_n.requires_grad) {
            auto& g = whh_n.grad_buffer();
            for (std::size_t r = 0; r < 4 * h; ++r) {
              for (std::size_t j = 0; j < h; ++j) g[r * h + j] += dz[r] * hp[j];
            }
          }
          if (b_n.requires_grad) {
            auto& g = b_n.grad_buffer();
            for (std::size_t r = 0; r < 4 * h; ++r) g[r] += dz[r];
          }
          if (in.requires_grad) {
            auto& g = in.grad_buffer();
            for (std::size_t r = 0; r < 4 * h; ++r) {
              for (std::size_t j = 0; j < f; ++j) g[t * f + j] += wih_n.value[r * f + j] * dz[r];
            }
          }
          std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
          for (std::size_t r = 0; r < 4 * h; ++r) {
            for (std::size_t j = 0; j < h; ++j) dh_prev[j] += whh_n.value[r * h + j] * dz[r];
          }
          dh.swap(dh_prev);
        }
        if (h0_n.requires_grad) {
          auto& g = h0_n.grad_buffer();
          for (std::size_t k = 0; k < h; ++k) g[k] += dh[k];
        }
        if (c0_n.requires_grad) {
          auto& g = c0_n.grad_buffer();
          for (std::size_t k = 0; k < h; ++k) g[k] += dc[k];
        }
      });
}

}  // namespace snowfuse::nn
