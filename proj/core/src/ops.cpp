/* Copyright 2026 The TWNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "twnet/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "twnet/errors.hpp"

namespace twnet {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

void require_rank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                     " tensor, got " + to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

struct ConvGeometry {
  int channels, height, width, kernel, stride, padding, out_h, out_w;

  int patch() const { return channels * kernel * kernel; }
  int pixels() const { return out_h * out_w; }
  bool is_pointwise() const { return kernel == 1 && stride == 1 && padding == 0; }
};

void im2col(const double* x, const ConvGeometry& g, double* col) {
  const int k = g.kernel;
  for (int c = 0; c < g.channels; ++c) {
    const double* plane = x + static_cast<std::size_t>(c) * g.height * g.width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = col + static_cast<std::size_t>((c * k + ky) * k + kx) * g.pixels();
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.padding + ky;
          double* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.padding + kx;
            dst[ox] = (ix >= 0 && ix < g.width) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeometry& g, double* dx) {
  const int k = g.kernel;
  for (int c = 0; c < g.channels; ++c) {
    double* plane = dx + static_cast<std::size_t>(c) * g.height * g.width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = col + static_cast<std::size_t>((c * k + ky) * k + kx) * g.pixels();
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= g.height) continue;
          const double* src = row + static_cast<std::size_t>(oy) * g.out_w;
          double* dst = plane + static_cast<std::size_t>(iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.padding + kx;
            if (ix >= 0 && ix < g.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// Per-axis interpolation table for align-corners-false bilinear sampling.
struct AxisTable {
  std::vector<int> lo, hi;
  std::vector<double> frac;
};

AxisTable make_axis_table(int in, int out) {
  AxisTable t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double ratio = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * ratio - 0.5;
    if (src < 0.0) src = 0.0;
    int lo = static_cast<int>(std::floor(src));
    if (lo > in - 1) lo = in - 1;
    t.lo[i] = lo;
    t.hi[i] = std::min(lo + 1, in - 1);
    t.frac[i] = src - lo;
  }
  return t;
}

template <typename Fn>
Tensor unary(const Tensor& x, Fn&& forward, std::function<void(detail::Node&)> backward) {
  std::vector<double> out(x.numel());
  auto v = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(v[i]);
  return Tensor::make_result(x.shape(), std::move(out), {x}, std::move(backward));
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias, int stride,
              int padding) {
  require_rank(input, 4, "conv2d input");
  require_rank(weights, 4, "conv2d weights");
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  if (padding < 0) throw ShapeError("conv2d: padding must be >= 0");
  const int n = input.dim(0);
  const int out_ch = weights.dim(0);
  const int k = weights.dim(2);
  if (weights.dim(3) != k) throw ShapeError("conv2d: kernel must be square, got " + to_string(weights.shape()));
  if (weights.dim(1) != input.dim(1)) {
    throw ShapeError("conv2d: input has " + std::to_string(input.dim(1)) +
                     " channels but weights " + to_string(weights.shape()) + " expect " +
                     std::to_string(weights.dim(1)));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != out_ch)) {
    throw ShapeError("conv2d: bias shape " + to_string(bias.shape()) + " does not match " +
                     std::to_string(out_ch) + " output channels");
  }
  ConvGeometry g{input.dim(1), input.dim(2), input.dim(3), k, stride, padding, 0, 0};
  const int span_h = g.height + 2 * padding - k;
  const int span_w = g.width + 2 * padding - k;
  if (span_h < 0 || span_w < 0) {
    throw ShapeError("conv2d: kernel " + std::to_string(k) + " larger than padded input " +
                     to_string(input.shape()));
  }
  g.out_h = span_h / stride + 1;
  g.out_w = span_w / stride + 1;

  const std::size_t in_plane = static_cast<std::size_t>(g.channels) * g.height * g.width;
  const std::size_t out_plane = static_cast<std::size_t>(out_ch) * g.pixels();
  std::vector<double> out(static_cast<std::size_t>(n) * out_plane);
  std::vector<double> col(g.is_pointwise() ? 0 : static_cast<std::size_t>(g.patch()) * g.pixels());

  ConstMatrixMap w(weights.values().data(), out_ch, g.patch());
  const double* x = input.values().data();
  for (int b = 0; b < n; ++b) {
    const double* src = x + b * in_plane;
    if (!g.is_pointwise()) {
      im2col(src, g, col.data());
      src = col.data();
    }
    MatrixMap y(out.data() + b * out_plane, out_ch, g.pixels());
    y.noalias() = w * ConstMatrixMap(src, g.patch(), g.pixels());
    if (bias.defined()) {
      auto bv = bias.values();
      for (int o = 0; o < out_ch; ++o) y.row(o).array() += bv[o];
    }
  }

  const bool has_bias = bias.defined();
  std::vector<Tensor> inputs{input, weights};
  if (has_bias) inputs.push_back(bias);
  return Tensor::make_result(
      {n, out_ch, g.out_h, g.out_w}, std::move(out), std::move(inputs),
      [g, n, out_ch, in_plane, out_plane, has_bias](detail::Node& self) {
        auto& xin = *self.parents[0];
        auto& wn = *self.parents[1];
        ConstMatrixMap w(wn.value.data(), out_ch, g.patch());
        std::vector<double> col(static_cast<std::size_t>(g.patch()) * g.pixels());
        for (int b = 0; b < n; ++b) {
          ConstMatrixMap dy(self.grad.data() + b * out_plane, out_ch, g.pixels());
          const double* src = xin.value.data() + b * in_plane;
          if (!g.is_pointwise()) {
            im2col(src, g, col.data());
            src = col.data();
          }
          if (wn.requires_grad) {
            MatrixMap dw(wn.grad_buffer().data(), out_ch, g.patch());
            dw.noalias() += dy * ConstMatrixMap(src, g.patch(), g.pixels()).transpose();
          }
          if (has_bias && self.parents[2]->requires_grad) {
            auto& db = self.parents[2]->grad_buffer();
            for (int o = 0; o < out_ch; ++o) db[o] += dy.row(o).sum();
          }
          if (xin.requires_grad) {
            double* dx = xin.grad_buffer().data() + b * in_plane;
            if (g.is_pointwise()) {
              MatrixMap(dx, g.patch(), g.pixels()).noalias() += w.transpose() * dy;
            } else {
              MatrixMap(col.data(), g.patch(), g.pixels()).noalias() = w.transpose() * dy;
              col2im_add(col.data(), g, dx);
            }
          }
        }
      });
}

Tensor bilinear_resize(const Tensor& input, int out_h, int out_w) {
  require_rank(input, 4, "bilinear_resize");
  if (out_h < 1 || out_w < 1) {
    throw ShapeError("bilinear_resize: target size must be at least 1x1, got " +
                     std::to_string(out_h) + "x" + std::to_string(out_w));
  }
  const int planes = input.dim(0) * input.dim(1);
  const int in_h = input.dim(2), in_w = input.dim(3);
  const AxisTable ty = make_axis_table(in_h, out_h);
  const AxisTable tx = make_axis_table(in_w, out_w);
  const std::size_t in_plane = static_cast<std::size_t>(in_h) * in_w;
  const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
  std::vector<double> out(planes * out_plane);
  auto v = input.values();
  for (int p = 0; p < planes; ++p) {
    const double* src = v.data() + p * in_plane;
    double* dst = out.data() + p * out_plane;
    for (int y = 0; y < out_h; ++y) {
      const double fy = ty.frac[y];
      const double* r0 = src + static_cast<std::size_t>(ty.lo[y]) * in_w;
      const double* r1 = src + static_cast<std::size_t>(ty.hi[y]) * in_w;
      for (int x = 0; x < out_w; ++x) {
        const double fx = tx.frac[x];
        const double top = (1.0 - fx) * r0[tx.lo[x]] + fx * r0[tx.hi[x]];
        const double bot = (1.0 - fx) * r1[tx.lo[x]] + fx * r1[tx.hi[x]];
        dst[static_cast<std::size_t>(y) * out_w + x] = (1.0 - fy) * top + fy * bot;
      }
    }
  }
  Shape shape{input.dim(0), input.dim(1), out_h, out_w};
  return Tensor::make_result(
      std::move(shape), std::move(out), {input},
      [ty, tx, planes, in_w, out_h, out_w, in_plane, out_plane](detail::Node& self) {
        auto& dx = self.parents[0]->grad_buffer();
        for (int p = 0; p < planes; ++p) {
          const double* g = self.grad.data() + p * out_plane;
          double* d = dx.data() + p * in_plane;
          for (int y = 0; y < out_h; ++y) {
            const double fy = ty.frac[y];
            double* r0 = d + static_cast<std::size_t>(ty.lo[y]) * in_w;
            double* r1 = d + static_cast<std::size_t>(ty.hi[y]) * in_w;
            for (int x = 0; x < out_w; ++x) {
              const double fx = tx.frac[x];
              const double gv = g[static_cast<std::size_t>(y) * out_w + x];
              r0[tx.lo[x]] += (1.0 - fy) * (1.0 - fx) * gv;
              r0[tx.hi[x]] += (1.0 - fy) * fx * gv;
              r1[tx.lo[x]] += fy * (1.0 - fx) * gv;
              r1[tx.hi[x]] += fy * fx * gv;
            }
          }
        }
      });
}

Tensor upsample2x_bilinear(const Tensor& input) {
  require_rank(input, 4, "upsample2x_bilinear");
  return bilinear_resize(input, input.dim(2) * 2, input.dim(3) * 2);
}

Tensor upsample2x_nearest(const Tensor& input) {
  require_rank(input, 4, "upsample2x_nearest");
  const int planes = input.dim(0) * input.dim(1);
  const int h = input.dim(2), w = input.dim(3);
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  std::vector<double> out(planes * in_plane * 4);
  auto v = input.values();
  for (int p = 0; p < planes; ++p) {
    for (int y = 0; y < 2 * h; ++y) {
      for (int x = 0; x < 2 * w; ++x) {
        out[p * in_plane * 4 + static_cast<std::size_t>(y) * 2 * w + x] =
            v[p * in_plane + static_cast<std::size_t>(y / 2) * w + x / 2];
      }
    }
  }
  return Tensor::make_result({input.dim(0), input.dim(1), 2 * h, 2 * w}, std::move(out), {input},
                             [planes, h, w, in_plane](detail::Node& self) {
                               auto& dx = self.parents[0]->grad_buffer();
                               for (int p = 0; p < planes; ++p) {
                                 for (int y = 0; y < 2 * h; ++y) {
                                   for (int x = 0; x < 2 * w; ++x) {
                                     dx[p * in_plane + static_cast<std::size_t>(y / 2) * w + x / 2] +=
                                         self.grad[p * in_plane * 4 +
                                                   static_cast<std::size_t>(y) * 2 * w + x];
                                   }
                                 }
                               }
                             });
}

Tensor relu(const Tensor& x) {
  return unary(x, [](double v) { return v > 0.0 ? v : 0.0; }, [](detail::Node& self) {
    auto& in = *self.parents[0];
    auto& dx = in.grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (in.value[i] > 0.0) dx[i] += self.grad[i];
    }
  });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](detail::Node& self) {
        auto& dx = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < dx.size(); ++i) {
          const double s = self.value[i];
          dx[i] += self.grad[i] * s * (1.0 - s);
        }
      });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& d = p->grad_buffer();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const double sign[2] = {1.0, -1.0};
    for (int k = 0; k < 2; ++k) {
      auto& p = self.parents[k];
      if (!p->requires_grad) continue;
      auto& d = p->grad_buffer();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += sign[k] * self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    std::vector<double> out(a.numel());
    auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
      auto& pa = *self.parents[0];
      auto& pb = *self.parents[1];
      if (pa.requires_grad) {
        auto& d = pa.grad_buffer();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * pb.value[i];
      }
      if (pb.requires_grad) {
        auto& d = pb.grad_buffer();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * pa.value[i];
      }
    });
  }
  require_rank(a, 4, "mul");
  require_rank(b, 4, "mul");
  if (b.dim(1) != 1 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ShapeError("mul: cannot broadcast " + to_string(b.shape()) + " over " +
                     to_string(a.shape()));
  }
  const int n = a.dim(0), c = a.dim(1);
  const std::size_t plane = static_cast<std::size_t>(a.dim(2)) * a.dim(3);
  std::vector<double> out(a.numel());
  auto av = a.values(), bv = b.values();
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * plane;
      for (std::size_t p = 0; p < plane; ++p) out[off + p] = av[off + p] * bv[i * plane + p];
    }
  }
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [n, c, plane](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        const std::size_t off = (static_cast<std::size_t>(i) * c + ch) * plane;
        if (pa.requires_grad) {
          auto& d = pa.grad_buffer();
          for (std::size_t p = 0; p < plane; ++p) d[off + p] += self.grad[off + p] * pb.value[i * plane + p];
        }
        if (pb.requires_grad) {
          auto& d = pb.grad_buffer();
          for (std::size_t p = 0; p < plane; ++p) d[i * plane + p] += self.grad[off + p] * pa.value[off + p];
        }
      }
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double v) { return v * factor; }, [factor](detail::Node& self) {
    auto& d = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * self.grad[i];
  });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 4, "concat_channels");
  require_rank(b, 4, "concat_channels");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ShapeError("concat_channels: incompatible shapes " + to_string(a.shape()) + " and " +
                     to_string(b.shape()));
  }
  const int n = a.dim(0);
  const std::size_t plane = static_cast<std::size_t>(a.dim(2)) * a.dim(3);
  const std::size_t sa = a.dim(1) * plane, sb = b.dim(1) * plane;
  std::vector<double> out(n * (sa + sb));
  auto av = a.values(), bv = b.values();
  for (int i = 0; i < n; ++i) {
    std::copy_n(av.data() + i * sa, sa, out.data() + i * (sa + sb));
    std::copy_n(bv.data() + i * sb, sb, out.data() + i * (sa + sb) + sa);
  }
  return Tensor::make_result({n, a.dim(1) + b.dim(1), a.dim(2), a.dim(3)}, std::move(out), {a, b},
                             [n, sa, sb](detail::Node& self) {
                               const std::size_t sizes[2] = {sa, sb};
                               const std::size_t offsets[2] = {0, sa};
                               for (int k = 0; k < 2; ++k) {
                                 auto& p = *self.parents[k];
                                 if (!p.requires_grad) continue;
                                 auto& d = p.grad_buffer();
                                 for (int i = 0; i < n; ++i) {
                                   const double* g = self.grad.data() + i * (sa + sb) + offsets[k];
                                   for (std::size_t j = 0; j < sizes[k]; ++j) d[i * sizes[k] + j] += g[j];
                                 }
                               }
                             });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const std::uint8_t> labels,
                             int ignore_index) {
  require_rank(logits, 4, "softmax_cross_entropy");
  const int n = logits.dim(0), k = logits.dim(1);
  const std::size_t plane = static_cast<std::size_t>(logits.dim(2)) * logits.dim(3);
  if (labels.size() != n * plane) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for logits " + to_string(logits.shape()));
  }
  auto v = logits.values();
  // Softmax probabilities are kept for the backward pass.
  std::vector<double> prob(v.size());
  double total = 0.0;
  std::size_t counted = 0;
  for (int i = 0; i < n; ++i) {
    const double* z = v.data() + i * k * plane;
    double* pr = prob.data() + i * k * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      double m = z[p];
      for (int c = 1; c < k; ++c) m = std::max(m, z[c * plane + p]);
      double s = 0.0;
      for (int c = 0; c < k; ++c) {
        pr[c * plane + p] = std::exp(z[c * plane + p] - m);
        s += pr[c * plane + p];
      }
      for (int c = 0; c < k; ++c) pr[c * plane + p] /= s;
      const int label = labels[i * plane + p];
      if (label == ignore_index) continue;
      if (label < 0 || label >= k) {
        throw ShapeError("softmax_cross_entropy: label " + std::to_string(label) +
                         " outside [0," + std::to_string(k) + ")");
      }
      total += -(z[label * plane + p] - m - std::log(s));
      ++counted;
    }
  }
  const double loss = counted ? total / static_cast<double>(counted) : 0.0;
  std::vector<std::uint8_t> label_copy(labels.begin(), labels.end());
  return Tensor::make_result(
      {}, {loss}, {logits},
      [prob = std::move(prob), label_copy = std::move(label_copy), n, k, plane, counted,
       ignore_index](detail::Node& self) {
        if (counted == 0) return;
        auto& d = self.parents[0]->grad_buffer();
        const double g = self.grad[0] / static_cast<double>(counted);
        for (int i = 0; i < n; ++i) {
          for (std::size_t p = 0; p < plane; ++p) {
            const int label = label_copy[i * plane + p];
            if (label == ignore_index) continue;
            for (int c = 0; c < k; ++c) {
              const std::size_t idx = (static_cast<std::size_t>(i) * k + c) * plane + p;
              d[idx] += g * (prob[idx] - (c == label ? 1.0 : 0.0));
            }
          }
        }
      });
}

Tensor l2_consistency(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "l2_consistency");
  auto av = a.values(), bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  const double count = static_cast<double>(av.size());
  std::vector<double> target(bv.begin(), bv.end());
  return Tensor::make_result({}, {s / count}, {a},
                             [target = std::move(target), count](detail::Node& self) {
                               auto& pa = *self.parents[0];
                               auto& d = pa.grad_buffer();
                               const double g = 2.0 * self.grad[0] / count;
                               for (std::size_t i = 0; i < d.size(); ++i) {
                                 d[i] += g * (pa.value[i] - target[i]);
                               }
                             });
}

Tensor sum_squares(std::span<const Tensor> tensors) {
  double s = 0.0;
  std::vector<Tensor> inputs(tensors.begin(), tensors.end());
  for (const auto& t : inputs) {
    for (double v : t.values()) s += v * v;
  }
  return Tensor::make_result({}, {s}, std::move(inputs), [](detail::Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& d = p->grad_buffer();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += 2.0 * self.grad[0] * p->value[i];
    }
  });
}

}  // namespace twnet
