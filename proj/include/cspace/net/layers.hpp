#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cspace/net/tensor.hpp"
#include "cspace/parallel.hpp"
#include "cspace/rng.hpp"

namespace cspace::net {

template <typename S>
using MatR = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapMat = Eigen::Map<MatR<S>>;
template <typename S>
using MapConstMat = Eigen::Map<const MatR<S>>;
template <typename S>
using MapVec = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>;
template <typename S>
using MapConstVec = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>;

namespace detail {

// 3x3 / pad 1 / stride 1 patch matrix: row (c*9 + ky*3 + kx), column (y*w + x).
template <typename S>
void im2col3x3(const S* x, int ch, int h, int w, S* col) {
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  for (int c = 0; c < ch; ++c) {
    const S* plane = x + static_cast<std::int64_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        S* dst = col + (static_cast<std::int64_t>(c) * 9 + ky * 3 + kx) * hw;
        const int dy = ky - 1;
        const int dx = kx - 1;
        for (int y = 0; y < h; ++y) {
          S* row = dst + static_cast<std::int64_t>(y) * w;
          const int sy = y + dy;
          if (sy < 0 || sy >= h) {
            std::fill(row, row + w, S(0));
            continue;
          }
          const S* src = plane + static_cast<std::int64_t>(sy) * w;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          if (x0 > 0) std::fill(row, row + x0, S(0));
          std::copy(src + x0 + dx, src + x1 + dx, row + x0);
          if (x1 < w) std::fill(row + x1, row + w, S(0));
        }
      }
    }
  }
}

template <typename S>
void col2im3x3_add(const S* col, int ch, int h, int w, S* x) {
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  for (int c = 0; c < ch; ++c) {
    S* plane = x + static_cast<std::int64_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const S* src = col + (static_cast<std::int64_t>(c) * 9 + ky * 3 + kx) * hw;
        const int dy = ky - 1;
        const int dx = kx - 1;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          S* dst = plane + static_cast<std::int64_t>(sy) * w;
          const S* row = src + static_cast<std::int64_t>(y) * w;
          const int x0 = std::max(0, -dx);
          const int x1 = std::min(w, w - dx);
          for (int xx = x0; xx < x1; ++xx) dst[xx + dx] += row[xx];
        }
      }
    }
  }
}

}  // namespace detail

// 3x3 convolution, stride 1, pad 1 (spatial dims preserved). Convs paired
// with batch norm drop the bias: the mean subtraction makes it a dead
// parameter.
template <typename S>
struct Conv2d {
  int cin = 0;
  int cout = 0;
  bool has_bias = false;
  Tensor<S> w;  // (cout, cin, 3, 3)
  Tensor<S> b;  // (cout, 1, 1, 1) when has_bias

  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, bool bias, Rng& rng)
      : cin(in_channels), cout(out_channels), has_bias(bias),
        w(out_channels, in_channels, 3, 3) {
    if (has_bias) b = Tensor<S>(out_channels, 1, 1, 1);
    const double stddev = std::sqrt(2.0 / (9.0 * in_channels));  // He fan-in
    for (auto& v : w.data) v = static_cast<S>(stddev * rng.normal());
  }

  Tensor<S> forward(const Tensor<S>& x, int threads) const {
    const int batch = x.n();
    const int h = x.h();
    const int wd = x.w();
    const std::int64_t hw = static_cast<std::int64_t>(h) * wd;
    Tensor<S> y(batch, cout, h, wd);
    MapConstMat<S> wm(w.data.data(), cout, cin * 9);
    parallel_for(batch, threads, [&](std::int64_t i, int) {
      std::vector<S> col(static_cast<std::size_t>(cin) * 9 * hw);
      detail::im2col3x3(x.ptr(static_cast<int>(i)), cin, h, wd, col.data());
      MapConstMat<S> cm(col.data(), cin * 9, hw);
      MapMat<S> ym(y.ptr(static_cast<int>(i)), cout, hw);
      ym.noalias() = wm * cm;
      if (has_bias) {
        MapConstVec<S> bv(b.data.data(), cout);
        ym.colwise() += bv;
      }
    });
    return y;
  }

  // gx is overwritten; gw (and gb when biased) are accumulated. Per-image
  // weight-gradient partials are reduced in image order, so results do not
  // depend on the thread count.
  void backward(const Tensor<S>& x, const Tensor<S>& gy, Tensor<S>& gx, Tensor<S>& gw,
                Tensor<S>* gb, int threads) const {
    const int batch = x.n();
    const int h = x.h();
    const int wd = x.w();
    const std::int64_t hw = static_cast<std::int64_t>(h) * wd;
    gx = Tensor<S>(batch, cin, h, wd);
    std::vector<Tensor<S>> gw_img(static_cast<std::size_t>(batch));
    std::vector<Tensor<S>> gb_img(static_cast<std::size_t>(batch));
    MapConstMat<S> wm(w.data.data(), cout, cin * 9);
    parallel_for(batch, threads, [&](std::int64_t i, int) {
      const auto bi = static_cast<std::size_t>(i);
      gw_img[bi] = Tensor<S>(cout, cin, 3, 3);
      std::vector<S> col(static_cast<std::size_t>(cin) * 9 * hw);
      detail::im2col3x3(x.ptr(static_cast<int>(i)), cin, h, wd, col.data());
      MapConstMat<S> cm(col.data(), cin * 9, hw);
      MapConstMat<S> gym(gy.ptr(static_cast<int>(i)), cout, hw);
      MapMat<S> gwm(gw_img[bi].data.data(), cout, cin * 9);
      gwm.noalias() = gym * cm.transpose();
      if (has_bias) {
        gb_img[bi] = Tensor<S>(cout, 1, 1, 1);
        // sequential sum: Eigen's vectorized redux reassociates depending on
        // buffer alignment, which would break bit-reproducibility
        for (int co = 0; co < cout; ++co) {
          S acc = S(0);
          const S* row = gy.ptr(static_cast<int>(i), co);
          for (std::int64_t k = 0; k < hw; ++k) acc += row[k];
          gb_img[bi].data[static_cast<std::size_t>(co)] = acc;
        }
      }
      // reuse col as the gradient patch matrix
      MapMat<S> gcm(col.data(), cin * 9, hw);
      gcm.noalias() = wm.transpose() * gym;
      detail::col2im3x3_add(col.data(), cin, h, wd, gx.ptr(static_cast<int>(i)));
    });
    for (int i = 0; i < batch; ++i) {
      const auto bi = static_cast<std::size_t>(i);
      for (std::size_t k = 0; k < gw.data.size(); ++k) gw.data[k] += gw_img[bi].data[k];
      if (has_bias && gb) {
        for (std::size_t k = 0; k < gb->data.size(); ++k) gb->data[k] += gb_img[bi].data[k];
      }
    }
  }
};

// Per-channel batch normalization over (n, h, w). Training uses batch
// statistics (biased variance); inference uses the running averages.
template <typename S>
struct BatchNorm2d {
  int ch = 0;
  Tensor<S> gamma, beta, running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNorm2d() = default;
  explicit BatchNorm2d(int channels)
      : ch(channels), gamma(channels, 1, 1, 1), beta(channels, 1, 1, 1),
        running_mean(channels, 1, 1, 1), running_var(channels, 1, 1, 1) {
    for (auto& v : gamma.data) v = S(1);
    for (auto& v : running_var.data) v = S(1);
  }

  Tensor<S> forward_train(const Tensor<S>& x, Tensor<S>& xhat, std::vector<S>& mean,
                          std::vector<S>& var) {
    const int batch = x.n();
    const std::int64_t plane = x.plane();
    const double m = static_cast<double>(batch) * plane;
    mean.assign(static_cast<std::size_t>(ch), S(0));
    var.assign(static_cast<std::size_t>(ch), S(0));
    for (int c = 0; c < ch; ++c) {
      double sum = 0.0, sumsq = 0.0;
      for (int i = 0; i < batch; ++i) {
        const S* p = x.ptr(i, c);
        double s = 0.0, s2 = 0.0;
        for (std::int64_t k = 0; k < plane; ++k) {
          s += p[k];
          s2 += static_cast<double>(p[k]) * p[k];
        }
        sum += s;
        sumsq += s2;
      }
      const double mu = sum / m;
      const double v = std::max(0.0, sumsq / m - mu * mu);
      mean[static_cast<std::size_t>(c)] = static_cast<S>(mu);
      var[static_cast<std::size_t>(c)] = static_cast<S>(v);
      running_mean.data[static_cast<std::size_t>(c)] =
          static_cast<S>((1.0 - momentum) * running_mean.data[static_cast<std::size_t>(c)] + momentum * mu);
      running_var.data[static_cast<std::size_t>(c)] =
          static_cast<S>((1.0 - momentum) * running_var.data[static_cast<std::size_t>(c)] + momentum * v);
    }
    xhat = zeros_like(x);
    Tensor<S> y = zeros_like(x);
    for (int c = 0; c < ch; ++c) {
      const S inv_std = static_cast<S>(1.0 / std::sqrt(static_cast<double>(var[static_cast<std::size_t>(c)]) + eps));
      const S mu = mean[static_cast<std::size_t>(c)];
      const S g = gamma.data[static_cast<std::size_t>(c)];
      const S be = beta.data[static_cast<std::size_t>(c)];
      for (int i = 0; i < batch; ++i) {
        const S* p = x.ptr(i, c);
        S* xh = xhat.ptr(i, c);
        S* yp = y.ptr(i, c);
        for (std::int64_t k = 0; k < plane; ++k) {
          xh[k] = (p[k] - mu) * inv_std;
          yp[k] = g * xh[k] + be;
        }
      }
    }
    return y;
  }

  Tensor<S> forward_eval(const Tensor<S>& x) const {
    Tensor<S> y = zeros_like(x);
    const int batch = x.n();
    const std::int64_t plane = x.plane();
    for (int c = 0; c < ch; ++c) {
      const S inv_std = static_cast<S>(
          1.0 / std::sqrt(static_cast<double>(running_var.data[static_cast<std::size_t>(c)]) + eps));
      const S mu = running_mean.data[static_cast<std::size_t>(c)];
      const S g = gamma.data[static_cast<std::size_t>(c)];
      const S be = beta.data[static_cast<std::size_t>(c)];
      for (int i = 0; i < batch; ++i) {
        const S* p = x.ptr(i, c);
        S* yp = y.ptr(i, c);
        for (std::int64_t k = 0; k < plane; ++k) yp[k] = g * (p[k] - mu) * inv_std + be;
      }
    }
    return y;
  }

  void backward(const Tensor<S>& xhat, const std::vector<S>& var, const Tensor<S>& gy,
                Tensor<S>& gx, Tensor<S>& ggamma, Tensor<S>& gbeta) const {
    const int batch = gy.n();
    const std::int64_t plane = gy.plane();
    const double m = static_cast<double>(batch) * plane;
    gx = zeros_like(gy);
    for (int c = 0; c < ch; ++c) {
      double sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (int i = 0; i < batch; ++i) {
        const S* g = gy.ptr(i, c);
        const S* xh = xhat.ptr(i, c);
        for (std::int64_t k = 0; k < plane; ++k) {
          sum_gy += g[k];
          sum_gy_xhat += static_cast<double>(g[k]) * xh[k];
        }
      }
      ggamma.data[static_cast<std::size_t>(c)] += static_cast<S>(sum_gy_xhat);
      gbeta.data[static_cast<std::size_t>(c)] += static_cast<S>(sum_gy);
      const double inv_std = 1.0 / std::sqrt(static_cast<double>(var[static_cast<std::size_t>(c)]) + eps);
      const double scale = static_cast<double>(gamma.data[static_cast<std::size_t>(c)]) * inv_std;
      const double mean_gy = sum_gy / m;
      const double mean_gy_xhat = sum_gy_xhat / m;
      for (int i = 0; i < batch; ++i) {
        const S* g = gy.ptr(i, c);
        const S* xh = xhat.ptr(i, c);
        S* out = gx.ptr(i, c);
        for (std::int64_t k = 0; k < plane; ++k) {
          out[k] = static_cast<S>(scale * (g[k] - mean_gy - xh[k] * mean_gy_xhat));
        }
      }
    }
  }
};

template <typename S>
void relu_inplace(Tensor<S>& t) {
  for (auto& v : t.data) {
    if (v < S(0)) v = S(0);
  }
}

// gy is masked in place using the forward output.
template <typename S>
void relu_backward_inplace(const Tensor<S>& y, Tensor<S>& gy) {
  for (std::size_t k = 0; k < gy.data.size(); ++k) {
    if (y.data[k] <= S(0)) gy.data[k] = S(0);
  }
}

// 2x2 max pool, stride 2. Indices record the argmax as a flat offset into
// the input plane; ties resolve to the first element in row-major order.
template <typename S>
std::pair<Tensor<S>, Tensor<std::int32_t>> maxpool2x2(const Tensor<S>& x, int threads) {
  const int h = x.h();
  const int w = x.w();
  if (h % 2 != 0 || w % 2 != 0) throw std::invalid_argument("pool input dims must be even");
  const int oh = h / 2;
  const int ow = w / 2;
  Tensor<S> y(x.n(), x.c(), oh, ow);
  Tensor<std::int32_t> idx(x.n(), x.c(), oh, ow);
  parallel_for(static_cast<std::int64_t>(x.n()) * x.c(), threads, [&](std::int64_t nc, int) {
    const int i = static_cast<int>(nc / x.c());
    const int c = static_cast<int>(nc % x.c());
    const S* src = x.ptr(i, c);
    S* dst = y.ptr(i, c);
    std::int32_t* id = idx.ptr(i, c);
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        S best = src[(2 * oy) * w + 2 * ox];
        std::int32_t best_at = (2 * oy) * w + 2 * ox;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const std::int32_t at = (2 * oy + dy) * w + 2 * ox + dx;
            if (src[at] > best) {
              best = src[at];
              best_at = at;
            }
          }
        }
        dst[oy * ow + ox] = best;
        id[oy * ow + ox] = best_at;
      }
    }
  });
  return {std::move(y), std::move(idx)};
}

template <typename S>
Tensor<S> maxpool2x2_backward(const Tensor<S>& gy, const Tensor<std::int32_t>& idx, int in_h,
                              int in_w, int threads) {
  Tensor<S> gx(gy.n(), gy.c(), in_h, in_w);
  parallel_for(static_cast<std::int64_t>(gy.n()) * gy.c(), threads, [&](std::int64_t nc, int) {
    const int i = static_cast<int>(nc / gy.c());
    const int c = static_cast<int>(nc % gy.c());
    const S* g = gy.ptr(i, c);
    const std::int32_t* id = idx.ptr(i, c);
    S* out = gx.ptr(i, c);
    const std::int64_t n_out = gy.plane();
    for (std::int64_t k = 0; k < n_out; ++k) out[id[k]] = g[k];
  });
  return gx;
}

// Index-guided unpooling: values land at the recorded argmax positions,
// everything else stays zero.
template <typename S>
Tensor<S> maxunpool2x2(const Tensor<S>& x, const Tensor<std::int32_t>& idx, int threads) {
  if (!(x.shape == idx.shape)) throw std::invalid_argument("unpool indices shape mismatch");
  const int oh = x.h() * 2;
  const int ow = x.w() * 2;
  Tensor<S> y(x.n(), x.c(), oh, ow);
  parallel_for(static_cast<std::int64_t>(x.n()) * x.c(), threads, [&](std::int64_t nc, int) {
    const int i = static_cast<int>(nc / x.c());
    const int c = static_cast<int>(nc % x.c());
    const S* src = x.ptr(i, c);
    const std::int32_t* id = idx.ptr(i, c);
    S* dst = y.ptr(i, c);
    const std::int64_t n_in = x.plane();
    for (std::int64_t k = 0; k < n_in; ++k) dst[id[k]] = src[k];
  });
  return y;
}

template <typename S>
Tensor<S> maxunpool2x2_backward(const Tensor<S>& gy, const Tensor<std::int32_t>& idx,
                                int threads) {
  Tensor<S> gx(idx.n(), idx.c(), idx.h(), idx.w());
  parallel_for(static_cast<std::int64_t>(gy.n()) * gy.c(), threads, [&](std::int64_t nc, int) {
    const int i = static_cast<int>(nc / gy.c());
    const int c = static_cast<int>(nc % gy.c());
    const S* g = gy.ptr(i, c);
    const std::int32_t* id = idx.ptr(i, c);
    S* out = gx.ptr(i, c);
    const std::int64_t n_out = gx.plane();
    for (std::int64_t k = 0; k < n_out; ++k) out[k] = g[id[k]];
  });
  return gx;
}

}  // namespace cspace::net
