#include <algorithm>
#include <cmath>
#include <limits>

#include "ftnas/kernels.hpp"

// Plain single-threaded loops, organized differently from the parallel
// kernels (scatter instead of gather for the backward passes). Used by the
// unit tests and the kernel benchmark as the reference implementation.

namespace ftnas::kernels::ref {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& bias,
                      const ConvGeom& g) {
  const int64_t N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Co = w.dim(0), Cig = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  const int64_t Ho = conv_out_extent(H, kh, g.pad, g.stride, g.dilation);
  const int64_t Wo = conv_out_extent(W, kw, g.pad, g.stride, g.dilation);
  const int64_t Cog = Co / g.groups;

  Tensor y({N, Co, Ho, Wo});
  double* yp = y.mutable_data();
  if (bias.defined()) {
    for (int64_t n = 0; n < N; ++n)
      for (int64_t co = 0; co < Co; ++co)
        for (int64_t i = 0; i < Ho * Wo; ++i)
          yp[((n * Co + co) * Ho * Wo) + i] = bias[co];
  }
  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t c = 0; c < Cig; ++c) {
        const int64_t ci = (co / Cog) * Cig + c;
        for (int64_t r = 0; r < kh; ++r)
          for (int64_t s = 0; s < kw; ++s) {
            const double wv = w[((co * Cig + c) * kh + r) * kw + s];
            for (int64_t oh = 0; oh < Ho; ++oh) {
              const int64_t ih = oh * g.stride - g.pad + r * g.dilation;
              if (ih < 0 || ih >= H) continue;
              for (int64_t ow = 0; ow < Wo; ++ow) {
                const int64_t iw = ow * g.stride - g.pad + s * g.dilation;
                if (iw < 0 || iw >= W) continue;
                yp[((n * Co + co) * Ho + oh) * Wo + ow] +=
                    wv * x[((n * Ci + ci) * H + ih) * W + iw];
              }
            }
          }
      }
  return y;
}

Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w,
                             const std::vector<int64_t>& x_shape,
                             const ConvGeom& g) {
  const int64_t N = x_shape[0], Ci = x_shape[1], H = x_shape[2], W = x_shape[3];
  const int64_t Co = w.dim(0), Cig = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  const int64_t Ho = gy.dim(2), Wo = gy.dim(3);
  const int64_t Cog = Co / g.groups;
  Tensor gx({N, Ci, H, W});
  double* op = gx.mutable_data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t oh = 0; oh < Ho; ++oh)
        for (int64_t ow = 0; ow < Wo; ++ow) {
          const double gv = gy[((n * Co + co) * Ho + oh) * Wo + ow];
          for (int64_t c = 0; c < Cig; ++c) {
            const int64_t ci = (co / Cog) * Cig + c;
            for (int64_t r = 0; r < kh; ++r) {
              const int64_t ih = oh * g.stride - g.pad + r * g.dilation;
              if (ih < 0 || ih >= H) continue;
              for (int64_t s = 0; s < kw; ++s) {
                const int64_t iw = ow * g.stride - g.pad + s * g.dilation;
                if (iw < 0 || iw >= W) continue;
                op[((n * Ci + ci) * H + ih) * W + iw] +=
                    gv * w[((co * Cig + c) * kh + r) * kw + s];
              }
            }
          }
        }
  return gx;
}

Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x,
                              const std::vector<int64_t>& w_shape,
                              const ConvGeom& g) {
  const int64_t N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Co = w_shape[0], Cig = w_shape[1], kh = w_shape[2],
                kw = w_shape[3];
  const int64_t Ho = gy.dim(2), Wo = gy.dim(3);
  const int64_t Cog = Co / g.groups;
  Tensor gw({Co, Cig, kh, kw});
  double* op = gw.mutable_data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t oh = 0; oh < Ho; ++oh)
        for (int64_t ow = 0; ow < Wo; ++ow) {
          const double gv = gy[((n * Co + co) * Ho + oh) * Wo + ow];
          for (int64_t c = 0; c < Cig; ++c) {
            const int64_t ci = (co / Cog) * Cig + c;
            for (int64_t r = 0; r < kh; ++r) {
              const int64_t ih = oh * g.stride - g.pad + r * g.dilation;
              if (ih < 0 || ih >= H) continue;
              for (int64_t s = 0; s < kw; ++s) {
                const int64_t iw = ow * g.stride - g.pad + s * g.dilation;
                if (iw < 0 || iw >= W) continue;
                op[((co * Cig + c) * kh + r) * kw + s] +=
                    gv * x[((n * Ci + ci) * H + ih) * W + iw];
              }
            }
          }
        }
  return gw;
}

Tensor maxpool3x3_forward(const Tensor& x, int64_t stride) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Ho = conv_out_extent(H, 3, 1, stride, 1);
  const int64_t Wo = conv_out_extent(W, 3, 1, stride, 1);
  Tensor y({N, C, Ho, Wo});
  double* yp = y.mutable_data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      for (int64_t oh = 0; oh < Ho; ++oh)
        for (int64_t ow = 0; ow < Wo; ++ow) {
          double best = -std::numeric_limits<double>::infinity();
          for (int64_t r = 0; r < 3; ++r)
            for (int64_t s = 0; s < 3; ++s) {
              const int64_t ih = oh * stride - 1 + r;
              const int64_t iw = ow * stride - 1 + s;
              if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
              best = std::max(best, x[((n * C + c) * H + ih) * W + iw]);
            }
          yp[((n * C + c) * Ho + oh) * Wo + ow] = best;
        }
  return y;
}

Tensor avgpool3x3_forward(const Tensor& x, int64_t stride) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Ho = conv_out_extent(H, 3, 1, stride, 1);
  const int64_t Wo = conv_out_extent(W, 3, 1, stride, 1);
  Tensor y({N, C, Ho, Wo});
  double* yp = y.mutable_data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      for (int64_t oh = 0; oh < Ho; ++oh)
        for (int64_t ow = 0; ow < Wo; ++ow) {
          double acc = 0.0;
          int64_t cnt = 0;
          for (int64_t r = 0; r < 3; ++r)
            for (int64_t s = 0; s < 3; ++s) {
              const int64_t ih = oh * stride - 1 + r;
              const int64_t iw = ow * stride - 1 + s;
              if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
              acc += x[((n * C + c) * H + ih) * W + iw];
              ++cnt;
            }
          yp[((n * C + c) * Ho + oh) * Wo + ow] = acc / static_cast<double>(cnt);
        }
  return y;
}

BnStats batchnorm_stats(const Tensor& x, double eps) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t M = N * H * W;
  BnStats s{Tensor({C}), Tensor({C})};
  double* mp = s.mean.mutable_data();
  double* ip = s.invstd.mutable_data();
  for (int64_t c = 0; c < C; ++c) {
    double sum = 0.0;
    for (int64_t n = 0; n < N; ++n)
      for (int64_t i = 0; i < H * W; ++i) sum += x[((n * C + c) * H * W) + i];
    const double mean = sum / static_cast<double>(M);
    double var = 0.0;
    for (int64_t n = 0; n < N; ++n)
      for (int64_t i = 0; i < H * W; ++i) {
        const double d = x[((n * C + c) * H * W) + i] - mean;
        var += d * d;
      }
    mp[c] = mean;
    ip[c] = 1.0 / std::sqrt(var / static_cast<double>(M) + eps);
  }
  return s;
}

Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma,
                         const Tensor& beta, const BnStats& s) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y(x.shape());
  double* yp = y.mutable_data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c)
      for (int64_t i = 0; i < H * W; ++i) {
        const int64_t off = ((n * C + c) * H * W) + i;
        yp[off] = gamma[c] * (x[off] - s.mean[c]) * s.invstd[c] + beta[c];
      }
  return y;
}

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  const int64_t N = x.dim(0), D = x.dim(1), K = w.dim(0);
  Tensor y({N, K});
  double* yp = y.mutable_data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t k = 0; k < K; ++k) {
      double acc = b.defined() ? b[k] : 0.0;
      for (int64_t d = 0; d < D; ++d) acc += x[n * D + d] * w[k * D + d];
      yp[n * K + k] = acc;
    }
  return y;
}

}  // namespace ftnas::kernels::ref
