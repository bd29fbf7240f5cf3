#include <algorithm>
#include <cmath>
#include <limits>

#include "ftnas/check.hpp"
#include "ftnas/kernels.hpp"

namespace ftnas {

int64_t conv_out_extent(int64_t in, int64_t k, int64_t pad, int64_t stride,
                        int64_t dilation) {
  int64_t eff = dilation * (k - 1) + 1;
  int64_t out = (in + 2 * pad - eff) / stride + 1;
  FTNAS_CHECK(out >= 1, "convolution output extent " << out << " for input "
                                                     << in << " kernel " << k);
  return out;
}

namespace kernels {

namespace {

void check_conv_args(const Tensor& x, const Tensor& w, const Tensor& bias,
                     const ConvGeom& g) {
  FTNAS_CHECK(x.ndim() == 4, "conv input must be NCHW, got " << shape_str(x.shape()));
  FTNAS_CHECK(w.ndim() == 4, "conv weight must be [Co,Ci/g,kh,kw]");
  FTNAS_CHECK(g.groups >= 1 && x.dim(1) % g.groups == 0 &&
                  w.dim(0) % g.groups == 0,
              "bad group count " << g.groups << " for Ci=" << x.dim(1)
                                 << " Co=" << w.dim(0));
  FTNAS_CHECK(w.dim(1) == x.dim(1) / g.groups,
              "weight fan-in " << w.dim(1) << " does not match Ci/groups "
                               << x.dim(1) / g.groups);
  if (bias.defined())
    FTNAS_CHECK(bias.ndim() == 1 && bias.dim(0) == w.dim(0),
                "bias shape mismatch");
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& bias,
                      const ConvGeom& g) {
  check_conv_args(x, w, bias, g);
  const int64_t N = x.dim(0), Ci = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Co = w.dim(0), Cig = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  const int64_t Ho = conv_out_extent(H, kh, g.pad, g.stride, g.dilation);
  const int64_t Wo = conv_out_extent(W, kw, g.pad, g.stride, g.dilation);
  const int64_t Cog = Co / g.groups;

  Tensor y({N, Co, Ho, Wo});
  const double* xp = x.data();
  const double* wp = w.data();
  const double* bp = bias.defined() ? bias.data() : nullptr;
  double* yp = y.mutable_data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t co = 0; co < Co; ++co) {
      const int64_t ci0 = (co / Cog) * Cig;
      const double* wco = wp + co * Cig * kh * kw;
      for (int64_t oh = 0; oh < Ho; ++oh) {
        for (int64_t ow = 0; ow < Wo; ++ow) {
          double acc = bp ? bp[co] : 0.0;
          for (int64_t c = 0; c < Cig; ++c) {
            const double* xc = xp + ((n * Ci + ci0 + c) * H) * W;
            const double* wc = wco + c * kh * kw;
            for (int64_t r = 0; r < kh; ++r) {
              const int64_t ih = oh * g.stride - g.pad + r * g.dilation;
              if (ih < 0 || ih >= H) continue;
              for (int64_t s = 0; s < kw; ++s) {
                const int64_t iw = ow * g.stride - g.pad + s * g.dilation;
                if (iw < 0 || iw >= W) continue;
                acc += xc[ih * W + iw] * wc[r * kw + s];
              }
            }
          }
          yp[((n * Co + co) * Ho + oh) * Wo + ow] = acc;
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
  const double* gp = gy.data();
  const double* wp = w.data();
  double* op = gx.mutable_data();

  // Gather form: each input position sums over the output positions that read
  // it, in a fixed order.
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t ci = 0; ci < Ci; ++ci) {
      const int64_t grp = ci / Cig;
      const int64_t c = ci % Cig;
      for (int64_t ih = 0; ih < H; ++ih) {
        for (int64_t iw = 0; iw < W; ++iw) {
          double acc = 0.0;
          for (int64_t co = grp * Cog; co < (grp + 1) * Cog; ++co) {
            const double* wc = wp + (co * Cig + c) * kh * kw;
            const double* gc = gp + ((n * Co + co) * Ho) * Wo;
            for (int64_t r = 0; r < kh; ++r) {
              const int64_t num = ih + g.pad - r * g.dilation;
              if (num < 0 || num % g.stride != 0) continue;
              const int64_t oh = num / g.stride;
              if (oh >= Ho) continue;
              for (int64_t s = 0; s < kw; ++s) {
                const int64_t numw = iw + g.pad - s * g.dilation;
                if (numw < 0 || numw % g.stride != 0) continue;
                const int64_t ow = numw / g.stride;
                if (ow >= Wo) continue;
                acc += gc[oh * Wo + ow] * wc[r * kw + s];
              }
            }
          }
          op[((n * Ci + ci) * H + ih) * W + iw] = acc;
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
  const double* gp = gy.data();
  const double* xp = x.data();
  double* op = gw.mutable_data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t co = 0; co < Co; ++co) {
    for (int64_t c = 0; c < Cig; ++c) {
      const int64_t ci = (co / Cog) * Cig + c;
      for (int64_t r = 0; r < kh; ++r) {
        for (int64_t s = 0; s < kw; ++s) {
          double acc = 0.0;
          for (int64_t n = 0; n < N; ++n) {
            const double* gc = gp + ((n * Co + co) * Ho) * Wo;
            const double* xc = xp + ((n * Ci + ci) * H) * W;
            for (int64_t oh = 0; oh < Ho; ++oh) {
              const int64_t ih = oh * g.stride - g.pad + r * g.dilation;
              if (ih < 0 || ih >= H) continue;
              for (int64_t ow = 0; ow < Wo; ++ow) {
                const int64_t iw = ow * g.stride - g.pad + s * g.dilation;
                if (iw < 0 || iw >= W) continue;
                acc += gc[oh * Wo + ow] * xc[ih * W + iw];
              }
            }
          }
          op[((co * Cig + c) * kh + r) * kw + s] = acc;
        }
      }
    }
  }
  return gw;
}

Tensor conv2d_backward_bias(const Tensor& gy) {
  const int64_t N = gy.dim(0), Co = gy.dim(1), Ho = gy.dim(2), Wo = gy.dim(3);
  Tensor gb({Co});
  const double* gp = gy.data();
  double* op = gb.mutable_data();
#pragma omp parallel for schedule(static)
  for (int64_t co = 0; co < Co; ++co) {
    double acc = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const double* gc = gp + ((n * Co + co) * Ho) * Wo;
      for (int64_t i = 0; i < Ho * Wo; ++i) acc += gc[i];
    }
    op[co] = acc;
  }
  return gb;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y(x.shape());
  const double* xp = x.data();
  double* yp = y.mutable_data();
  const int64_t n = x.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) yp[i] = xp[i] > 0.0 ? xp[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& gy, const Tensor& x) {
  Tensor gx(x.shape());
  const double* gp = gy.data();
  const double* xp = x.data();
  double* op = gx.mutable_data();
  const int64_t n = x.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) op[i] = xp[i] > 0.0 ? gp[i] : 0.0;
  return gx;
}

namespace {
constexpr int64_t kPoolK = 3;
constexpr int64_t kPoolPad = 1;
}  // namespace

Tensor maxpool3x3_forward(const Tensor& x, int64_t stride) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Ho = conv_out_extent(H, kPoolK, kPoolPad, stride, 1);
  const int64_t Wo = conv_out_extent(W, kPoolK, kPoolPad, stride, 1);
  Tensor y({N, C, Ho, Wo});
  const double* xp = x.data();
  double* yp = y.mutable_data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      const double* xc = xp + ((n * C + c) * H) * W;
      double* yc = yp + ((n * C + c) * Ho) * Wo;
      for (int64_t oh = 0; oh < Ho; ++oh) {
        for (int64_t ow = 0; ow < Wo; ++ow) {
          double best = -std::numeric_limits<double>::infinity();
          for (int64_t r = 0; r < kPoolK; ++r) {
            const int64_t ih = oh * stride - kPoolPad + r;
            if (ih < 0 || ih >= H) continue;
            for (int64_t s = 0; s < kPoolK; ++s) {
              const int64_t iw = ow * stride - kPoolPad + s;
              if (iw < 0 || iw >= W) continue;
              best = std::max(best, xc[ih * W + iw]);
            }
          }
          yc[oh * Wo + ow] = best;
        }
      }
    }
  }
  return y;
}

Tensor maxpool3x3_backward(const Tensor& gy, const Tensor& x, int64_t stride) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Ho = gy.dim(2), Wo = gy.dim(3);
  Tensor gx({N, C, H, W});
  const double* gp = gy.data();
  const double* xp = x.data();
  double* op = gx.mutable_data();
  // Routes each output's gradient to the first maximal input in scan order.
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      const double* xc = xp + ((n * C + c) * H) * W;
      const double* gc = gp + ((n * C + c) * Ho) * Wo;
      double* oc = op + ((n * C + c) * H) * W;
      for (int64_t oh = 0; oh < Ho; ++oh) {
        for (int64_t ow = 0; ow < Wo; ++ow) {
          double best = -std::numeric_limits<double>::infinity();
          int64_t arg = -1;
          for (int64_t r = 0; r < kPoolK; ++r) {
            const int64_t ih = oh * stride - kPoolPad + r;
            if (ih < 0 || ih >= H) continue;
            for (int64_t s = 0; s < kPoolK; ++s) {
              const int64_t iw = ow * stride - kPoolPad + s;
              if (iw < 0 || iw >= W) continue;
              if (xc[ih * W + iw] > best) {
                best = xc[ih * W + iw];
                arg = ih * W + iw;
              }
            }
          }
          if (arg >= 0) oc[arg] += gc[oh * Wo + ow];
        }
      }
    }
  }
  return gx;
}

Tensor avgpool3x3_forward(const Tensor& x, int64_t stride) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Ho = conv_out_extent(H, kPoolK, kPoolPad, stride, 1);
  const int64_t Wo = conv_out_extent(W, kPoolK, kPoolPad, stride, 1);
  Tensor y({N, C, Ho, Wo});
  const double* xp = x.data();
  double* yp = y.mutable_data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      const double* xc = xp + ((n * C + c) * H) * W;
      double* yc = yp + ((n * C + c) * Ho) * Wo;
      for (int64_t oh = 0; oh < Ho; ++oh) {
        for (int64_t ow = 0; ow < Wo; ++ow) {
          double acc = 0.0;
          int64_t cnt = 0;
          for (int64_t r = 0; r < kPoolK; ++r) {
            const int64_t ih = oh * stride - kPoolPad + r;
            if (ih < 0 || ih >= H) continue;
            for (int64_t s = 0; s < kPoolK; ++s) {
              const int64_t iw = ow * stride - kPoolPad + s;
              if (iw < 0 || iw >= W) continue;
              acc += xc[ih * W + iw];
              ++cnt;
            }
          }
          yc[oh * Wo + ow] = acc / static_cast<double>(cnt);
        }
      }
    }
  }
  return y;
}

Tensor avgpool3x3_backward(const Tensor& gy,
                           const std::vector<int64_t>& x_shape, int64_t stride) {
  const int64_t N = x_shape[0], C = x_shape[1], H = x_shape[2], W = x_shape[3];
  const int64_t Ho = gy.dim(2), Wo = gy.dim(3);
  Tensor gx({N, C, H, W});
  const double* gp = gy.data();
  double* op = gx.mutable_data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      const double* gc = gp + ((n * C + c) * Ho) * Wo;
      double* oc = op + ((n * C + c) * H) * W;
      for (int64_t oh = 0; oh < Ho; ++oh) {
        for (int64_t ow = 0; ow < Wo; ++ow) {
          int64_t cnt = 0;
          for (int64_t r = 0; r < kPoolK; ++r) {
            const int64_t ih = oh * stride - kPoolPad + r;
            if (ih < 0 || ih >= H) continue;
            for (int64_t s = 0; s < kPoolK; ++s) {
              const int64_t iw = ow * stride - kPoolPad + s;
              if (iw < 0 || iw >= W) continue;
              ++cnt;
            }
          }
          const double share = gc[oh * Wo + ow] / static_cast<double>(cnt);
          for (int64_t r = 0; r < kPoolK; ++r) {
            const int64_t ih = oh * stride - kPoolPad + r;
            if (ih < 0 || ih >= H) continue;
            for (int64_t s = 0; s < kPoolK; ++s) {
              const int64_t iw = ow * stride - kPoolPad + s;
              if (iw < 0 || iw >= W) continue;
              oc[ih * W + iw] += share;
            }
          }
        }
      }
    }
  }
  return gx;
}

Tensor global_avgpool_forward(const Tensor& x) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y({N, C});
  const double* xp = x.data();
  double* yp = y.mutable_data();
  const double inv = 1.0 / static_cast<double>(H * W);
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      const double* xc = xp + ((n * C + c) * H) * W;
      double acc = 0.0;
      for (int64_t i = 0; i < H * W; ++i) acc += xc[i];
      yp[n * C + c] = acc * inv;
    }
  }
  return y;
}

Tensor global_avgpool_backward(const Tensor& gy,
                               const std::vector<int64_t>& x_shape) {
  const int64_t N = x_shape[0], C = x_shape[1], H = x_shape[2], W = x_shape[3];
  Tensor gx({N, C, H, W});
  const double* gp = gy.data();
  double* op = gx.mutable_data();
  const double inv = 1.0 / static_cast<double>(H * W);
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      double* oc = op + ((n * C + c) * H) * W;
      const double v = gp[n * C + c] * inv;
      for (int64_t i = 0; i < H * W; ++i) oc[i] = v;
    }
  }
  return gx;
}

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  const int64_t N = x.dim(0), D = x.dim(1), K = w.dim(0);
  FTNAS_CHECK(w.dim(1) == D, "linear fan-in mismatch");
  Tensor y({N, K});
  const double* xp = x.data();
  const double* wp = w.data();
  const double* bp = b.defined() ? b.data() : nullptr;
  double* yp = y.mutable_data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t k = 0; k < K; ++k) {
      double acc = bp ? bp[k] : 0.0;
      const double* xr = xp + n * D;
      const double* wr = wp + k * D;
      for (int64_t d = 0; d < D; ++d) acc += xr[d] * wr[d];
      yp[n * K + k] = acc;
    }
  }
  return y;
}

Tensor linear_backward_input(const Tensor& gy, const Tensor& w) {
  const int64_t N = gy.dim(0), K = gy.dim(1), D = w.dim(1);
  Tensor gx({N, D});
  const double* gp = gy.data();
  const double* wp = w.data();
  double* op = gx.mutable_data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t d = 0; d < D; ++d) {
      double acc = 0.0;
      for (int64_t k = 0; k < K; ++k) acc += gp[n * K + k] * wp[k * D + d];
      op[n * D + d] = acc;
    }
  }
  return gx;
}

Tensor linear_backward_weight(const Tensor& gy, const Tensor& x) {
  const int64_t N = gy.dim(0), K = gy.dim(1), D = x.dim(1);
  Tensor gw({K, D});
  const double* gp = gy.data();
  const double* xp = x.data();
  double* op = gw.mutable_data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t k = 0; k < K; ++k) {
    for (int64_t d = 0; d < D; ++d) {
      double acc = 0.0;
      for (int64_t n = 0; n < N; ++n) acc += gp[n * K + k] * xp[n * D + d];
      op[k * D + d] = acc;
    }
  }
  return gw;
}

Tensor linear_backward_bias(const Tensor& gy) {
  const int64_t N = gy.dim(0), K = gy.dim(1);
  Tensor gb({K});
  const double* gp = gy.data();
  double* op = gb.mutable_data();
#pragma omp parallel for schedule(static)
  for (int64_t k = 0; k < K; ++k) {
    double acc = 0.0;
    for (int64_t n = 0; n < N; ++n) acc += gp[n * K + k];
    op[k] = acc;
  }
  return gb;
}

BnStats batchnorm_stats(const Tensor& x, double eps) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t M = N * H * W;
  BnStats s{Tensor({C}), Tensor({C})};
  const double* xp = x.data();
  double* mp = s.mean.mutable_data();
  double* ip = s.invstd.mutable_data();
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < C; ++c) {
    double sum = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const double* xc = xp + ((n * C + c) * H) * W;
      for (int64_t i = 0; i < H * W; ++i) sum += xc[i];
    }
    const double mean = sum / static_cast<double>(M);
    double var = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const double* xc = xp + ((n * C + c) * H) * W;
      for (int64_t i = 0; i < H * W; ++i) {
        const double d = xc[i] - mean;
        var += d * d;
      }
    }
    var /= static_cast<double>(M);
    mp[c] = mean;
    ip[c] = 1.0 / std::sqrt(var + eps);
  }
  return s;
}

Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma,
                         const Tensor& beta, const BnStats& s) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y(x.shape());
  const double* xp = x.data();
  const double* gp = gamma.data();
  const double* bp = beta.data();
  const double* mp = s.mean.data();
  const double* ip = s.invstd.data();
  double* yp = y.mutable_data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      const double* xc = xp + ((n * C + c) * H) * W;
      double* yc = yp + ((n * C + c) * H) * W;
      const double a = gp[c] * ip[c];
      const double b = bp[c] - a * mp[c];
      for (int64_t i = 0; i < H * W; ++i) yc[i] = a * xc[i] + b;
    }
  }
  return y;
}

BnGrads batchnorm_backward(const Tensor& gy, const Tensor& x,
                           const Tensor& gamma, const BnStats& s) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t M = N * H * W;
  BnGrads out{Tensor(x.shape()), Tensor({C}), Tensor({C})};
  const double* gp = gy.data();
  const double* xp = x.data();
  const double* ga = gamma.data();
  const double* mp = s.mean.data();
  const double* ip = s.invstd.data();
  double* gxp = out.gx.mutable_data();
  double* ggp = out.ggamma.mutable_data();
  double* gbp = out.gbeta.mutable_data();
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < C; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int64_t n = 0; n < N; ++n) {
      const double* gc = gp + ((n * C + c) * H) * W;
      const double* xc = xp + ((n * C + c) * H) * W;
      for (int64_t i = 0; i < H * W; ++i) {
        sum_g += gc[i];
        sum_gx += gc[i] * (xc[i] - mp[c]) * ip[c];
      }
    }
    gbp[c] = sum_g;
    ggp[c] = sum_gx;
    const double invm = 1.0 / static_cast<double>(M);
    for (int64_t n = 0; n < N; ++n) {
      const double* gc = gp + ((n * C + c) * H) * W;
      const double* xc = xp + ((n * C + c) * H) * W;
      double* oc = gxp + ((n * C + c) * H) * W;
      for (int64_t i = 0; i < H * W; ++i) {
        const double xhat = (xc[i] - mp[c]) * ip[c];
        oc[i] = ga[c] * ip[c] * (gc[i] - invm * sum_g - invm * xhat * sum_gx);
      }
    }
  }
  return out;
}

Tensor batchnorm_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       const Tensor& running_mean, const Tensor& running_var,
                       double eps) {
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y(x.shape());
  const double* xp = x.data();
  double* yp = y.mutable_data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int64_t n = 0; n < N; ++n) {
    for (int64_t c = 0; c < C; ++c) {
      const double a = gamma[c] / std::sqrt(running_var[c] + eps);
      const double b = beta[c] - a * running_mean[c];
      const double* xc = xp + ((n * C + c) * H) * W;
      double* yc = yp + ((n * C + c) * H) * W;
      for (int64_t i = 0; i < H * W; ++i) yc[i] = a * xc[i] + b;
    }
  }
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  FTNAS_CHECK(a.same_shape(b), "add shape mismatch " << shape_str(a.shape())
                                                     << " vs "
                                                     << shape_str(b.shape()));
  Tensor y(a.shape());
  const double* ap = a.data();
  const double* bp = b.data();
  double* yp = y.mutable_data();
  const int64_t n = a.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) yp[i] = ap[i] + bp[i];
  return y;
}

Tensor scale(const Tensor& a, double s) {
  Tensor y(a.shape());
  const double* ap = a.data();
  double* yp = y.mutable_data();
  const int64_t n = a.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) yp[i] = ap[i] * s;
  return y;
}

}  // namespace kernels
}  // namespace ftnas
