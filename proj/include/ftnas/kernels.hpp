#pragma once

#include <cstdint>
#include <vector>

#include "ftnas/tensor.hpp"

namespace ftnas {

struct ConvGeom {
  int64_t stride = 1;
  int64_t pad = 0;
  int64_t dilation = 1;
  int64_t groups = 1;
};

int64_t conv_out_extent(int64_t in, int64_t k, int64_t pad, int64_t stride,
                        int64_t dilation);

struct BnStats {
  Tensor mean;    // [C]
  Tensor invstd;  // [C]
};

struct BnGrads {
  Tensor gx;
  Tensor ggamma;
  Tensor gbeta;
};

// Data-parallel kernels. Every output element is written by exactly one
// loop iteration and the per-element accumulation order is fixed, so results
// are bit-identical for any thread count. kernels::ref holds the serial
// reference implementations used by the tests and the benchmark.
namespace kernels {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& bias,
                      const ConvGeom& g);
Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w,
                             const std::vector<int64_t>& x_shape,
                             const ConvGeom& g);
Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x,
                              const std::vector<int64_t>& w_shape,
                              const ConvGeom& g);
Tensor conv2d_backward_bias(const Tensor& gy);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& gy, const Tensor& x);

Tensor maxpool3x3_forward(const Tensor& x, int64_t stride);
Tensor maxpool3x3_backward(const Tensor& gy, const Tensor& x, int64_t stride);
Tensor avgpool3x3_forward(const Tensor& x, int64_t stride);
Tensor avgpool3x3_backward(const Tensor& gy,
                           const std::vector<int64_t>& x_shape, int64_t stride);

Tensor global_avgpool_forward(const Tensor& x);                 // [N,C,H,W] -> [N,C]
Tensor global_avgpool_backward(const Tensor& gy,
                               const std::vector<int64_t>& x_shape);

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor linear_backward_input(const Tensor& gy, const Tensor& w);
Tensor linear_backward_weight(const Tensor& gy, const Tensor& x);
Tensor linear_backward_bias(const Tensor& gy);

// Training-mode batch norm over (N, H, W) per channel.
BnStats batchnorm_stats(const Tensor& x, double eps);
Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma,
                         const Tensor& beta, const BnStats& s);
BnGrads batchnorm_backward(const Tensor& gy, const Tensor& x,
                           const Tensor& gamma, const BnStats& s);
Tensor batchnorm_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       const Tensor& running_mean, const Tensor& running_var,
                       double eps);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

namespace ref {

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& bias,
                      const ConvGeom& g);
Tensor conv2d_backward_input(const Tensor& gy, const Tensor& w,
                             const std::vector<int64_t>& x_shape,
                             const ConvGeom& g);
Tensor conv2d_backward_weight(const Tensor& gy, const Tensor& x,
                              const std::vector<int64_t>& w_shape,
                              const ConvGeom& g);
Tensor maxpool3x3_forward(const Tensor& x, int64_t stride);
Tensor avgpool3x3_forward(const Tensor& x, int64_t stride);
BnStats batchnorm_stats(const Tensor& x, double eps);
Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma,
                         const Tensor& beta, const BnStats& s);
Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b);

}  // namespace ref
}  // namespace kernels
}  // namespace ftnas
