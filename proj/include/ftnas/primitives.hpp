#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ftnas {

// The 11 candidate operations on a cell connection.
enum class PrimitiveKind : int {
  None = 0,
  SkipConnect,
  AvgPool3x3,
  MaxPool3x3,
  Conv1x1,
  ReluConvBn3x3,
  ReluConvBn5x5,
  SepConv3x3,
  SepConv5x5,
  DilConv3x3,
  DilConv5x5,
};

inline constexpr int kNumPrimitives = 11;

const char* to_string(PrimitiveKind k);
PrimitiveKind primitive_from_string(const std::string& s);
const std::vector<PrimitiveKind>& all_primitives();

// One convolution stage inside a primitive. Primitives are sequences of
// stages plus optional pooling/identity behavior; the stage list drives the
// forward pass, parameter/flop accounting, and per-conv fault rates.
struct ConvStage {
  std::string name;
  int64_t kernel = 1;
  int64_t dilation = 1;
  bool depthwise = false;
  bool relu_before = false;
  bool bn_after = false;
  bool bias = false;
  bool strided = false;  // carries the primitive's stride
};

// Stage list for conv-bearing primitives; empty for none/skip/pools.
// stride-2 skip connections lower to a single 1x1 conv stage.
std::vector<ConvStage> conv_stages(PrimitiveKind k, int64_t stride);

// Learnable parameter count (conv weights + biases + BN gamma/beta).
int64_t primitive_param_count(PrimitiveKind k, int64_t c_in, int64_t c_out,
                              int64_t stride);

// Operation count at output spatial size ho x wo: conv MACs plus per-element
// work for BN (2), ReLU (1) and pooling windows (9).
int64_t primitive_flops(PrimitiveKind k, int64_t c_in, int64_t c_out,
                        int64_t ho, int64_t wo, int64_t stride);

int64_t conv_stage_params(const ConvStage& s, int64_t c_in, int64_t c_out);
int64_t conv_stage_flops(const ConvStage& s, int64_t c_in, int64_t c_out,
                         int64_t ho, int64_t wo);

}  // namespace ftnas
