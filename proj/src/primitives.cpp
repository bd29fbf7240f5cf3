#include "ftnas/primitives.hpp"

#include "ftnas/check.hpp"

namespace ftnas {

const char* to_string(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::None: return "none";
    case PrimitiveKind::SkipConnect: return "skip_connect";
    case PrimitiveKind::AvgPool3x3: return "avg_pool_3x3";
    case PrimitiveKind::MaxPool3x3: return "max_pool_3x3";
    case PrimitiveKind::Conv1x1: return "conv_1x1";
    case PrimitiveKind::ReluConvBn3x3: return "relu_conv_bn_3x3";
    case PrimitiveKind::ReluConvBn5x5: return "relu_conv_bn_5x5";
    case PrimitiveKind::SepConv3x3: return "sep_conv_3x3";
    case PrimitiveKind::SepConv5x5: return "sep_conv_5x5";
    case PrimitiveKind::DilConv3x3: return "dil_conv_3x3";
    case PrimitiveKind::DilConv5x5: return "dil_conv_5x5";
  }
  return "?";
}

PrimitiveKind primitive_from_string(const std::string& s) {
  for (PrimitiveKind k : all_primitives())
    if (s == to_string(k)) return k;
  FTNAS_CHECK(false, "unknown primitive '" << s << "'");
}

const std::vector<PrimitiveKind>& all_primitives() {
  static const std::vector<PrimitiveKind> kAll = {
      PrimitiveKind::None,          PrimitiveKind::SkipConnect,
      PrimitiveKind::AvgPool3x3,    PrimitiveKind::MaxPool3x3,
      PrimitiveKind::Conv1x1,       PrimitiveKind::ReluConvBn3x3,
      PrimitiveKind::ReluConvBn5x5, PrimitiveKind::SepConv3x3,
      PrimitiveKind::SepConv5x5,    PrimitiveKind::DilConv3x3,
      PrimitiveKind::DilConv5x5,
  };
  return kAll;
}

std::vector<ConvStage> conv_stages(PrimitiveKind k, int64_t stride) {
  switch (k) {
    case PrimitiveKind::None:
    case PrimitiveKind::AvgPool3x3:
    case PrimitiveKind::MaxPool3x3:
      return {};
    case PrimitiveKind::SkipConnect:
      if (stride == 1) return {};
      return {{"reduce", 1, 1, false, false, true, false, true}};
    case PrimitiveKind::Conv1x1:
      return {{"conv", 1, 1, false, false, false, true, true}};
    case PrimitiveKind::ReluConvBn3x3:
      return {{"conv", 3, 1, false, true, true, false, true}};
    case PrimitiveKind::ReluConvBn5x5:
      return {{"conv", 5, 1, false, true, true, false, true}};
    case PrimitiveKind::SepConv3x3:
      return {{"dw", 3, 1, true, true, false, false, true},
              {"pw1", 1, 1, false, false, true, false, false},
              {"pw2", 1, 1, false, true, true, false, false}};
    case PrimitiveKind::SepConv5x5:
      return {{"dw", 5, 1, true, true, false, false, true},
              {"pw1", 1, 1, false, false, true, false, false},
              {"pw2", 1, 1, false, true, true, false, false}};
    case PrimitiveKind::DilConv3x3:
      return {{"dw", 3, 2, true, true, false, false, true},
              {"pw", 1, 1, false, false, true, false, false}};
    case PrimitiveKind::DilConv5x5:
      return {{"dw", 5, 2, true, true, false, false, true},
              {"pw", 1, 1, false, false, true, false, false}};
  }
  return {};
}

int64_t conv_stage_params(const ConvStage& s, int64_t c_in, int64_t c_out) {
  int64_t p;
  if (s.depthwise) {
    p = c_in * s.kernel * s.kernel;  // one filter per channel
    c_out = c_in;
  } else {
    p = c_out * c_in * s.kernel * s.kernel;
  }
  if (s.bias) p += c_out;
  if (s.bn_after) p += 2 * c_out;
  return p;
}

int64_t conv_stage_flops(const ConvStage& s, int64_t c_in, int64_t c_out,
                         int64_t ho, int64_t wo) {
  const int64_t sites = ho * wo;
  int64_t f;
  if (s.depthwise) {
    f = sites * c_in * s.kernel * s.kernel;
    c_out = c_in;
  } else {
    f = sites * c_out * c_in * s.kernel * s.kernel;
  }
  if (s.bias) f += sites * c_out;
  if (s.bn_after) f += 2 * sites * c_out;
  if (s.relu_before) f += sites * c_in;
  return f;
}

int64_t primitive_param_count(PrimitiveKind k, int64_t c_in, int64_t c_out,
                              int64_t stride) {
  int64_t total = 0;
  int64_t c = c_in;
  for (const ConvStage& s : conv_stages(k, stride)) {
    total += conv_stage_params(s, c, c_out);
    if (!s.depthwise) c = c_out;
  }
  return total;
}

int64_t primitive_flops(PrimitiveKind k, int64_t c_in, int64_t c_out,
                        int64_t ho, int64_t wo, int64_t stride) {
  switch (k) {
    case PrimitiveKind::None:
      return 0;
    case PrimitiveKind::AvgPool3x3:
    case PrimitiveKind::MaxPool3x3:
      return 9 * c_in * ho * wo;
    default:
      break;
  }
  int64_t total = 0;
  int64_t c = c_in;
  for (const ConvStage& s : conv_stages(k, stride)) {
    total += conv_stage_flops(s, c, c_out, ho, wo);
    if (!s.depthwise) c = c_out;
  }
  return total;
}

}  // namespace ftnas
