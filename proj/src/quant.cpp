#include "ftnas/quant.hpp"

#include <algorithm>
#include <cmath>

#include "ftnas/check.hpp"

namespace ftnas {

const char* to_string(QuantScheme s) {
  return s == QuantScheme::CmosComplement ? "cmos-complement" : "rram-symmetric";
}

QuantScheme quant_scheme_from_string(const std::string& s) {
  if (s == "cmos-complement") return QuantScheme::CmosComplement;
  if (s == "rram-symmetric") return QuantScheme::RramSymmetric;
  FTNAS_CHECK(false, "unknown quant scheme '" << s << "'");
}

double QuantSpec::step() const { return std::ldexp(1.0, -frac_len); }

double QuantSpec::range_lo() const {
  if (scheme == QuantScheme::RramSymmetric) return -weight_bound();
  return -std::ldexp(1.0, bit_width - frac_len);
}

double QuantSpec::range_hi() const {
  if (scheme == QuantScheme::RramSymmetric) return weight_bound();
  return std::ldexp(std::ldexp(1.0, bit_width) - 1.0, -frac_len);
}

double QuantSpec::weight_bound() const {
  return std::ldexp(std::ldexp(1.0, bit_width + 1) - 1.0, -frac_len);
}

double rram_feature_lo(int bit_width, int frac_len) {
  return -std::ldexp(1.0, bit_width - frac_len);
}

double rram_feature_hi(int bit_width, int frac_len) {
  return std::ldexp(std::ldexp(1.0, bit_width) - 1.0, -frac_len);
}

double round_half_even(double v) {
  double f = std::floor(v);
  double d = v - f;
  if (d > 0.5) return f + 1.0;
  if (d < 0.5) return f;
  return std::fmod(f, 2.0) == 0.0 ? f : f + 1.0;
}

double quantize_value(double v, const QuantSpec& spec) {
  double scale = std::ldexp(1.0, spec.frac_len);
  double q = round_half_even(v * scale) / scale;
  return std::clamp(q, spec.range_lo(), spec.range_hi());
}

Tensor quantize(const Tensor& x, const QuantSpec& spec) {
  FTNAS_CHECK(spec.valid(), "invalid quant spec: bit_width=" << spec.bit_width);
  Tensor out(x.shape());
  const double* in = x.data();
  double* o = out.mutable_data();
  const double scale = std::ldexp(1.0, spec.frac_len);
  const double inv = 1.0 / scale;
  const double lo = spec.range_lo();
  const double hi = spec.range_hi();
  const int64_t n = x.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    double q = round_half_even(in[i] * scale) * inv;
    o[i] = std::clamp(q, lo, hi);
  }
  return out;
}

int find_frac_len_for_magnitude(double max_abs, int bit_width,
                                QuantScheme scheme) {
  FTNAS_CHECK(bit_width >= 1, "bit_width must be positive");
  FTNAS_CHECK(std::isfinite(max_abs) && max_abs >= 0.0,
              "max_abs must be finite and non-negative, got " << max_abs);
  if (max_abs == 0.0) return bit_width;  // default for all-zero tensors

  auto hi = [&](int l) {
    QuantSpec s{bit_width, l, scheme};
    return s.range_hi();
  };
  int l = 0;
  while (l < 64 && max_abs <= hi(l + 1)) ++l;
  while (l > -64 && max_abs > hi(l)) --l;
  return l;
}

int find_frac_len(const Tensor& x, int bit_width, QuantScheme scheme) {
  FTNAS_CHECK(x.size() > 0, "find_frac_len on empty tensor");
  return find_frac_len_for_magnitude(x.max_abs(), bit_width, scheme);
}

bool on_grid(const Tensor& x, const QuantSpec& spec) {
  const double scale = std::ldexp(1.0, spec.frac_len);
  const double lo = spec.range_lo();
  const double hi = spec.range_hi();
  for (int64_t i = 0; i < x.size(); ++i) {
    double v = x[i];
    if (v < lo || v > hi) return false;
    double code = v * scale;
    if (code != std::floor(code)) return false;
  }
  return true;
}

}  // namespace ftnas
