#pragma once

#include <cstdint>
#include <string>

#include "ftnas/tensor.hpp"

namespace ftnas {

// Two ways of mapping fixed-point codes to hardware:
//  - CmosComplement: complement representation shared by weights and features.
//  - RramSymmetric: separate crossbars for positive and negative weights,
//    giving a symmetric weight range.
enum class QuantScheme { CmosComplement, RramSymmetric };

const char* to_string(QuantScheme s);
QuantScheme quant_scheme_from_string(const std::string& s);

// Dynamic fixed-point format: bit width Q and fraction length l. Step size is
// 2^-l. Representable ranges:
//   CmosComplement: [-2^(Q-l), 2^-l (2^Q - 1)]
//   RramSymmetric (weights): [-Rw, Rw] with Rw = 2^-l (2^(Q+1) - 1)
// Features on RRAM platforms pass through CMOS converters, so their range is
// the CmosComplement interval for the same (Q, l).
struct QuantSpec {
  int bit_width = 8;  // Q
  int frac_len = 4;   // l
  QuantScheme scheme = QuantScheme::CmosComplement;

  double step() const;       // 2^-l
  double range_lo() const;
  double range_hi() const;
  double weight_bound() const;  // Rw; only meaningful for RramSymmetric

  bool valid() const { return bit_width >= 1; }
  bool operator==(const QuantSpec&) const = default;
};

// Feature range on an RRAM platform with Q-bit CMOS periphery.
double rram_feature_lo(int bit_width, int frac_len);
double rram_feature_hi(int bit_width, int frac_len);

// Round-to-nearest-even, independent of the FP environment.
double round_half_even(double v);

// Round every element to the grid 2^-l * k and saturate to the spec's range.
// The input is left untouched.
Tensor quantize(const Tensor& x, const QuantSpec& spec);

double quantize_value(double v, const QuantSpec& spec);

// Largest fraction length whose representable range still covers max|x|
// (minimal-overflow principle). All-zero tensors get l = Q.
int find_frac_len(const Tensor& x, int bit_width, QuantScheme scheme);
int find_frac_len_for_magnitude(double max_abs, int bit_width, QuantScheme scheme);

// True iff every element of x sits exactly on the spec's grid within range.
bool on_grid(const Tensor& x, const QuantSpec& spec);

}  // namespace ftnas
