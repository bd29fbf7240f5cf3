#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftnas/quant.hpp"
#include "ftnas/rng.hpp"
#include "ftnas/tensor.hpp"

namespace ftnas {

enum class FaultKind {
  None,
  BitFlip,          // i.i.d bit flips on fixed-point codes
  BitBias,          // i.i.d additive bit biases
  MiBB,             // per-MAC-scaled bit bias on conv outputs
  AdSafMultiBit,    // weights stuck at 0 / +-Rw
  AdSaf1Bit,        // per-bit stuck-at on weight magnitude codes
  LogNormal,        // multiplicative programming variation
  ReciprocalNormal  // additive variation on the reciprocal magnitude
};

const char* to_string(FaultKind k);
FaultKind fault_kind_from_string(const std::string& s);
bool is_weight_fault(FaultKind k);
bool is_feature_fault(FaultKind k);

struct FaultModelSpec {
  FaultKind kind = FaultKind::None;
  double p = 0.0;      // per-bit probability (BitFlip / BitBias)
  double p_m = 0.0;    // per-MAC error rate (MiBB)
  double p0 = 0.0;     // stuck-at-zero rate
  double p1 = 0.0;     // stuck-at-bound rate
  double sigma = 0.0;  // variation standard deviation
  QuantSpec quant;     // (Q, l) context for bit-level models
  bool apply_to_fc = true;  // MiBB also hits fully-connected layers

  void validate() const;
  bool operator==(const FaultModelSpec&) const = default;

  FaultModelSpec with_frac_len(int l) const {
    FaultModelSpec s = *this;
    s.quant.frac_len = l;
    return s;
  }
};

// Concrete realization of one fault draw. Regenerates bit-exactly from
// (spec, stream, shape); appliers are pure functions of (tensor, mask).
struct FaultMask {
  FaultKind kind = FaultKind::None;
  std::vector<int64_t> shape;
  QuantSpec quant;
  double bound = 0.0;  // Rw captured at generation time (adSAF)
  uint64_t stream_key = 0;

  std::vector<uint8_t> theta;     // per-site occurrence
  std::vector<uint8_t> alpha;     // per-site bit position (MiBB)
  std::vector<uint8_t> beta;      // per-site bias sign (MiBB)
  std::vector<uint8_t> saf_type;  // per-site SAF type m (multi-bit adSAF)
  std::vector<uint16_t> bit_code;   // per-site packed bits (BitFlip e / 1bit theta)
  std::vector<uint16_t> bit_code2;  // per-site packed bits (BitBias beta / 1bit e)
  std::vector<double> factor;       // per-site continuous factor (variation)

  int64_t site_count() const;
  // 1.0 where gradients should flow under frozen-mask training, 0 at stuck
  // sites; all-ones for additive models.
  Tensor grad_gate() const;
};

double mibb_feature_rate(int64_t c, int64_t k, double p_m);

FaultMask make_bit_flip_mask(const std::vector<int64_t>& shape,
                             const FaultModelSpec& spec, const RngStream& rng);
Tensor apply_bit_flip(const Tensor& x, const FaultMask& mask);
Tensor inject_bit_flip(const Tensor& x, const FaultModelSpec& spec,
                       const RngStream& rng);

FaultMask make_bit_bias_mask(const std::vector<int64_t>& shape,
                             const FaultModelSpec& spec, const RngStream& rng);
Tensor apply_bit_bias(const Tensor& x, const FaultMask& mask);
Tensor inject_bit_bias(const Tensor& x, const FaultModelSpec& spec,
                       const RngStream& rng);

// c and k describe the producing convolution's kernel (c, k, k).
FaultMask make_mibb_mask(const std::vector<int64_t>& shape, int64_t c,
                         int64_t k, const FaultModelSpec& spec,
                         const RngStream& rng);
Tensor apply_mibb(const Tensor& f, const FaultMask& mask);
Tensor inject_mibb(const Tensor& f, int64_t c, int64_t k,
                   const FaultModelSpec& spec, const RngStream& rng);

FaultMask make_adsaf_mask(const std::vector<int64_t>& shape,
                          const FaultModelSpec& spec, const RngStream& rng);
Tensor apply_adsaf(const Tensor& w, const FaultMask& mask);
Tensor inject_adsaf(const Tensor& w, const FaultModelSpec& spec,
                    const RngStream& rng);

FaultMask make_adsaf_1bit_mask(const std::vector<int64_t>& shape,
                               const FaultModelSpec& spec,
                               const RngStream& rng);
Tensor apply_adsaf_1bit(const Tensor& w, const FaultMask& mask);
Tensor inject_adsaf_1bit(const Tensor& w, const FaultModelSpec& spec,
                         const RngStream& rng);

FaultMask make_variation_mask(const std::vector<int64_t>& shape,
                              const FaultModelSpec& spec, const RngStream& rng);
Tensor apply_variation(const Tensor& w, const FaultMask& mask);
Tensor inject_variation(const Tensor& w, const FaultModelSpec& spec,
                        const RngStream& rng);

// Dispatch over the weight-fault kinds (BitFlip, adSAF, variation).
FaultMask make_weight_fault_mask(const std::vector<int64_t>& shape,
                                 const FaultModelSpec& spec,
                                 const RngStream& rng);
Tensor apply_weight_fault(const Tensor& w, const FaultMask& mask);

}  // namespace ftnas
