#include <cmath>

#include "doctest.h"
#include "ftnas/quant.hpp"
#include "test_util.hpp"

using namespace ftnas;

namespace {

// Scalar reference: round x to the nearest multiple of 2^-l (ties to even),
// then clamp. Kept independent of the library path it checks.
double ref_quantize(double x, int Q, int l, QuantScheme scheme) {
  const double step = std::ldexp(1.0, -l);
  double k = x / step;
  double fl = std::floor(k);
  double frac = k - fl;
  double r;
  if (frac > 0.5)
    r = fl + 1;
  else if (frac < 0.5)
    r = fl;
  else
    r = (std::fmod(fl, 2.0) == 0.0) ? fl : fl + 1;
  double v = r * step;
  double lo, hi;
  if (scheme == QuantScheme::CmosComplement) {
    lo = -std::ldexp(1.0, Q - l);
    hi = step * (std::ldexp(1.0, Q) - 1);
  } else {
    hi = step * (std::ldexp(1.0, Q + 1) - 1);
    lo = -hi;
  }
  return std::min(std::max(v, lo), hi);
}

}  // namespace

TEST_CASE("quantize matches scalar reference on the worked examples") {
  QuantSpec s{8, 4, QuantScheme::CmosComplement};
  CHECK(quantize_value(0.3, s) == 0.3125);
  CHECK(quantize_value(0.3, s) == ref_quantize(0.3, 8, 4, s.scheme));
  CHECK(quantize_value(0.0, s) == 0.0);
  CHECK(quantize_value(100.0, s) == 15.9375);  // saturates at the upper bound
  CHECK(s.range_hi() == 15.9375);
  CHECK(s.range_lo() == -16.0);
}

TEST_CASE("rram ranges") {
  QuantSpec w{8, 4, QuantScheme::RramSymmetric};
  CHECK(w.weight_bound() == (512.0 - 1.0) / 16.0);
  CHECK(w.range_lo() == -w.range_hi());
  // feature range on rram platforms equals the complement-representation range
  CHECK(rram_feature_lo(8, 4) == QuantSpec{8, 4, QuantScheme::CmosComplement}.range_lo());
  CHECK(rram_feature_hi(8, 4) == QuantSpec{8, 4, QuantScheme::CmosComplement}.range_hi());
}

TEST_CASE("round half even") {
  CHECK(round_half_even(0.5) == 0.0);
  CHECK(round_half_even(1.5) == 2.0);
  CHECK(round_half_even(2.5) == 2.0);
  CHECK(round_half_even(-0.5) == 0.0);
  CHECK(round_half_even(-1.5) == -2.0);
  CHECK(round_half_even(0.4999) == 0.0);
  CHECK(round_half_even(-2.51) == -3.0);
}

TEST_CASE("find_frac_len follows the minimal-overflow principle") {
  // Oracle: enumerate l and check the representable bound directly.
  auto oracle = [](double m, int Q, QuantScheme scheme) {
    int best = -1000;
    for (int l = -64; l <= 64; ++l) {
      QuantSpec s{Q, l, scheme};
      if (m <= s.range_hi()) best = l;
    }
    return best;
  };
  CHECK(find_frac_len_for_magnitude(0.9, 8, QuantScheme::CmosComplement) == 8);
  CHECK(oracle(0.9, 8, QuantScheme::CmosComplement) == 8);
  CHECK(find_frac_len_for_magnitude(16.0, 8, QuantScheme::CmosComplement) == 3);
  CHECK(oracle(16.0, 8, QuantScheme::CmosComplement) == 3);

  Tensor zero({16});
  CHECK(find_frac_len(zero, 8, QuantScheme::CmosComplement) == 8);  // default l=Q
  CHECK(find_frac_len(zero, 6, QuantScheme::RramSymmetric) == 6);

  RngStream rng(7);
  for (int t = 0; t < 200; ++t) {
    const int Q = 4 + static_cast<int>(rng.uniform_int(3 * t, 7));
    const auto scheme = rng.bernoulli(3 * t + 1, 0.5)
                            ? QuantScheme::CmosComplement
                            : QuantScheme::RramSymmetric;
    const double m = std::ldexp(rng.uniform(3 * t + 2) + 1e-9,
                                static_cast<int>(rng.uniform_int(3 * t + 2, 20)) - 10);
    CHECK(find_frac_len_for_magnitude(m, Q, scheme) == oracle(m, Q, scheme));
  }
}

TEST_CASE("quantization idempotence, saturation, monotonicity, round trip") {
  RngStream rng(11);
  for (int t = 0; t < 60; ++t) {
    const int Q = 4 + static_cast<int>(rng.uniform_int(4 * t, 7));       // 4..10
    const int l = -2 + static_cast<int>(rng.uniform_int(4 * t + 1, 13)); // -2..10
    const auto scheme = rng.bernoulli(4 * t + 2, 0.5)
                            ? QuantScheme::CmosComplement
                            : QuantScheme::RramSymmetric;
    QuantSpec s{Q, l, scheme};
    Tensor x = test::random_tensor({257}, 1000 + t, -std::ldexp(1.5, Q - l),
                                   std::ldexp(1.5, Q - l));
    Tensor q1 = quantize(x, s);
    Tensor q2 = quantize(q1, s);
    CHECK(test::bit_equal(q1, q2));
    for (int64_t i = 0; i < q1.size(); ++i) {
      CHECK(q1[i] >= s.range_lo());
      CHECK(q1[i] <= s.range_hi());
      const double clamped = std::min(std::max(x[i], s.range_lo()), s.range_hi());
      CHECK(std::fabs(q1[i] - clamped) <= std::ldexp(1.0, -l - 1) + 1e-15);
    }
    // monotonicity on sorted copies
    Tensor xs = x.clone();
    std::sort(xs.mutable_data(), xs.mutable_data() + xs.size());
    Tensor qs = quantize(xs, s);
    for (int64_t i = 1; i < qs.size(); ++i) CHECK(qs[i] >= qs[i - 1]);
  }
}

TEST_CASE("on_grid detects off-grid values") {
  QuantSpec s{8, 4, QuantScheme::CmosComplement};
  CHECK(on_grid(Tensor({2}, {0.3125, -1.0}), s));
  CHECK(!on_grid(Tensor({1}, {0.3}), s));
  CHECK(!on_grid(Tensor({1}, {100.0}), s));
}
