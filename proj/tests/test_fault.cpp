#include <bit>
#include <cmath>

#include "doctest.h"
#include "ftnas/check.hpp"
#include "ftnas/fault.hpp"
#include "test_util.hpp"

using namespace ftnas;
using ftnas::test::bit_equal;
using ftnas::test::random_tensor;
using ftnas::test::within_binomial_band;

namespace {

FaultModelSpec bf_spec(double p, int Q = 8, int l = 4) {
  FaultModelSpec s;
  s.kind = FaultKind::BitFlip;
  s.p = p;
  s.quant = {Q, l, QuantScheme::CmosComplement};
  return s;
}

FaultModelSpec adsaf_spec(double p0, double p1, int Q = 8, int l = 4) {
  FaultModelSpec s;
  s.kind = FaultKind::AdSafMultiBit;
  s.p0 = p0;
  s.p1 = p1;
  s.quant = {Q, l, QuantScheme::RramSymmetric};
  return s;
}

}  // namespace

TEST_CASE("bit flip: forced mask, identity, and rate") {
  SUBCASE("flipping bit q=1 of zero with l=0 gives 1") {
    FaultMask m;
    m.kind = FaultKind::BitFlip;
    m.shape = {1};
    m.quant = {8, 0, QuantScheme::CmosComplement};
    m.bit_code = {1};  // e_1
    Tensor x({1}, {0.0});
    CHECK(apply_bit_flip(x, m)[0] == 1.0);
  }

  SUBCASE("p = 0 is the identity") {
    Tensor x = quantize(random_tensor({1000}, 3, -10.0, 10.0),
                        {8, 4, QuantScheme::CmosComplement});
    CHECK(bit_equal(inject_bit_flip(x, bf_spec(0.0), RngStream(1)), x));
  }

  SUBCASE("off-grid input violates the precondition") {
    Tensor x({1}, {0.3});
    CHECK_THROWS_AS(inject_bit_flip(x, bf_spec(0.1), RngStream(1)), CheckError);
  }

  SUBCASE("flipped-bit count sits in the binomial band") {
    const int64_t n = 1000000;
    QuantSpec q{8, 4, QuantScheme::CmosComplement};
    Tensor x = quantize(random_tensor({n}, 4, -10.0, 10.0), q);
    Tensor y = inject_bit_flip(x, bf_spec(0.01), RngStream(99));
    int64_t flipped = 0;
    for (int64_t i = 0; i < n; ++i) {
      const auto cx = static_cast<uint64_t>(static_cast<int64_t>(std::ldexp(x[i], 4)));
      const auto cy = static_cast<uint64_t>(static_cast<int64_t>(std::ldexp(y[i], 4)));
      flipped += std::popcount((cx ^ cy) & 0xffu);
    }
    CHECK(flipped >= 78000);
    CHECK(flipped <= 82000);
    CHECK(within_binomial_band(static_cast<double>(flipped),
                               static_cast<double>(8 * n), 0.01));
    CHECK(on_grid(y, q));
  }
}

TEST_CASE("bit bias: forced value, identity, and variance") {
  SUBCASE("single forced bias e_3 with positive sign") {
    FaultMask m;
    m.kind = FaultKind::BitBias;
    m.shape = {1};
    m.quant = {8, 4, QuantScheme::CmosComplement};
    m.bit_code = {1u << 2};   // e_3
    m.bit_code2 = {0};        // beta = 0 -> positive
    Tensor x({1}, {1.0});
    CHECK(apply_bit_bias(x, m)[0] == 1.25);  // 1 + 2^-4 * 2^2
  }

  SUBCASE("p = 0 is the identity") {
    Tensor x = random_tensor({512}, 5);
    FaultModelSpec s;
    s.kind = FaultKind::BitBias;
    s.p = 0.0;
    s.quant = {8, 4, QuantScheme::CmosComplement};
    CHECK(bit_equal(inject_bit_bias(x, s, RngStream(2)), x));
  }

  SUBCASE("bias mean and variance match the closed form") {
    const int64_t n = 1000000;
    const double p = 1e-3;
    const int Q = 8, l = 4;
    FaultModelSpec s;
    s.kind = FaultKind::BitBias;
    s.p = p;
    s.quant = {Q, l, QuantScheme::CmosComplement};
    Tensor x(std::vector<int64_t>{n});
    Tensor y = inject_bit_bias(x, s, RngStream(123));
    double mean = 0.0, var = 0.0;
    for (int64_t i = 0; i < n; ++i) mean += y[i];
    mean /= static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) var += (y[i] - mean) * (y[i] - mean);
    var /= static_cast<double>(n);
    double expect = 0.0;
    for (int q = 1; q <= Q; ++q) {
      const double mag = std::ldexp(1.0, q - 1 - l);
      expect += p * mag * mag;
    }
    CHECK(std::fabs(var - expect) / expect < 0.05);
    CHECK(std::fabs(mean) < 5.0 * std::sqrt(expect / static_cast<double>(n)));
  }
}

TEST_CASE("per-feature rate from the per-MAC rate") {
  CHECK(mibb_feature_rate(20, 3, 1e-4) == doctest::Approx(1.8e-2).epsilon(1e-12));
  CHECK(mibb_feature_rate(20, 3, 0.0) == 0.0);
  CHECK(mibb_feature_rate(512, 5, 3e-4) == 1.0);  // clamped
  CHECK_THROWS_AS(mibb_feature_rate(0, 3, 1e-4), CheckError);
}

TEST_CASE("mibb: identity at zero rate, forced site, rate band, support") {
  FaultModelSpec s;
  s.kind = FaultKind::MiBB;
  s.quant = {8, 4, QuantScheme::CmosComplement};

  SUBCASE("zero rate leaves the tensor untouched") {
    s.p_m = 0.0;
    Tensor f = random_tensor({2, 4, 6, 6}, 6);
    CHECK(bit_equal(inject_mibb(f, 20, 3, s, RngStream(3)), f));
  }

  SUBCASE("forced single fault decreases the site by 2^(alpha-l)") {
    FaultMask m;
    m.kind = FaultKind::MiBB;
    m.shape = {4};
    m.quant = {8, 4, QuantScheme::CmosComplement};
    m.theta = {0, 1, 0, 0};
    m.alpha = {0, 7, 0, 0};  // alpha = Q-1
    m.beta = {0, 1, 0, 0};   // negative sign
    Tensor f({4}, {1.0, 2.0, 3.0, 4.0});
    Tensor y = apply_mibb(f, m);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 2.0 - 8.0);  // 2^(7-4)
    CHECK(y[2] == 3.0);
    CHECK(y[3] == 4.0);
  }

  SUBCASE("faulty-site count across 100 trials stays in the binomial band") {
    s.p_m = 1e-4;
    const double rate = mibb_feature_rate(20, 3, s.p_m);
    int64_t count = 0;
    const int64_t sites = 16 * 32 * 32;
    for (int trial = 0; trial < 100; ++trial) {
      FaultMask m = make_mibb_mask({16, 32, 32}, 20, 3, s,
                                   RngStream(500).derive(static_cast<uint64_t>(trial)));
      for (uint8_t t : m.theta) count += t;
    }
    CHECK(within_binomial_band(static_cast<double>(count),
                               static_cast<double>(sites * 100), rate));
  }

  SUBCASE("perturbation magnitudes live on powers of two below Q") {
    s.p_m = 3e-3;
    Tensor f(std::vector<int64_t>{5000});
    Tensor y = inject_mibb(f, 16, 3, s, RngStream(8));
    for (int64_t i = 0; i < y.size(); ++i) {
      if (y[i] == 0.0) continue;
      const double mag = std::fabs(y[i]);
      bool found = false;
      for (int a = 0; a < 8; ++a)
        if (mag == std::ldexp(1.0, a - 4)) found = true;
      CHECK(found);
    }
  }
}

TEST_CASE("adSAF multi-bit weight faults") {
  QuantSpec q{8, 4, QuantScheme::RramSymmetric};
  const double rw = q.weight_bound();

  SUBCASE("p0 = 1 zeroes every weight") {
    Tensor w = quantize(random_tensor({200}, 7, -20.0, 20.0), q);
    Tensor y = inject_adsaf(w, adsaf_spec(1.0, 0.0), RngStream(4));
    for (int64_t i = 0; i < y.size(); ++i) CHECK(y[i] == 0.0);
  }

  SUBCASE("p1 = 1 drives weights to the signed bound") {
    Tensor w({2}, {0.5, -0.5});
    Tensor y = inject_adsaf(w, adsaf_spec(0.0, 1.0), RngStream(5));
    CHECK(y[0] == rw);
    CHECK(y[1] == -rw);
  }

  SUBCASE("cmos scheme has no bound and is rejected") {
    FaultModelSpec bad = adsaf_spec(0.1, 0.1);
    bad.quant.scheme = QuantScheme::CmosComplement;
    Tensor w({4});
    CHECK_THROWS_AS(inject_adsaf(w, bad, RngStream(6)), CheckError);
  }

  SUBCASE("measured stuck fractions reproduce the 6.7/1.3 split") {
    const int64_t n = 1000000;
    FaultMask m = make_adsaf_mask({n}, adsaf_spec(6.7e-2, 1.3e-2), RngStream(42));
    int64_t saf0 = 0, saf1 = 0;
    for (int64_t i = 0; i < n; ++i) {
      if (!m.theta[static_cast<size_t>(i)]) continue;
      if (m.saf_type[static_cast<size_t>(i)])
        ++saf1;
      else
        ++saf0;
    }
    CHECK(within_binomial_band(static_cast<double>(saf0), static_cast<double>(n),
                               6.7e-2));
    CHECK(within_binomial_band(static_cast<double>(saf1), static_cast<double>(n),
                               1.3e-2));
  }

  SUBCASE("support, sign preservation, idempotence, determinism") {
    Tensor w = quantize(random_tensor({20000}, 9, -20.0, 20.0), q);
    FaultModelSpec s = adsaf_spec(0.06, 0.02);
    FaultMask m = make_adsaf_mask(w.shape(), s, RngStream(77));
    Tensor y = apply_adsaf(w, m);
    for (int64_t i = 0; i < w.size(); ++i) {
      if (m.theta[static_cast<size_t>(i)]) {
        CHECK((y[i] == 0.0 || y[i] == rw || y[i] == -rw));
        CHECK(y[i] * w[i] >= 0.0);  // sign never flips
      } else {
        CHECK(y[i] == w[i]);
      }
    }
    CHECK(bit_equal(apply_adsaf(y, m), y));  // idempotent under the same mask
    FaultMask m2 = make_adsaf_mask(w.shape(), s, RngStream(77));
    CHECK(bit_equal(apply_adsaf(w, m2), y));  // regenerates bit-exactly
    FaultMask m3 = make_adsaf_mask(w.shape(), s, RngStream(78));
    CHECK(!bit_equal(apply_adsaf(w, m3), y));
  }
}

TEST_CASE("adSAF single-bit weight faults") {
  FaultModelSpec s;
  s.kind = FaultKind::AdSaf1Bit;
  s.quant = {8, 4, QuantScheme::CmosComplement};

  auto forced = [&](uint16_t theta, uint16_t e, double w) {
    FaultMask m;
    m.kind = FaultKind::AdSaf1Bit;
    m.shape = {1};
    m.quant = s.quant;
    m.bit_code = {theta};
    m.bit_code2 = {e};
    Tensor t({1}, {w});
    return apply_adsaf_1bit(t, m)[0];
  };

  // w = 0.5 at l = 4 has magnitude code 8 = b00001000
  CHECK(forced(1u << 3, 1u << 3, 0.5) == 0.5);        // bit q=4 stuck at 1
  CHECK(forced(1u << 0, 1u << 0, 0.5) == 0.5625);     // bit q=1 stuck at 1
  CHECK(forced(0x00ff, 0x0000, 0.5) == 0.0);          // all bits stuck at 0
  CHECK(forced(0x00ff, 0x0000, -0.5) == 0.0);
  CHECK(forced(1u << 0, 1u << 0, -0.5) == -0.5625);   // sign preserved

  SUBCASE("magnitude overflow violates the precondition") {
    FaultMask m;
    m.kind = FaultKind::AdSaf1Bit;
    m.shape = {1};
    m.quant = {4, 4, QuantScheme::CmosComplement};
    m.bit_code = {0};
    m.bit_code2 = {0};
    Tensor t({1}, {2.0});  // code 32 needs more than 4 bits
    CHECK_THROWS_AS(apply_adsaf_1bit(t, m), CheckError);
  }

  SUBCASE("per-bit override rate stays in the binomial band") {
    const int64_t n = 200000;
    s.p0 = 0.06;
    s.p1 = 0.02;
    FaultMask m = make_adsaf_1bit_mask({n}, s, RngStream(11));
    int64_t bits = 0;
    for (uint16_t t : m.bit_code) bits += std::popcount(static_cast<unsigned>(t));
    CHECK(within_binomial_band(static_cast<double>(bits),
                               static_cast<double>(8 * n), 0.08));
    // conditional stuck-at-one rate
    int64_t ones = 0, total = 0;
    for (int64_t i = 0; i < n; ++i) {
      const unsigned t = m.bit_code[static_cast<size_t>(i)];
      const unsigned e = m.bit_code2[static_cast<size_t>(i)];
      total += std::popcount(t);
      ones += std::popcount(t & e);
    }
    CHECK(within_binomial_band(static_cast<double>(ones),
                               static_cast<double>(total), 0.25));
  }
}

TEST_CASE("programming variation") {
  QuantSpec q{8, 4, QuantScheme::RramSymmetric};

  SUBCASE("sigma = 0 is the identity") {
    Tensor w = quantize(random_tensor({300}, 13, -20.0, 20.0), q);
    for (FaultKind k : {FaultKind::LogNormal, FaultKind::ReciprocalNormal}) {
      FaultModelSpec s;
      s.kind = k;
      s.sigma = 0.0;
      s.quant = q;
      CHECK(bit_equal(inject_variation(w, s, RngStream(14)), w));
    }
  }

  SUBCASE("lognormal median stays at the original weight") {
    const int64_t n = 1000000;
    FaultModelSpec s;
    s.kind = FaultKind::LogNormal;
    s.sigma = 0.1;
    s.quant = q;
    Tensor w = Tensor::full({n}, 1.0);
    Tensor y = inject_variation(w, s, RngStream(15));
    std::vector<double> v(y.data(), y.data() + n);
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    CHECK(v[static_cast<size_t>(n / 2)] > 0.99);
    CHECK(v[static_cast<size_t>(n / 2)] < 1.01);
  }

  SUBCASE("zero weights stay zero and signs never flip") {
    Tensor w({5}, {0.0, 1.0, -1.0, 0.25, -0.25});
    for (FaultKind k : {FaultKind::LogNormal, FaultKind::ReciprocalNormal}) {
      FaultModelSpec s;
      s.kind = k;
      s.sigma = 0.5;
      s.quant = q;
      for (int trial = 0; trial < 50; ++trial) {
        Tensor y = inject_variation(w, s, RngStream(16).derive(static_cast<uint64_t>(trial)));
        CHECK(y[0] == 0.0);
        for (int64_t i = 1; i < 5; ++i) {
          CHECK(y[i] * w[i] > 0.0);
          CHECK(std::fabs(y[i]) <= q.range_hi());
        }
      }
    }
  }
}

TEST_CASE("spec validation") {
  FaultModelSpec s;
  s.kind = FaultKind::BitFlip;
  s.p = 1.5;
  CHECK_THROWS_AS(s.validate(), CheckError);
  s.p = 0.5;
  CHECK_NOTHROW(s.validate());
  s.p0 = 0.8;
  s.p1 = 0.3;
  CHECK_THROWS_AS(s.validate(), CheckError);
}

TEST_CASE("grad gates block stuck sites only") {
  FaultModelSpec s = adsaf_spec(0.3, 0.1);
  FaultMask m = make_adsaf_mask({1000}, s, RngStream(21));
  Tensor gate = m.grad_gate();
  for (int64_t i = 0; i < 1000; ++i)
    CHECK(gate[i] == (m.theta[static_cast<size_t>(i)] ? 0.0 : 1.0));

  FaultModelSpec bb;
  bb.kind = FaultKind::BitBias;
  bb.p = 0.5;
  bb.quant = {8, 4, QuantScheme::CmosComplement};
  FaultMask mb = make_bit_bias_mask({100}, bb, RngStream(22));
  Tensor g2 = mb.grad_gate();
  for (int64_t i = 0; i < 100; ++i) CHECK(g2[i] == 1.0);
}
