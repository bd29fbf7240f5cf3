#include "ftnas/fault.hpp"

#include <algorithm>
#include <cmath>

#include "ftnas/check.hpp"

namespace ftnas {

const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::None: return "none";
    case FaultKind::BitFlip: return "bit-flip";
    case FaultKind::BitBias: return "bit-bias";
    case FaultKind::MiBB: return "mibb";
    case FaultKind::AdSafMultiBit: return "adsaf";
    case FaultKind::AdSaf1Bit: return "adsaf-1bit";
    case FaultKind::LogNormal: return "lognormal";
    case FaultKind::ReciprocalNormal: return "reciprocal-normal";
  }
  return "?";
}

FaultKind fault_kind_from_string(const std::string& s) {
  for (FaultKind k :
       {FaultKind::None, FaultKind::BitFlip, FaultKind::BitBias, FaultKind::MiBB,
        FaultKind::AdSafMultiBit, FaultKind::AdSaf1Bit, FaultKind::LogNormal,
        FaultKind::ReciprocalNormal}) {
    if (s == to_string(k)) return k;
  }
  FTNAS_CHECK(false, "unknown fault kind '" << s << "'");
}

bool is_weight_fault(FaultKind k) {
  switch (k) {
    case FaultKind::BitFlip:
    case FaultKind::AdSafMultiBit:
    case FaultKind::AdSaf1Bit:
    case FaultKind::LogNormal:
    case FaultKind::ReciprocalNormal:
      return true;
    default:
      return false;
  }
}

bool is_feature_fault(FaultKind k) {
  return k == FaultKind::MiBB || k == FaultKind::BitBias;
}

void FaultModelSpec::validate() const {
  auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
  FTNAS_CHECK(prob(p), "bit probability p=" << p << " outside [0,1]");
  FTNAS_CHECK(prob(p_m), "per-MAC rate p_m=" << p_m << " outside [0,1]");
  FTNAS_CHECK(prob(p0) && prob(p1) && p0 + p1 <= 1.0,
              "SAF rates p0=" << p0 << " p1=" << p1 << " invalid");
  FTNAS_CHECK(sigma >= 0.0, "sigma=" << sigma << " negative");
  FTNAS_CHECK(quant.valid(), "invalid quant context");
  if (kind == FaultKind::AdSafMultiBit)
    FTNAS_CHECK(quant.scheme == QuantScheme::RramSymmetric,
                "multi-bit stuck-at faults need the rram-symmetric scheme "
                "(no representation bound under cmos-complement)");
}

int64_t FaultMask::site_count() const { return shape_size(shape); }

Tensor FaultMask::grad_gate() const {
  Tensor g = Tensor::full(shape, 1.0);
  if (kind == FaultKind::AdSafMultiBit) {
    double* gp = g.mutable_data();
    for (int64_t i = 0; i < g.size(); ++i)
      if (theta[static_cast<size_t>(i)]) gp[i] = 0.0;
  } else if (kind == FaultKind::AdSaf1Bit) {
    double* gp = g.mutable_data();
    const uint16_t all = static_cast<uint16_t>((1u << quant.bit_width) - 1u);
    for (int64_t i = 0; i < g.size(); ++i)
      if (bit_code[static_cast<size_t>(i)] == all) gp[i] = 0.0;
  }
  return g;
}

double mibb_feature_rate(int64_t c, int64_t k, double p_m) {
  FTNAS_CHECK(c >= 1 && k >= 1, "bad conv shape c=" << c << " k=" << k);
  return std::min(p_m * static_cast<double>(c) * static_cast<double>(k * k), 1.0);
}

namespace {

// Two's-complement code of a quantized value; the representable interval
// spans Q+1 bits of code.
int64_t code_of(double v, const QuantSpec& q, const char* who) {
  const double scaled = std::ldexp(v, q.frac_len);
  const double r = std::nearbyint(scaled);
  FTNAS_CHECK(scaled == r, who << ": input value " << v
                               << " is not on the (Q=" << q.bit_width
                               << ", l=" << q.frac_len << ") grid");
  return static_cast<int64_t>(r);
}

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

}  // namespace

FaultMask make_bit_flip_mask(const std::vector<int64_t>& shape,
                             const FaultModelSpec& spec, const RngStream& rng) {
  spec.validate();
  FTNAS_CHECK(spec.kind == FaultKind::BitFlip, "spec kind mismatch");
  FaultMask m;
  m.kind = spec.kind;
  m.shape = shape;
  m.quant = spec.quant;
  m.stream_key = rng.key();
  const int Q = spec.quant.bit_width;
  const int64_t n = shape_size(shape);
  m.bit_code.assign(static_cast<size_t>(n), 0);
  RngStream e = rng.derive("e");
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    uint16_t code = 0;
    for (int q = 0; q < Q; ++q)
      if (e.bernoulli(static_cast<uint64_t>(i) * Q + q, spec.p))
        code |= static_cast<uint16_t>(1u << q);
    m.bit_code[static_cast<size_t>(i)] = code;
  }
  return m;
}

Tensor apply_bit_flip(const Tensor& x, const FaultMask& mask) {
  FTNAS_CHECK(x.shape() == mask.shape, "mask shape mismatch");
  const QuantSpec& q = mask.quant;
  const int bits = q.bit_width + 1;
  const uint64_t wrap = 1ull << bits;
  Tensor y(x.shape());
  double* yp = y.mutable_data();
  const double step = q.step();
  // serial: the grid precondition must throw, not terminate, on violation
  for (int64_t i = 0; i < x.size(); ++i) {
    int64_t code = code_of(x[i], q, "bit-flip");
    uint64_t u = static_cast<uint64_t>(code) & (wrap - 1);
    u ^= mask.bit_code[static_cast<size_t>(i)];
    int64_t flipped = static_cast<int64_t>(u);
    if (flipped >= static_cast<int64_t>(wrap / 2)) flipped -= static_cast<int64_t>(wrap);
    yp[i] = static_cast<double>(flipped) * step;
  }
  return y;
}

Tensor inject_bit_flip(const Tensor& x, const FaultModelSpec& spec,
                       const RngStream& rng) {
  return apply_bit_flip(x, make_bit_flip_mask(x.shape(), spec, rng));
}

FaultMask make_bit_bias_mask(const std::vector<int64_t>& shape,
                             const FaultModelSpec& spec, const RngStream& rng) {
  spec.validate();
  FTNAS_CHECK(spec.kind == FaultKind::BitBias, "spec kind mismatch");
  FaultMask m;
  m.kind = spec.kind;
  m.shape = shape;
  m.quant = spec.quant;
  m.stream_key = rng.key();
  const int Q = spec.quant.bit_width;
  const int64_t n = shape_size(shape);
  m.bit_code.assign(static_cast<size_t>(n), 0);
  m.bit_code2.assign(static_cast<size_t>(n), 0);
  RngStream e = rng.derive("e");
  RngStream b = rng.derive("beta");
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    uint16_t ec = 0;
    const uint64_t bbits = b.bits(static_cast<uint64_t>(i));
    for (int q = 0; q < Q; ++q)
      if (e.bernoulli(static_cast<uint64_t>(i) * Q + q, spec.p))
        ec |= static_cast<uint16_t>(1u << q);
    m.bit_code[static_cast<size_t>(i)] = ec;
    m.bit_code2[static_cast<size_t>(i)] =
        static_cast<uint16_t>(bbits & ((1u << Q) - 1u));
  }
  return m;
}

Tensor apply_bit_bias(const Tensor& x, const FaultMask& mask) {
  FTNAS_CHECK(x.shape() == mask.shape, "mask shape mismatch");
  const int Q = mask.quant.bit_width;
  Tensor y(x.shape());
  double* yp = y.mutable_data();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < x.size(); ++i) {
    double e = 0.0;
    const uint16_t ec = mask.bit_code[static_cast<size_t>(i)];
    const uint16_t bc = mask.bit_code2[static_cast<size_t>(i)];
    for (int q = 1; q <= Q; ++q) {
      if (!(ec >> (q - 1) & 1)) continue;
      const double mag = std::ldexp(1.0, q - 1 - mask.quant.frac_len);
      e += (bc >> (q - 1) & 1) ? -mag : mag;
    }
    yp[i] = x[i] + e;
  }
  return y;
}

Tensor inject_bit_bias(const Tensor& x, const FaultModelSpec& spec,
                       const RngStream& rng) {
  return apply_bit_bias(x, make_bit_bias_mask(x.shape(), spec, rng));
}

FaultMask make_mibb_mask(const std::vector<int64_t>& shape, int64_t c,
                         int64_t k, const FaultModelSpec& spec,
                         const RngStream& rng) {
  spec.validate();
  FTNAS_CHECK(spec.kind == FaultKind::MiBB, "spec kind mismatch");
  FTNAS_CHECK(c >= 1 && k >= 1, "missing conv shape for per-MAC rate");
  const double p = mibb_feature_rate(c, k, spec.p_m);
  FaultMask m;
  m.kind = spec.kind;
  m.shape = shape;
  m.quant = spec.quant;
  m.stream_key = rng.key();
  const int64_t n = shape_size(shape);
  m.theta.assign(static_cast<size_t>(n), 0);
  m.alpha.assign(static_cast<size_t>(n), 0);
  m.beta.assign(static_cast<size_t>(n), 0);
  RngStream st = rng.derive("theta");
  RngStream sa = rng.derive("alpha");
  RngStream sb = rng.derive("beta");
  const uint32_t Q = static_cast<uint32_t>(spec.quant.bit_width);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const uint64_t u = static_cast<uint64_t>(i);
    m.theta[static_cast<size_t>(i)] = st.bernoulli(u, p) ? 1 : 0;
    m.alpha[static_cast<size_t>(i)] = static_cast<uint8_t>(sa.uniform_int(u, Q));
    m.beta[static_cast<size_t>(i)] = static_cast<uint8_t>(sb.uniform_int(u, 2));
  }
  return m;
}

Tensor apply_mibb(const Tensor& f, const FaultMask& mask) {
  FTNAS_CHECK(f.shape() == mask.shape, "mask shape mismatch");
  Tensor y(f.shape());
  double* yp = y.mutable_data();
  const int l = mask.quant.frac_len;
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < f.size(); ++i) {
    double v = f[i];
    if (mask.theta[static_cast<size_t>(i)]) {
      const double mag = std::ldexp(1.0, mask.alpha[static_cast<size_t>(i)] - l);
      v += mask.beta[static_cast<size_t>(i)] ? -mag : mag;
    }
    yp[i] = v;
  }
  return y;
}

Tensor inject_mibb(const Tensor& f, int64_t c, int64_t k,
                   const FaultModelSpec& spec, const RngStream& rng) {
  return apply_mibb(f, make_mibb_mask(f.shape(), c, k, spec, rng));
}

FaultMask make_adsaf_mask(const std::vector<int64_t>& shape,
                          const FaultModelSpec& spec, const RngStream& rng) {
  spec.validate();
  FTNAS_CHECK(spec.kind == FaultKind::AdSafMultiBit, "spec kind mismatch");
  FaultMask m;
  m.kind = spec.kind;
  m.shape = shape;
  m.quant = spec.quant;
  m.bound = spec.quant.weight_bound();
  m.stream_key = rng.key();
  const int64_t n = shape_size(shape);
  m.theta.assign(static_cast<size_t>(n), 0);
  m.saf_type.assign(static_cast<size_t>(n), 0);
  const double pf = spec.p0 + spec.p1;
  const double p_bound = pf > 0.0 ? spec.p1 / pf : 0.0;
  RngStream st = rng.derive("theta");
  RngStream sm = rng.derive("m");
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const uint64_t u = static_cast<uint64_t>(i);
    m.theta[static_cast<size_t>(i)] = st.bernoulli(u, pf) ? 1 : 0;
    m.saf_type[static_cast<size_t>(i)] = sm.bernoulli(u, p_bound) ? 1 : 0;
  }
  return m;
}

Tensor apply_adsaf(const Tensor& w, const FaultMask& mask) {
  FTNAS_CHECK(w.shape() == mask.shape, "mask shape mismatch");
  Tensor y(w.shape());
  double* yp = y.mutable_data();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < w.size(); ++i) {
    if (!mask.theta[static_cast<size_t>(i)]) {
      yp[i] = w[i];
    } else if (mask.saf_type[static_cast<size_t>(i)]) {
      yp[i] = mask.bound * static_cast<double>(sign_of(w[i]));
    } else {
      yp[i] = 0.0;
    }
  }
  return y;
}

Tensor inject_adsaf(const Tensor& w, const FaultModelSpec& spec,
                    const RngStream& rng) {
  return apply_adsaf(w, make_adsaf_mask(w.shape(), spec, rng));
}

FaultMask make_adsaf_1bit_mask(const std::vector<int64_t>& shape,
                               const FaultModelSpec& spec,
                               const RngStream& rng) {
  spec.validate();
  FTNAS_CHECK(spec.kind == FaultKind::AdSaf1Bit, "spec kind mismatch");
  FaultMask m;
  m.kind = spec.kind;
  m.shape = shape;
  m.quant = spec.quant;
  m.stream_key = rng.key();
  const int Q = spec.quant.bit_width;
  const int64_t n = shape_size(shape);
  m.bit_code.assign(static_cast<size_t>(n), 0);   // theta bits
  m.bit_code2.assign(static_cast<size_t>(n), 0);  // stuck values e
  const double pf = spec.p0 + spec.p1;
  const double p_one = pf > 0.0 ? spec.p1 / pf : 0.0;
  RngStream st = rng.derive("theta");
  RngStream se = rng.derive("e");
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    uint16_t tc = 0, ec = 0;
    for (int q = 0; q < Q; ++q) {
      const uint64_t u = static_cast<uint64_t>(i) * Q + q;
      if (st.bernoulli(u, pf)) tc |= static_cast<uint16_t>(1u << q);
      if (se.bernoulli(u, p_one)) ec |= static_cast<uint16_t>(1u << q);
    }
    m.bit_code[static_cast<size_t>(i)] = tc;
    m.bit_code2[static_cast<size_t>(i)] = ec;
  }
  return m;
}

Tensor apply_adsaf_1bit(const Tensor& w, const FaultMask& mask) {
  FTNAS_CHECK(w.shape() == mask.shape, "mask shape mismatch");
  const QuantSpec& q = mask.quant;
  const int Q = q.bit_width;
  const uint64_t limit = (1ull << Q) - 1;
  Tensor y(w.shape());
  double* yp = y.mutable_data();
  const double step = q.step();
  // serial: the magnitude preconditions must throw, not terminate
  for (int64_t i = 0; i < w.size(); ++i) {
    const double mag_scaled = std::ldexp(std::fabs(w[i]), q.frac_len);
    const double r = std::nearbyint(mag_scaled);
    FTNAS_CHECK(mag_scaled == r, "1bit stuck-at: weight " << w[i]
                                                          << " is off-grid");
    FTNAS_CHECK(r <= static_cast<double>(limit),
                "1bit stuck-at: magnitude code " << r << " overflows " << Q
                                                 << " bits");
    const uint64_t mag = static_cast<uint64_t>(r);
    const uint64_t tc = mask.bit_code[static_cast<size_t>(i)];
    const uint64_t ec = mask.bit_code2[static_cast<size_t>(i)];
    const uint64_t stuck = ((~tc & mag) | (tc & ec)) & limit;
    yp[i] = static_cast<double>(sign_of(w[i])) * static_cast<double>(stuck) * step;
  }
  return y;
}

Tensor inject_adsaf_1bit(const Tensor& w, const FaultModelSpec& spec,
                         const RngStream& rng) {
  return apply_adsaf_1bit(w, make_adsaf_1bit_mask(w.shape(), spec, rng));
}

FaultMask make_variation_mask(const std::vector<int64_t>& shape,
                              const FaultModelSpec& spec, const RngStream& rng) {
  spec.validate();
  FTNAS_CHECK(spec.kind == FaultKind::LogNormal ||
                  spec.kind == FaultKind::ReciprocalNormal,
              "spec kind mismatch");
  FaultMask m;
  m.kind = spec.kind;
  m.shape = shape;
  m.quant = spec.quant;
  m.bound = spec.quant.range_hi();
  m.stream_key = rng.key();
  const int64_t n = shape_size(shape);
  m.factor.assign(static_cast<size_t>(n), 0.0);
  RngStream sz = rng.derive("z");
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i)
    m.factor[static_cast<size_t>(i)] =
        spec.sigma * sz.normal(static_cast<uint64_t>(i));
  return m;
}

Tensor apply_variation(const Tensor& w, const FaultMask& mask) {
  FTNAS_CHECK(w.shape() == mask.shape, "mask shape mismatch");
  Tensor y(w.shape());
  double* yp = y.mutable_data();
  const double bound = mask.bound;
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < w.size(); ++i) {
    const double v = w[i];
    if (v == 0.0 || mask.factor[static_cast<size_t>(i)] == 0.0) {
      yp[i] = v;  // zero weights have no cell to perturb; sigma=0 is exact
      continue;
    }
    double mag = std::fabs(v);
    if (mask.kind == FaultKind::LogNormal) {
      mag *= std::exp(mask.factor[static_cast<size_t>(i)]);
    } else {
      // Perturb the reciprocal; the device cannot leave (0, bound].
      const double r = 1.0 / mag + mask.factor[static_cast<size_t>(i)];
      mag = 1.0 / std::max(r, 1.0 / bound);
    }
    mag = std::min(mag, bound);
    yp[i] = static_cast<double>(sign_of(v)) * mag;
  }
  return y;
}

Tensor inject_variation(const Tensor& w, const FaultModelSpec& spec,
                        const RngStream& rng) {
  return apply_variation(w, make_variation_mask(w.shape(), spec, rng));
}

FaultMask make_weight_fault_mask(const std::vector<int64_t>& shape,
                                 const FaultModelSpec& spec,
                                 const RngStream& rng) {
  switch (spec.kind) {
    case FaultKind::BitFlip: return make_bit_flip_mask(shape, spec, rng);
    case FaultKind::AdSafMultiBit: return make_adsaf_mask(shape, spec, rng);
    case FaultKind::AdSaf1Bit: return make_adsaf_1bit_mask(shape, spec, rng);
    case FaultKind::LogNormal:
    case FaultKind::ReciprocalNormal:
      return make_variation_mask(shape, spec, rng);
    default:
      FTNAS_CHECK(false, "not a weight fault kind: " << to_string(spec.kind));
  }
}

Tensor apply_weight_fault(const Tensor& w, const FaultMask& mask) {
  switch (mask.kind) {
    case FaultKind::BitFlip: return apply_bit_flip(w, mask);
    case FaultKind::AdSafMultiBit: return apply_adsaf(w, mask);
    case FaultKind::AdSaf1Bit: return apply_adsaf_1bit(w, mask);
    case FaultKind::LogNormal:
    case FaultKind::ReciprocalNormal:
      return apply_variation(w, mask);
    default:
      FTNAS_CHECK(false, "not a weight fault kind: " << to_string(mask.kind));
  }
}

}  // namespace ftnas
