#pragma once

#include <cmath>
#include <cstdint>

#include "ftnas/rng.hpp"
#include "ftnas/tensor.hpp"

namespace ftnas::test {

inline Tensor random_tensor(std::vector<int64_t> shape, uint64_t seed,
                            double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  RngStream s(seed);
  double* p = t.mutable_data();
  for (int64_t i = 0; i < t.size(); ++i)
    p[i] = lo + (hi - lo) * s.uniform(static_cast<uint64_t>(i));
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return false;
  for (int64_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

// |count - n p| <= sigmas * sqrt(n p (1-p))
inline bool within_binomial_band(double count, double n, double p,
                                 double sigmas = 5.0) {
  const double mean = n * p;
  const double sd = std::sqrt(n * p * (1.0 - p));
  return std::fabs(count - mean) <= sigmas * sd;
}

}  // namespace ftnas::test
