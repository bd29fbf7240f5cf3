#pragma once

#include <cstdint>
#include <string_view>

namespace ftnas {

// Counter-based random stream. Every draw is a pure function of
// (key, counter), so masks regenerate bit-exactly from their provenance and
// parallel consumers never reorder each other's draws. Streams are split by
// name or salt; the convention is one stream per (layer, tensor, purpose).
class RngStream {
 public:
  RngStream() : key_(0) {}
  explicit RngStream(uint64_t seed);

  RngStream derive(std::string_view name) const;
  RngStream derive(uint64_t salt) const;

  uint64_t key() const { return key_; }

  uint64_t bits(uint64_t ctr) const;
  double uniform(uint64_t ctr) const;  // [0, 1)
  bool bernoulli(uint64_t ctr, double p) const;
  uint32_t uniform_int(uint64_t ctr, uint32_t n) const;  // [0, n)
  double normal(uint64_t ctr) const;   // standard normal, Box-Muller

 private:
  uint64_t key_;
};

// Stateful adapter over RngStream for call sites that just want a sequence.
class SequentialRng {
 public:
  explicit SequentialRng(RngStream stream) : stream_(stream) {}

  double uniform() { return stream_.uniform(ctr_++); }
  bool bernoulli(double p) { return stream_.bernoulli(ctr_++, p); }
  uint32_t uniform_int(uint32_t n) { return stream_.uniform_int(ctr_++, n); }
  double normal() { return stream_.normal(ctr_++); }
  uint64_t bits() { return stream_.bits(ctr_++); }

 private:
  RngStream stream_;
  uint64_t ctr_ = 0;
};

}  // namespace ftnas
