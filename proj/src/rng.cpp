#include "ftnas/rng.hpp"

#include <cmath>
#include <numbers>

namespace ftnas {

namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer
uint64_t mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(uint64_t seed) : key_(mix(seed + kGolden)) {}

RngStream RngStream::derive(std::string_view name) const {
  RngStream s;
  s.key_ = mix(key_ ^ fnv1a(name));
  return s;
}

RngStream RngStream::derive(uint64_t salt) const {
  RngStream s;
  s.key_ = mix(key_ ^ mix(salt + kGolden));
  return s;
}

uint64_t RngStream::bits(uint64_t ctr) const {
  return mix(key_ + kGolden * (ctr + 1));
}

double RngStream::uniform(uint64_t ctr) const {
  return static_cast<double>(bits(ctr) >> 11) * 0x1.0p-53;
}

bool RngStream::bernoulli(uint64_t ctr, double p) const {
  return uniform(ctr) < p;
}

uint32_t RngStream::uniform_int(uint64_t ctr, uint32_t n) const {
  // 64-bit multiply-shift; bias is negligible for the small n used here.
  return static_cast<uint32_t>((static_cast<unsigned __int128>(bits(ctr)) * n) >> 64);
}

double RngStream::normal(uint64_t ctr) const {
  // One counter slot per draw; the second uniform is re-mixed from the first.
  uint64_t b1 = bits(ctr);
  uint64_t b2 = mix(b1 + kGolden);
  double u1 = static_cast<double>((b1 >> 11) + 1) * 0x1.0p-53;  // (0, 1]
  double u2 = static_cast<double>(b2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ftnas
