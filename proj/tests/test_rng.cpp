#include <cmath>

#include "doctest.h"
#include "ftnas/rng.hpp"

using namespace ftnas;

TEST_CASE("counter streams are pure functions of (key, counter)") {
  RngStream a(42);
  RngStream b(42);
  for (uint64_t i = 0; i < 100; ++i) {
    CHECK(a.bits(i) == b.bits(i));
    CHECK(a.uniform(i) == b.uniform(i));
  }
  CHECK(RngStream(42).key() != RngStream(43).key());
}

TEST_CASE("derived streams differ from their parent and each other") {
  RngStream root(7);
  RngStream t = root.derive("theta");
  RngStream al = root.derive("alpha");
  CHECK(t.key() != al.key());
  CHECK(t.key() != root.key());
  CHECK(root.derive("theta").key() == t.key());
  CHECK(root.derive(uint64_t{3}).key() != root.derive(uint64_t{4}).key());
}

TEST_CASE("uniform moments and range") {
  RngStream s(123);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double u = s.uniform(static_cast<uint64_t>(i));
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(std::fabs(sum / n - 0.5) < 0.005);
  CHECK(std::fabs(sum2 / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("normal moments") {
  RngStream s(9);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double z = s.normal(static_cast<uint64_t>(i));
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(std::fabs(sum2 / n - 1.0) < 0.02);
}

TEST_CASE("uniform_int covers [0, n)") {
  RngStream s(77);
  int counts[7] = {0};
  for (int i = 0; i < 70000; ++i) counts[s.uniform_int(static_cast<uint64_t>(i), 7)]++;
  for (int k = 0; k < 7; ++k) CHECK(std::fabs(counts[k] - 10000.0) < 500.0);
}

TEST_CASE("sequential adapter walks the counter") {
  SequentialRng a{RngStream(5)};
  SequentialRng b{RngStream(5)};
  for (int i = 0; i < 10; ++i) CHECK(a.uniform() == b.uniform());
}
