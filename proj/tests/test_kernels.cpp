#include <omp.h>

#include "doctest.h"
#include "ftnas/kernels.hpp"
#include "test_util.hpp"

using namespace ftnas;
using ftnas::test::bit_equal;
using ftnas::test::max_abs_diff;
using ftnas::test::random_tensor;

TEST_CASE("3x3 conv of all-ones, no padding, single output") {
  Tensor x = Tensor::full({1, 1, 3, 3}, 1.0);
  Tensor w = Tensor::full({1, 1, 3, 3}, 1.0);
  ConvGeom g;  // stride 1, pad 0
  Tensor y = kernels::conv2d_forward(x, w, Tensor(), g);
  CHECK(y.shape() == std::vector<int64_t>{1, 1, 1, 1});
  CHECK(y[0] == 9.0);
}

TEST_CASE("parallel kernels agree with the serial reference") {
  struct Case {
    int64_t n, ci, h, co, k, stride, pad, dil, groups;
  };
  const Case cases[] = {
      {2, 3, 8, 5, 3, 1, 1, 1, 1},  {1, 4, 9, 4, 3, 2, 1, 1, 1},
      {2, 6, 8, 6, 3, 1, 2, 2, 6},  {1, 4, 11, 8, 5, 1, 2, 1, 1},
      {2, 4, 8, 4, 1, 2, 0, 1, 1},  {1, 8, 6, 8, 5, 2, 4, 2, 8},
  };
  int idx = 0;
  for (const Case& c : cases) {
    ConvGeom g{c.stride, c.pad, c.dil, c.groups};
    Tensor x = random_tensor({c.n, c.ci, c.h, c.h}, 100 + idx);
    Tensor w = random_tensor({c.co, c.ci / c.groups, c.k, c.k}, 200 + idx);
    Tensor b = random_tensor({c.co}, 300 + idx);
    Tensor y = kernels::conv2d_forward(x, w, b, g);
    Tensor yr = kernels::ref::conv2d_forward(x, w, b, g);
    CHECK(max_abs_diff(y, yr) < 1e-12);

    Tensor gy = random_tensor(y.shape(), 400 + idx);
    CHECK(max_abs_diff(kernels::conv2d_backward_input(gy, w, x.shape(), g),
                       kernels::ref::conv2d_backward_input(gy, w, x.shape(), g)) <
          1e-12);
    CHECK(max_abs_diff(kernels::conv2d_backward_weight(gy, x, w.shape(), g),
                       kernels::ref::conv2d_backward_weight(gy, x, w.shape(), g)) <
          1e-12);
    ++idx;
  }

  Tensor x = random_tensor({3, 5, 9, 9}, 17);
  CHECK(bit_equal(kernels::maxpool3x3_forward(x, 2),
                  kernels::ref::maxpool3x3_forward(x, 2)));
  CHECK(max_abs_diff(kernels::avgpool3x3_forward(x, 1),
                     kernels::ref::avgpool3x3_forward(x, 1)) < 1e-14);

  Tensor gamma = random_tensor({5}, 18, 0.5, 1.5);
  Tensor beta = random_tensor({5}, 19);
  BnStats s = kernels::batchnorm_stats(x, 1e-5);
  BnStats sr = kernels::ref::batchnorm_stats(x, 1e-5);
  CHECK(max_abs_diff(s.mean, sr.mean) < 1e-13);
  CHECK(max_abs_diff(s.invstd, sr.invstd) < 1e-10);
  CHECK(max_abs_diff(kernels::batchnorm_forward(x, gamma, beta, s),
                     kernels::ref::batchnorm_forward(x, gamma, beta, sr)) < 1e-10);

  Tensor xm = random_tensor({4, 7}, 20);
  Tensor wm = random_tensor({3, 7}, 21);
  Tensor bm = random_tensor({3}, 22);
  CHECK(max_abs_diff(kernels::linear_forward(xm, wm, bm),
                     kernels::ref::linear_forward(xm, wm, bm)) < 1e-13);
}

TEST_CASE("kernel results do not depend on the thread count") {
  Tensor x = random_tensor({2, 4, 10, 10}, 31);
  Tensor w = random_tensor({6, 4, 3, 3}, 32);
  ConvGeom g{1, 1, 1, 1};
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  Tensor y1 = kernels::conv2d_forward(x, w, Tensor(), g);
  Tensor gy = random_tensor(y1.shape(), 33);
  Tensor gw1 = kernels::conv2d_backward_weight(gy, x, w.shape(), g);
  BnStats s1 = kernels::batchnorm_stats(x, 1e-5);
  omp_set_num_threads(2);
  Tensor y2 = kernels::conv2d_forward(x, w, Tensor(), g);
  Tensor gw2 = kernels::conv2d_backward_weight(gy, x, w.shape(), g);
  BnStats s2 = kernels::batchnorm_stats(x, 1e-5);
  omp_set_num_threads(saved);
  CHECK(bit_equal(y1, y2));
  CHECK(bit_equal(gw1, gw2));
  CHECK(bit_equal(s1.invstd, s2.invstd));
}

TEST_CASE("pooling geometry halves even extents") {
  Tensor x = random_tensor({1, 2, 16, 16}, 41);
  CHECK(kernels::maxpool3x3_forward(x, 2).shape() ==
        std::vector<int64_t>{1, 2, 8, 8});
  CHECK(kernels::avgpool3x3_forward(x, 1).shape() ==
        std::vector<int64_t>{1, 2, 16, 16});
}

TEST_CASE("global average pool") {
  Tensor x({1, 2, 2, 2}, {1, 2, 3, 4, 10, 20, 30, 40});
  Tensor y = kernels::global_avgpool_forward(x);
  CHECK(y.at({0, 0}) == 2.5);
  CHECK(y.at({0, 1}) == 25.0);
}
