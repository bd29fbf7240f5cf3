#include <cmath>

#include "doctest.h"
#include "ftnas/autograd.hpp"
#include "ftnas/check.hpp"
#include "test_util.hpp"

using namespace ftnas;
using ftnas::test::random_tensor;

TEST_CASE("sum of squares has adjoint 2x") {
  Tensor x = random_tensor({30}, 5, -2.0, 2.0);
  Tape tape;
  Var in = tape.input(x, true);
  Var loss = ops::sum(ops::mul(in, in));
  tape.backward(loss);
  const Tensor& g = tape.grad(in);
  for (int64_t i = 0; i < x.size(); ++i)
    CHECK(g[i] == doctest::Approx(2.0 * x[i]).epsilon(1e-12));

  auto f = [](Tape& t, Var v) { return ops::sum(ops::mul(v, v)); };
  GradCheckResult r = grad_check(f, x, 1e-5, 1e-6);
  CHECK(r.ok);
}

TEST_CASE("conv + relu + sum matches central differences") {
  Tensor x = random_tensor({1, 4, 8, 8}, 6, -1.0, 1.0);
  Tensor w = random_tensor({3, 4, 3, 3}, 7, -0.5, 0.5);
  auto f = [&](Tape& t, Var v) {
    Var wv = t.input(w);
    ConvGeom g{1, 1, 1, 1};
    return ops::sum(ops::relu(ops::conv2d(v, wv, Var{}, g)));
  };
  GradCheckResult r = grad_check(f, x, 1e-3, 1e-3, 64);
  INFO(r.diagnostic);
  CHECK(r.ok);
}

TEST_CASE("grad_check flags non-finite values") {
  Tensor x({2}, {1.0, 0.0});
  auto f = [](Tape& t, Var v) {
    Tensor bad = Tensor::full({2}, std::numeric_limits<double>::infinity());
    return ops::sum(ops::add_constant(v, bad));
  };
  GradCheckResult r = grad_check(f, x, 1e-4, 1e-3);
  CHECK(!r.ok);
  CHECK(!r.diagnostic.empty());
}

TEST_CASE("composite op gradients") {
  Tensor x = random_tensor({1, 12}, 8, -1.5, 1.5);

  SUBCASE("linear + sigmoid + tanh") {
    Tensor w = random_tensor({5, 12}, 9, -0.7, 0.7);
    Tensor b = random_tensor({5}, 10);
    auto f = [&](Tape& t, Var v) {
      Var y = ops::linear(v, t.input(w), t.input(b));
      return ops::sum(ops::tanh(ops::sigmoid(y)));
    };
    CHECK(grad_check(f, x, 1e-5, 1e-5).ok);
  }

  SUBCASE("log softmax row + select + entropy") {
    auto f = [](Tape& t, Var v) {
      Var ls = ops::log_softmax_row(v, 9);  // mask the last 3 columns
      return ops::axpby(ops::select_element(ls, 4),
                        ops::entropy_from_logsoft(ls), 1.0, 0.5);
    };
    CHECK(grad_check(f, x, 1e-5, 1e-5).ok);
  }

  SUBCASE("slice + mul + scale") {
    auto f = [](Tape& t, Var v) {
      Var a = ops::slice_cols(v, 0, 6);
      Var b = ops::slice_cols(v, 6, 12);
      return ops::scale(ops::sum(ops::mul(a, b)), 0.7);
    };
    CHECK(grad_check(f, x, 1e-5, 1e-6).ok);
  }
}

TEST_CASE("softmax cross entropy gradient and value") {
  Tensor logits = random_tensor({5, 4}, 11, -2.0, 2.0);
  std::vector<int> labels{0, 3, 1, 2, 1};
  auto f = [&](Tape& t, Var v) { return ops::softmax_cross_entropy(v, labels); };
  CHECK(grad_check(f, logits, 1e-5, 1e-6).ok);

  // uniform logits give CE = log(K)
  Tape tape;
  Var in = tape.input(Tensor::full({2, 4}, 0.25), false);
  Var loss = ops::softmax_cross_entropy(in, {1, 2});
  CHECK(tape.value(loss)[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  CHECK_THROWS_AS(
      ops::softmax_cross_entropy(tape.input(Tensor({1, 3})), {7}),
      CheckError);
}

TEST_CASE("batchnorm gradient") {
  Tensor x = random_tensor({2, 3, 4, 4}, 12, -1.0, 1.0);
  Tensor gamma = random_tensor({3}, 13, 0.5, 1.5);
  Tensor beta = random_tensor({3}, 14);
  auto f = [&](Tape& t, Var v) {
    Var y = ops::batchnorm_train(v, t.input(gamma, true), t.input(beta, true),
                                 1e-5);
    return ops::sum(ops::mul(y, y));
  };
  GradCheckResult r = grad_check(f, x, 1e-5, 1e-4);
  INFO(r.diagnostic);
  CHECK(r.ok);
}

TEST_CASE("straight-through ops pass gradients unchanged") {
  Tensor x = random_tensor({6}, 15, -3.0, 3.0);
  Tape tape;
  Var in = tape.input(x, true);
  QuantSpec s{8, 3, QuantScheme::CmosComplement};
  Var q = ops::quantize_ste(in, s);
  Var loss = ops::sum(ops::mul(q, q));
  tape.backward(loss);
  const Tensor& qv = tape.value(q);
  const Tensor& g = tape.grad(in);
  for (int64_t i = 0; i < x.size(); ++i)
    CHECK(g[i] == doctest::Approx(2.0 * qv[i]).epsilon(1e-12));

  Tape t2;
  Var in2 = t2.input(x, true);
  Var rep = ops::replace_gated(in2, Tensor::full({6}, 1.0),
                               Tensor({6}, {1, 0, 1, 0, 1, 0}));
  t2.backward(ops::sum(rep));
  const Tensor& g2 = t2.grad(in2);
  for (int64_t i = 0; i < 6; ++i) CHECK(g2[i] == (i % 2 == 0 ? 1.0 : 0.0));
}

TEST_CASE("parameters reused in one pass accumulate into one node") {
  Tensor w = random_tensor({4}, 16);
  Tape tape;
  Var a = tape.param("w", w);
  Var b = tape.param("w", w);
  CHECK(a.id == b.id);
  Var loss = ops::sum(ops::add(a, b));
  tape.backward(loss);
  for (int64_t i = 0; i < 4; ++i) CHECK(tape.grad(a)[i] == 2.0);
  CHECK(tape.params().size() == 1);
}
