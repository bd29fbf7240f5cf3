#include "ftnas/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ftnas/check.hpp"

namespace ftnas {

Var Tape::input(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), Tensor(), nullptr, requires_grad});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(const std::string& name, Tensor value) {
  // A parameter used twice in one forward pass maps to a single node so its
  // adjoints accumulate in one place.
  auto it = param_ids_.find(name);
  if (it != param_ids_.end()) return Var{this, it->second};
  Var v = input(std::move(value), /*requires_grad=*/true);
  params_.emplace_back(name, v);
  param_ids_.emplace(name, v.id);
  return v;
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn fn) {
  bool rg = false;
  for (const Var& p : parents) {
    FTNAS_CHECK(p.tape == this, "op mixes vars from different tapes");
    rg = rg || nodes_[static_cast<size_t>(p.id)].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), Tensor(), rg ? std::move(fn) : nullptr, rg});
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Tape::value(Var v) const {
  return nodes_[static_cast<size_t>(v.id)].value;
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_[static_cast<size_t>(v.id)];
  FTNAS_CHECK(n.grad.defined(), "no gradient recorded for node " << v.id);
  return n.grad;
}

bool Tape::has_grad(Var v) const {
  return nodes_[static_cast<size_t>(v.id)].grad.defined();
}

bool Tape::needs_grad(Var v) const {
  return nodes_[static_cast<size_t>(v.id)].requires_grad;
}

void Tape::accumulate(Var v, Tensor g) {
  Node& n = nodes_[static_cast<size_t>(v.id)];
  if (!n.requires_grad) return;
  if (!n.grad.defined()) {
    n.grad = std::move(g);
  } else {
    n.grad = kernels::add(n.grad, g);
  }
}

void Tape::backward(Var loss) {
  FTNAS_CHECK(loss.tape == this, "loss is not on this tape");
  FTNAS_CHECK(nodes_[static_cast<size_t>(loss.id)].value.size() == 1,
              "backward expects a scalar loss");
  nodes_[static_cast<size_t>(loss.id)].grad =
      Tensor::full(nodes_[static_cast<size_t>(loss.id)].value.shape(), 1.0);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.backward && n.grad.defined()) n.backward(*this, n.grad);
  }
}

namespace ops {

namespace {
Tape& tape_of(Var v) {
  FTNAS_CHECK(v.defined(), "undefined var");
  return *v.tape;
}
}  // namespace

Var conv2d(Var x, Var w, Var b, const ConvGeom& g) {
  Tape& t = tape_of(x);
  Tensor xv = t.value(x);
  Tensor wv = t.value(w);
  Tensor bv = b.defined() ? t.value(b) : Tensor();
  Tensor y = kernels::conv2d_forward(xv, wv, bv, g);
  std::vector<Var> parents{x, w};
  if (b.defined()) parents.push_back(b);
  return t.record(std::move(y), parents, [=](Tape& tp, const Tensor& gy) {
    if (tp.needs_grad(x))
      tp.accumulate(x, kernels::conv2d_backward_input(gy, wv, xv.shape(), g));
    if (tp.needs_grad(w))
      tp.accumulate(w, kernels::conv2d_backward_weight(gy, xv, wv.shape(), g));
    if (b.defined() && tp.needs_grad(b))
      tp.accumulate(b, kernels::conv2d_backward_bias(gy));
  });
}

Var relu(Var x) {
  Tape& t = tape_of(x);
  Tensor xv = t.value(x);
  return t.record(kernels::relu_forward(xv), {x},
                  [=](Tape& tp, const Tensor& gy) {
                    tp.accumulate(x, kernels::relu_backward(gy, xv));
                  });
}

Var maxpool3x3(Var x, int64_t stride) {
  Tape& t = tape_of(x);
  Tensor xv = t.value(x);
  return t.record(kernels::maxpool3x3_forward(xv, stride), {x},
                  [=](Tape& tp, const Tensor& gy) {
                    tp.accumulate(x, kernels::maxpool3x3_backward(gy, xv, stride));
                  });
}

Var avgpool3x3(Var x, int64_t stride) {
  Tape& t = tape_of(x);
  Tensor xv = t.value(x);
  auto shape = xv.shape();
  return t.record(kernels::avgpool3x3_forward(xv, stride), {x},
                  [=](Tape& tp, const Tensor& gy) {
                    tp.accumulate(x, kernels::avgpool3x3_backward(gy, shape, stride));
                  });
}

Var global_avgpool(Var x) {
  Tape& t = tape_of(x);
  auto shape = t.value(x).shape();
  return t.record(kernels::global_avgpool_forward(t.value(x)), {x},
                  [=](Tape& tp, const Tensor& gy) {
                    tp.accumulate(x, kernels::global_avgpool_backward(gy, shape));
                  });
}

Var linear(Var x, Var w, Var b) {
  Tape& t = tape_of(x);
  Tensor xv = t.value(x);
  Tensor wv = t.value(w);
  Tensor bv = b.defined() ? t.value(b) : Tensor();
  std::vector<Var> parents{x, w};
  if (b.defined()) parents.push_back(b);
  return t.record(kernels::linear_forward(xv, wv, bv), parents,
                  [=](Tape& tp, const Tensor& gy) {
                    if (tp.needs_grad(x))
                      tp.accumulate(x, kernels::linear_backward_input(gy, wv));
                    if (tp.needs_grad(w))
                      tp.accumulate(w, kernels::linear_backward_weight(gy, xv));
                    if (b.defined() && tp.needs_grad(b))
                      tp.accumulate(b, kernels::linear_backward_bias(gy));
                  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  return t.record(kernels::add(t.value(a), t.value(b)), {a, b},
                  [=](Tape& tp, const Tensor& gy) {
                    tp.accumulate(a, gy);
                    tp.accumulate(b, gy);
                  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  Tensor av = t.value(a);
  Tensor bv = t.value(b);
  FTNAS_CHECK(av.same_shape(bv), "mul shape mismatch");
  Tensor y(av.shape());
  double* yp = y.mutable_data();
  for (int64_t i = 0; i < y.size(); ++i) yp[i] = av[i] * bv[i];
  return t.record(std::move(y), {a, b}, [=](Tape& tp, const Tensor& gy) {
    Tensor ga(av.shape()), gb(av.shape());
    double* gap = ga.mutable_data();
    double* gbp = gb.mutable_data();
    for (int64_t i = 0; i < gy.size(); ++i) {
      gap[i] = gy[i] * bv[i];
      gbp[i] = gy[i] * av[i];
    }
    tp.accumulate(a, std::move(ga));
    tp.accumulate(b, std::move(gb));
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  return t.record(kernels::scale(t.value(a), s), {a},
                  [=](Tape& tp, const Tensor& gy) {
                    tp.accumulate(a, kernels::scale(gy, s));
                  });
}

Var axpby(Var a, Var b, double alpha, double beta) {
  Tape& t = tape_of(a);
  Tensor av = t.value(a);
  Tensor bv = t.value(b);
  FTNAS_CHECK(av.same_shape(bv), "axpby shape mismatch");
  Tensor y(av.shape());
  double* yp = y.mutable_data();
  for (int64_t i = 0; i < y.size(); ++i) yp[i] = alpha * av[i] + beta * bv[i];
  return t.record(std::move(y), {a, b}, [=](Tape& tp, const Tensor& gy) {
    tp.accumulate(a, kernels::scale(gy, alpha));
    tp.accumulate(b, kernels::scale(gy, beta));
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  Tensor av = t.value(a);
  auto shape = av.shape();
  return t.record(Tensor::scalar(av.sum()), {a},
                  [=](Tape& tp, const Tensor& gy) {
                    tp.accumulate(a, Tensor::full(shape, gy[0]));
                  });
}

Var batchnorm_train(Var x, Var gamma, Var beta, double eps, BnStats* stats_out) {
  Tape& t = tape_of(x);
  Tensor xv = t.value(x);
  Tensor gv = t.value(gamma);
  BnStats stats = kernels::batchnorm_stats(xv, eps);
  if (stats_out) *stats_out = stats;
  Tensor y = kernels::batchnorm_forward(xv, gv, t.value(beta), stats);
  return t.record(std::move(y), {x, gamma, beta},
                  [=](Tape& tp, const Tensor& gy) {
                    BnGrads g = kernels::batchnorm_backward(gy, xv, gv, stats);
                    tp.accumulate(x, std::move(g.gx));
                    tp.accumulate(gamma, std::move(g.ggamma));
                    tp.accumulate(beta, std::move(g.gbeta));
                  });
}

Var quantize_ste(Var x, const QuantSpec& spec) {
  Tape& t = tape_of(x);
  return t.record(quantize(t.value(x), spec), {x},
                  [=](Tape& tp, const Tensor& gy) { tp.accumulate(x, gy); });
}

Var replace_ste(Var x, Tensor new_value) {
  Tape& t = tape_of(x);
  FTNAS_CHECK(new_value.same_shape(t.value(x)), "replace_ste shape mismatch");
  return t.record(std::move(new_value), {x},
                  [=](Tape& tp, const Tensor& gy) { tp.accumulate(x, gy); });
}

Var replace_gated(Var x, Tensor new_value, Tensor gate) {
  Tape& t = tape_of(x);
  FTNAS_CHECK(new_value.same_shape(t.value(x)) && gate.same_shape(new_value),
              "replace_gated shape mismatch");
  return t.record(std::move(new_value), {x}, [=](Tape& tp, const Tensor& gy) {
    Tensor g(gy.shape());
    double* gp = g.mutable_data();
    for (int64_t i = 0; i < gy.size(); ++i) gp[i] = gy[i] * gate[i];
    tp.accumulate(x, std::move(g));
  });
}

Var add_constant(Var x, const Tensor& c) {
  Tape& t = tape_of(x);
  return t.record(kernels::add(t.value(x), c), {x},
                  [=](Tape& tp, const Tensor& gy) { tp.accumulate(x, gy); });
}

namespace {
constexpr double kMaskedLogit = -1e30;
}

Var log_softmax_row(Var logits, int valid) {
  Tape& t = tape_of(logits);
  Tensor lv = t.value(logits);
  FTNAS_CHECK(lv.ndim() == 2 && lv.dim(0) == 1, "expected [1,K] logits");
  const int64_t K = lv.dim(1);
  FTNAS_CHECK(valid >= 1 && valid <= K, "invalid class count " << valid);
  double mx = -std::numeric_limits<double>::infinity();
  for (int64_t k = 0; k < valid; ++k) mx = std::max(mx, lv[k]);
  double lse = 0.0;
  for (int64_t k = 0; k < valid; ++k) lse += std::exp(lv[k] - mx);
  lse = mx + std::log(lse);
  Tensor y(lv.shape());
  double* yp = y.mutable_data();
  for (int64_t k = 0; k < K; ++k)
    yp[k] = k < valid ? lv[k] - lse : kMaskedLogit;
  Tensor yv = y;
  return t.record(std::move(y), {logits}, [=](Tape& tp, const Tensor& gy) {
    double gsum = 0.0;
    for (int64_t k = 0; k < valid; ++k) gsum += gy[k];
    Tensor gx(yv.shape());
    double* gp = gx.mutable_data();
    for (int64_t k = 0; k < K; ++k)
      gp[k] = k < valid ? gy[k] - std::exp(yv[k]) * gsum : 0.0;
    tp.accumulate(logits, std::move(gx));
  });
}

Var select_element(Var row, int64_t index) {
  Tape& t = tape_of(row);
  Tensor rv = t.value(row);
  FTNAS_CHECK(index >= 0 && index < rv.size(), "select index out of range");
  auto shape = rv.shape();
  return t.record(Tensor::scalar(rv[index]), {row},
                  [=](Tape& tp, const Tensor& gy) {
                    Tensor g(shape);
                    g.mutable_data()[index] = gy[0];
                    tp.accumulate(row, std::move(g));
                  });
}

Var entropy_from_logsoft(Var logsoft) {
  Tape& t = tape_of(logsoft);
  Tensor lv = t.value(logsoft);
  double h = 0.0;
  for (int64_t k = 0; k < lv.size(); ++k) {
    if (lv[k] <= kMaskedLogit) continue;
    h -= std::exp(lv[k]) * lv[k];
  }
  return t.record(Tensor::scalar(h), {logsoft},
                  [=](Tape& tp, const Tensor& gy) {
                    Tensor g(lv.shape());
                    double* gp = g.mutable_data();
                    for (int64_t k = 0; k < lv.size(); ++k)
                      gp[k] = lv[k] <= kMaskedLogit
                                  ? 0.0
                                  : -gy[0] * std::exp(lv[k]) * (lv[k] + 1.0);
                    tp.accumulate(logsoft, std::move(g));
                  });
}

Var slice_cols(Var x, int64_t lo, int64_t hi) {
  Tape& t = tape_of(x);
  Tensor xv = t.value(x);
  FTNAS_CHECK(xv.ndim() == 2 && xv.dim(0) == 1 && lo >= 0 && hi <= xv.dim(1) &&
                  lo < hi,
              "bad slice [" << lo << "," << hi << ") of " << shape_str(xv.shape()));
  Tensor y({1, hi - lo});
  double* yp = y.mutable_data();
  for (int64_t k = lo; k < hi; ++k) yp[k - lo] = xv[k];
  const int64_t K = xv.dim(1);
  return t.record(std::move(y), {x}, [=](Tape& tp, const Tensor& gy) {
    Tensor g({1, K});
    double* gp = g.mutable_data();
    for (int64_t k = lo; k < hi; ++k) gp[k] = gy[k - lo];
    tp.accumulate(x, std::move(g));
  });
}

Var sigmoid(Var x) {
  Tape& t = tape_of(x);
  Tensor xv = t.value(x);
  Tensor y(xv.shape());
  double* yp = y.mutable_data();
  for (int64_t i = 0; i < y.size(); ++i) yp[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  Tensor yv = y;
  return t.record(std::move(y), {x}, [=](Tape& tp, const Tensor& gy) {
    Tensor g(yv.shape());
    double* gp = g.mutable_data();
    for (int64_t i = 0; i < gy.size(); ++i) gp[i] = gy[i] * yv[i] * (1.0 - yv[i]);
    tp.accumulate(x, std::move(g));
  });
}

Var tanh(Var x) {
  Tape& t = tape_of(x);
  Tensor xv = t.value(x);
  Tensor y(xv.shape());
  double* yp = y.mutable_data();
  for (int64_t i = 0; i < y.size(); ++i) yp[i] = std::tanh(xv[i]);
  Tensor yv = y;
  return t.record(std::move(y), {x}, [=](Tape& tp, const Tensor& gy) {
    Tensor g(yv.shape());
    double* gp = g.mutable_data();
    for (int64_t i = 0; i < gy.size(); ++i) gp[i] = gy[i] * (1.0 - yv[i] * yv[i]);
    tp.accumulate(x, std::move(g));
  });
}

Var softmax_cross_entropy(Var logits, const std::vector<int>& labels) {
  Tape& t = tape_of(logits);
  Tensor lv = t.value(logits);
  FTNAS_CHECK(lv.ndim() == 2, "logits must be [N,K]");
  const int64_t N = lv.dim(0), K = lv.dim(1);
  FTNAS_CHECK(static_cast<int64_t>(labels.size()) == N, "label count mismatch");
  Tensor probs({N, K});
  double* pp = probs.mutable_data();
  double loss = 0.0;
  for (int64_t n = 0; n < N; ++n) {
    FTNAS_CHECK(labels[static_cast<size_t>(n)] >= 0 &&
                    labels[static_cast<size_t>(n)] < K,
                "label " << labels[static_cast<size_t>(n)] << " out of range [0,"
                         << K << ")");
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t k = 0; k < K; ++k) mx = std::max(mx, lv[n * K + k]);
    double z = 0.0;
    for (int64_t k = 0; k < K; ++k) z += std::exp(lv[n * K + k] - mx);
    const double lse = mx + std::log(z);
    for (int64_t k = 0; k < K; ++k) pp[n * K + k] = std::exp(lv[n * K + k] - lse);
    loss += lse - lv[n * K + labels[static_cast<size_t>(n)]];
  }
  loss /= static_cast<double>(N);
  Tensor probs_saved = probs;
  return t.record(Tensor::scalar(loss), {logits},
                  [=](Tape& tp, const Tensor& gy) {
                    Tensor g({N, K});
                    double* gp = g.mutable_data();
                    const double s = gy[0] / static_cast<double>(N);
                    for (int64_t n = 0; n < N; ++n)
                      for (int64_t k = 0; k < K; ++k) {
                        double v = probs_saved[n * K + k];
                        if (k == labels[static_cast<size_t>(n)]) v -= 1.0;
                        gp[n * K + k] = s * v;
                      }
                    tp.accumulate(logits, std::move(g));
                  });
}

}  // namespace ops

GradCheckResult grad_check(const std::function<Var(Tape&, Var)>& f,
                           const Tensor& x, double eps, double tol,
                           int64_t coords) {
  GradCheckResult res;
  Tape tape;
  Var in = tape.input(x.clone(), /*requires_grad=*/true);
  Var out = f(tape, in);
  FTNAS_CHECK(tape.value(out).size() == 1, "grad_check needs a scalar function");
  if (!tape.value(out).all_finite()) {
    res.diagnostic = "non-finite function value";
    return res;
  }
  tape.backward(out);
  Tensor adj = tape.has_grad(in) ? tape.grad(in) : Tensor::zeros_like(x);
  if (!adj.all_finite()) {
    res.diagnostic = "non-finite adjoint";
    return res;
  }

  auto eval = [&](const Tensor& xt) {
    Tape t2;
    Var v = f(t2, t2.input(xt.clone(), false));
    return t2.value(v)[0];
  };

  const int64_t n = x.size();
  int64_t step = 1;
  if (coords > 0 && coords < n) step = n / coords;
  double max_rel = 0.0;
  int64_t worst = -1;
  for (int64_t i = 0; i < n; i += step) {
    Tensor xp = x.clone();
    Tensor xm = x.clone();
    xp.mutable_data()[i] += eps;
    xm.mutable_data()[i] -= eps;
    const double fp = eval(xp);
    const double fm = eval(xm);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      res.diagnostic = "non-finite perturbed value at coord " + std::to_string(i);
      return res;
    }
    const double fd = (fp - fm) / (2.0 * eps);
    const double ad = adj[i];
    const double rel =
        std::fabs(ad - fd) / std::max({std::fabs(ad), std::fabs(fd), 1e-3});
    if (rel > max_rel) {
      max_rel = rel;
      worst = i;
    }
  }
  res.max_rel_err = max_rel;
  res.ok = max_rel <= tol;
  if (!res.ok)
    res.diagnostic = "max rel err " + std::to_string(max_rel) + " at coord " +
                     std::to_string(worst);
  return res;
}

}  // namespace ftnas
