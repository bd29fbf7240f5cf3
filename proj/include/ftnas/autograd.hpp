#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ftnas/kernels.hpp"
#include "ftnas/quant.hpp"
#include "ftnas/tensor.hpp"

namespace ftnas {

class Tape;

// Handle into a tape node. Cheap to copy; only valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool defined() const { return tape != nullptr; }
};

// Reverse-mode tape. Records one forward pass; backward() replays the
// recorded closures in reverse creation order and accumulates adjoints.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& gy)>;

  Var input(Tensor value, bool requires_grad = false);
  Var param(const std::string& name, Tensor value);

  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn fn);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  bool has_grad(Var v) const;
  bool needs_grad(Var v) const;

  void accumulate(Var v, Tensor g);
  void backward(Var loss);

  // Named parameters touched by this tape, in registration order.
  const std::vector<std::pair<std::string, Var>>& params() const {
    return params_;
  }

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, Var>> params_;
  std::unordered_map<std::string, int> param_ids_;
};

namespace ops {

Var conv2d(Var x, Var w, Var b, const ConvGeom& g);  // b may be undefined
Var relu(Var x);
Var maxpool3x3(Var x, int64_t stride);
Var avgpool3x3(Var x, int64_t stride);
Var global_avgpool(Var x);
Var linear(Var x, Var w, Var b);
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var axpby(Var a, Var b, double alpha, double beta);
Var sum(Var a);

// y = batchnorm(x) with batch statistics; stats_out (optional) receives the
// batch mean/invstd for running-average updates.
Var batchnorm_train(Var x, Var gamma, Var beta, double eps,
                    BnStats* stats_out = nullptr);

// Forward replaces values, backward passes gradients straight through.
Var quantize_ste(Var x, const QuantSpec& spec);
Var replace_ste(Var x, Tensor new_value);
// Same, but gradients are gated elementwise (0 blocks, 1 passes).
Var replace_gated(Var x, Tensor new_value, Tensor gate);
// Adds a constant perturbation; gradient is the identity.
Var add_constant(Var x, const Tensor& c);

// Masked log-softmax over the last axis of a [1, K] row; entries at index
// >= valid are excluded from the distribution.
Var log_softmax_row(Var logits, int valid);
Var select_element(Var row, int64_t index);
// Entropy -sum(exp(ls) * ls) of a log-softmax row.
Var entropy_from_logsoft(Var logsoft);

Var slice_cols(Var x, int64_t lo, int64_t hi);  // on [1, K] rows
Var sigmoid(Var x);
Var tanh(Var x);

// Mean cross-entropy of logits [N, K] against integer labels.
Var softmax_cross_entropy(Var logits, const std::vector<int>& labels);

}  // namespace ops

struct GradCheckResult {
  bool ok = false;
  double max_rel_err = 0.0;
  std::string diagnostic;
};

// Compares tape adjoints of a scalar function against central finite
// differences. coords limits how many input coordinates are probed
// (<= 0 means all).
GradCheckResult grad_check(const std::function<Var(Tape&, Var)>& f,
                           const Tensor& x, double eps, double tol,
                           int64_t coords = -1);

}  // namespace ftnas
