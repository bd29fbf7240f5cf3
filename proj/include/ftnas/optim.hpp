#pragma once

#include <string>
#include <unordered_map>

#include "ftnas/tensor.hpp"

namespace ftnas {

// Cosine annealing from base_lr down to 0 over total epochs.
double cosine_lr(double base_lr, double epoch, double total_epochs);

// SGD with classic momentum and decoupled-by-name state. Parameters are
// updated in place (single-writer contract).
class SgdMomentum {
 public:
  SgdMomentum(double momentum, double weight_decay)
      : momentum_(momentum), weight_decay_(weight_decay) {}

  void step(const std::string& name, Tensor& param, const Tensor& grad,
            double lr);

 private:
  double momentum_;
  double weight_decay_;
  std::unordered_map<std::string, Tensor> velocity_;
};

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::string& name, Tensor& param, const Tensor& grad);
  double lr() const { return lr_; }

 private:
  struct State {
    Tensor m;
    Tensor v;
    int64_t t = 0;
  };
  double lr_, beta1_, beta2_, eps_;
  std::unordered_map<std::string, State> state_;
};

}  // namespace ftnas
