#include "ftnas/optim.hpp"

#include <cmath>
#include <numbers>

#include "ftnas/check.hpp"

namespace ftnas {

double cosine_lr(double base_lr, double epoch, double total_epochs) {
  if (total_epochs <= 0.0) return base_lr;
  double t = std::min(std::max(epoch / total_epochs, 0.0), 1.0);
  return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * t));
}

void SgdMomentum::step(const std::string& name, Tensor& param,
                       const Tensor& grad, double lr) {
  FTNAS_CHECK(param.same_shape(grad), "sgd grad shape mismatch for " << name);
  auto it = velocity_.find(name);
  if (it == velocity_.end())
    it = velocity_.emplace(name, Tensor::zeros_like(param)).first;
  Tensor& vel = it->second;
  double* v = vel.mutable_data();
  double* p = param.mutable_data();
  const double* g = grad.data();
  const int64_t n = param.size();
  for (int64_t i = 0; i < n; ++i) {
    v[i] = momentum_ * v[i] + g[i] + weight_decay_ * p[i];
    p[i] -= lr * v[i];
  }
}

void Adam::step(const std::string& name, Tensor& param, const Tensor& grad) {
  FTNAS_CHECK(param.same_shape(grad), "adam grad shape mismatch for " << name);
  auto it = state_.find(name);
  if (it == state_.end())
    it = state_
             .emplace(name, State{Tensor::zeros_like(param),
                                  Tensor::zeros_like(param), 0})
             .first;
  State& s = it->second;
  s.t += 1;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(s.t));
  double* m = s.m.mutable_data();
  double* v = s.v.mutable_data();
  double* p = param.mutable_data();
  const double* g = grad.data();
  const int64_t n = param.size();
  for (int64_t i = 0; i < n; ++i) {
    m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
    v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
    p[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
  }
}

}  // namespace ftnas
