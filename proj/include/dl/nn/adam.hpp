#pragma once

#include "dl/nn/tensor.hpp"

#include <cmath>
#include <vector>

namespace dl::nn {

// Adam with bias correction. Gradients are accumulated by the tape across any
// number of backward passes; call step() once per batch and zero_grad() after.
class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, real lr, real beta1 = real(0.9),
                real beta2 = real(0.999), real eps = real(1e-8))
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].numel(), 0);
      v_[i].assign(params_[i].numel(), 0);
    }
  }

  void step() {
    ++t_;
    const real bc1 = real(1) - std::pow(beta1_, real(t_));
    const real bc2 = real(1) - std::pow(beta2_, real(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& val = params_[i].values();
      auto& grad = params_[i].grads();
      auto& m = m_[i];
      auto& v = v_[i];
      for (size_t j = 0; j < val.size(); ++j) {
        const real g = grad[j];
        m[j] = beta1_ * m[j] + (real(1) - beta1_) * g;
        v[j] = beta2_ * v[j] + (real(1) - beta2_) * g * g;
        val[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
      }
    }
  }

  void zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
  }

  void set_lr(real lr) { lr_ = lr; }
  real lr() const { return lr_; }
  long long steps() const { return t_; }

  // Raw state access for checkpointing.
  std::vector<std::vector<real>>& moment1() { return m_; }
  std::vector<std::vector<real>>& moment2() { return v_; }
  void set_steps(long long t) { t_ = t; }

 private:
  std::vector<Tensor> params_;
  real lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<real>> m_, v_;
};

}  // namespace dl::nn
