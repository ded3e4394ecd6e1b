#pragma once

#include "dl/nn/tensor.hpp"
#include "dl/rng.hpp"

#include <cmath>

namespace dl::nn {

inline real fanin_bound(int fan_in) { return real(1) / std::sqrt(real(fan_in)); }

// Uniform(-bound, bound) init, marked trainable.
inline Tensor uniform_init(const Shape& shape, real bound, Rng& rng) {
  Tensor t = Tensor::zeros(shape);
  for (real& v : t.values()) v = static_cast<real>(rng.uniform(-bound, bound));
  t.set_requires_grad(true);
  return t;
}

inline Tensor zeros_init(const Shape& shape) {
  Tensor t = Tensor::zeros(shape);
  t.set_requires_grad(true);
  return t;
}

}  // namespace dl::nn
