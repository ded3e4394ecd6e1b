#include "dl/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace dl::nn {

GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                           double eps) {
  for (Tensor& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  std::vector<std::vector<real>> analytic;
  {
    Tape tape;
    Tensor loss = f();
    require(loss.numel() == 1, "grad_check: objective must be scalar");
    tape.backward(loss);
  }
  for (Tensor& t : inputs) analytic.push_back(t.grads());

  GradCheckReport rep;
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    auto& val = inputs[ti].values();
    for (size_t j = 0; j < val.size(); ++j) {
      const real keep = val[j];
      val[j] = keep + real(eps);
      const double up = f().item();
      val[j] = keep - real(eps);
      const double dn = f().item();
      val[j] = keep;
      const double fd = (up - dn) / (2 * eps);
      const double ad = analytic[ti][j];
      const double rel = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst = "input" + std::to_string(ti) + "[" + std::to_string(j) + "]";
      }
    }
  }
  return rep;
}

}  // namespace dl::nn
