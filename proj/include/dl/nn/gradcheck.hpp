#pragma once

#include "dl/nn/tensor.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dl::nn {

struct GradCheckReport {
  double max_rel_err = 0;
  std::string worst;  // "tensor_index[element]" of the largest discrepancy
};

// Compares tape gradients of a scalar-valued function against central finite
// differences over every element of `inputs`. The relative error metric is
// |ad - fd| / max(1, |ad|, |fd|).
GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                           double eps = 1e-5);

}  // namespace dl::nn
