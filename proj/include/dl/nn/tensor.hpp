#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dl/common.hpp"

namespace dl::nn {

// Scalar type of the tensor core. Tests and the verification suite assume
// double; -DDL_SCALAR_FLOAT switches training builds to 32-bit.
#ifdef DL_SCALAR_FLOAT
using real = float;
inline constexpr const char* kPrecision = "f32";
#else
using real = double;
inline constexpr const char* kPrecision = "f64";
#endif

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorData {
  Shape shape;
  std::vector<real> value;
  std::vector<real> grad;  // allocated on demand, same shape as value
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), real(0));
  }
};

// Shared-storage handle. Copying a Tensor aliases the same buffer, which is
// what the tape relies on to accumulate gradients.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, real v);
  static Tensor from(Shape shape, std::vector<real> values, bool requires_grad = false);
  static Tensor scalar(real v);

  bool defined() const { return static_cast<bool>(d_); }
  const Shape& shape() const { return d_->shape; }
  int ndim() const { return static_cast<int>(d_->shape.size()); }
  int dim(int i) const { return d_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(d_->value.size()); }

  std::vector<real>& values() { return d_->value; }
  const std::vector<real>& values() const { return d_->value; }
  std::vector<real>& grads() { return d_->grad; }
  const std::vector<real>& grads() const { return d_->grad; }
  real* data() { return d_->value.data(); }
  const real* data() const { return d_->value.data(); }
  real* grad_data() { return d_->grad.data(); }

  real item() const {
    require(numel() == 1, "item() on non-scalar tensor " + shape_str(shape()));
    return d_->value[0];
  }

  bool requires_grad() const { return d_->requires_grad; }
  Tensor& set_requires_grad(bool b) {
    d_->requires_grad = b;
    if (b) d_->ensure_grad();
    return *this;
  }
  void ensure_grad() { d_->ensure_grad(); }
  void zero_grad() {
    d_->ensure_grad();
    std::fill(d_->grad.begin(), d_->grad.end(), real(0));
  }

  TensorData* raw() const { return d_.get(); }

 private:
  std::shared_ptr<TensorData> d_;
};

// Reverse-mode tape. Constructing one starts recording on this thread; ops
// executed while it is alive append their backward closures. backward()
// replays them in reverse (recording order is a topological order).
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void push(std::function<void()> fn) { entries_.push_back(std::move(fn)); }
  size_t size() const { return entries_.size(); }

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be scalar.
  void backward(Tensor loss);

  static Tape* current();

 private:
  std::vector<std::function<void()>> entries_;
  Tape* prev_ = nullptr;
};

// When true, every op forward-checks its output for NaN/Inf (used by tests
// and the verification command; off in the training hot loop).
void set_finite_checks(bool on);
bool finite_checks();
void check_finite(const Tensor& t, const char* op);

}  // namespace dl::nn
