#include "dl/nn/tensor.hpp"

#include <cmath>

namespace dl::nn {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) {
    require(d >= 0, "negative dimension");
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  Tensor t;
  t.d_ = std::make_shared<TensorData>();
  t.d_->shape = std::move(shape);
  t.d_->value.assign(static_cast<size_t>(shape_numel(t.d_->shape)), real(0));
  t.d_->requires_grad = requires_grad;
  if (requires_grad) t.d_->ensure_grad();
  return t;
}

Tensor Tensor::full(Shape shape, real v) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.values().begin(), t.values().end(), v);
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<real> values, bool requires_grad) {
  Tensor t;
  t.d_ = std::make_shared<TensorData>();
  require(shape_numel(shape) == static_cast<int64_t>(values.size()),
          "from(): value count does not match shape " + shape_str(shape));
  t.d_->shape = std::move(shape);
  t.d_->value = std::move(values);
  t.d_->requires_grad = requires_grad;
  if (requires_grad) t.d_->ensure_grad();
  return t;
}

Tensor Tensor::scalar(real v) { return from({1}, {v}); }

namespace {
thread_local Tape* g_tape = nullptr;
bool g_finite_checks = false;
}  // namespace

Tape::Tape() {
  prev_ = g_tape;
  require(prev_ == nullptr, "nested tapes are not supported");
  g_tape = this;
}

Tape::~Tape() { g_tape = prev_; }

Tape* Tape::current() { return g_tape; }

void Tape::backward(Tensor loss) {
  require(loss.numel() == 1, "backward() expects a scalar loss");
  require(loss.requires_grad() || !entries_.empty(), "backward() on a graph-free tensor");
  loss.ensure_grad();
  loss.grads()[0] = real(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
}

void set_finite_checks(bool on) { g_finite_checks = on; }
bool finite_checks() { return g_finite_checks; }

void check_finite(const Tensor& t, const char* op) {
  if (!g_finite_checks) return;
  for (real v : t.values())
    if (!std::isfinite(static_cast<double>(v)))
      throw VerifyError(std::string("non-finite value produced by op ") + op);
}

}  // namespace dl::nn
