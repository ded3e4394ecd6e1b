#pragma once

#include "dl/nn/tensor.hpp"

namespace dl::nn {

// All ops: eager forward; when a Tape is active and any input requires
// gradients, a backward closure is recorded that accumulates exact analytic
// gradients into the inputs.

// (m,k)x(k,n) -> (m,n), or (m,k)x(k) -> (m)
Tensor matmul(const Tensor& a, const Tensor& b);

// y = x * W^T + bias. x: {n,in} or {in}; W: {out,in}; bias: {out}.
Tensor affine(const Tensor& x, const Tensor& W, const Tensor& bias);

// Elementwise; shapes must match, or one operand may be a single-element
// tensor which broadcasts.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, real s);
Tensor add_const(const Tensor& a, real c);
Tensor exp(const Tensor& a);
Tensor clamp(const Tensor& a, real lo, real hi);  // gradient zero outside [lo,hi]
Tensor relu(const Tensor& a);
Tensor relu6(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);

// 1D (axis 0) or 2D (axis 1, per row).
Tensor softmax(const Tensor& a, int axis = -1);

// Concatenate along axis; 1D axis 0, or 2D axis 0/1.
Tensor concat(const std::vector<Tensor>& ts, int axis);

// Contiguous slice [start, start+len) along axis of a 1D or 2D tensor.
Tensor slice(const Tensor& a, int axis, int start, int len);

Tensor reshape(const Tensor& a, Shape shape);

Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor sum_axis(const Tensor& a, int axis);   // 2D only
Tensor mean_axis(const Tensor& a, int axis);  // 2D only

// Global average pool: {n,c,h,w} -> {n,c}.
Tensor spatial_mean(const Tensor& a);

// Scales row i of x {n,c} by s[i]; s: {n}.
Tensor row_scale(const Tensor& x, const Tensor& s);

// Cross-correlation. x: {c_in,h,w} or {n,c_in,h,w}; w: {c_out,c_in/groups,kh,kw};
// bias: {c_out} (may be undefined for none). Output spatial dims
// floor((H + 2*pad - k)/stride) + 1. groups == c_in gives depthwise.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad,
              int groups = 1);

}  // namespace dl::nn
