#include "dl/nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <utility>

namespace dl::nn {
namespace {

using Mat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using CMatMap = Eigen::Map<const Mat>;
using VecMap = Eigen::Map<Eigen::Matrix<real, Eigen::Dynamic, 1>>;
using CVecMap = Eigen::Map<const Eigen::Matrix<real, Eigen::Dynamic, 1>>;

bool tracked(std::initializer_list<const Tensor*> inputs) {
  if (!Tape::current()) return false;
  for (const Tensor* t : inputs)
    if (t->defined() && t->requires_grad()) return true;
  return false;
}

// Marks `out` as a graph node and makes sure every differentiable input has a
// gradient buffer the closure can accumulate into.
void prepare(Tensor& out, std::initializer_list<Tensor*> inputs) {
  out.set_requires_grad(true);
  out.ensure_grad();
  for (Tensor* t : inputs)
    if (t->defined() && t->requires_grad()) t->ensure_grad();
}

void check_shape_match(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(),
          std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
              shape_str(b.shape()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 2, "matmul: lhs must be 2D, got " + shape_str(a.shape()));
  const int m = a.shape()[0], k = a.shape()[1];
  const bool vec = b.ndim() == 1;
  const int n = vec ? 1 : b.shape()[1];
  require((vec ? b.shape()[0] : b.shape()[0]) == k,
          "matmul: inner dim mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  Tensor out = Tensor::zeros(vec ? Shape{m} : Shape{m, n});
  {
    CMatMap A(a.values().data(), m, k);
    CMatMap B(b.values().data(), k, n);
    MatMap C(out.values().data(), m, n);
    C.noalias() = A * B;
  }
  if (tracked({&a, &b})) {
    Tensor ta = a, tb = b;
    prepare(out, {&ta, &tb});
    Tape::current()->push([ta, tb, out, m, k, n]() mutable {
      CMatMap A(ta.values().data(), m, k);
      CMatMap B(tb.values().data(), k, n);
      CMatMap G(out.grads().data(), m, n);
      if (ta.requires_grad()) {
        MatMap dA(ta.grads().data(), m, k);
        dA.noalias() += G * B.transpose();
      }
      if (tb.requires_grad()) {
        MatMap dB(tb.grads().data(), k, n);
        dB.noalias() += A.transpose() * G;
      }
    });
  }
  check_finite(out, "matmul");
  return out;
}

Tensor affine(const Tensor& x, const Tensor& W, const Tensor& bias) {
  require(W.ndim() == 2, "affine: W must be 2D, got " + shape_str(W.shape()));
  const int outd = W.shape()[0], ind = W.shape()[1];
  require(bias.ndim() == 1 && bias.shape()[0] == outd,
          "affine: bias shape " + shape_str(bias.shape()) + " does not match W rows");
  const bool vec = x.ndim() == 1;
  const int n = vec ? 1 : x.shape()[0];
  require((vec ? x.shape()[0] : x.shape()[1]) == ind,
          "affine: input width " + shape_str(x.shape()) + " does not match W cols");
  Tensor out = Tensor::zeros(vec ? Shape{outd} : Shape{n, outd});
  {
    CMatMap X(x.values().data(), n, ind);
    CMatMap Wm(W.values().data(), outd, ind);
    CVecMap b(bias.values().data(), outd);
    MatMap Y(out.values().data(), n, outd);
    Y.noalias() = X * Wm.transpose();
    Y.rowwise() += b.transpose();
  }
  if (tracked({&x, &W, &bias})) {
    Tensor tx = x, tw = W, tb = bias;
    prepare(out, {&tx, &tw, &tb});
    Tape::current()->push([tx, tw, tb, out, n, ind, outd]() mutable {
      CMatMap X(tx.values().data(), n, ind);
      CMatMap Wm(tw.values().data(), outd, ind);
      CMatMap G(out.grads().data(), n, outd);
      if (tx.requires_grad()) {
        MatMap dX(tx.grads().data(), n, ind);
        dX.noalias() += G * Wm;
      }
      if (tw.requires_grad()) {
        MatMap dW(tw.grads().data(), outd, ind);
        dW.noalias() += G.transpose() * X;
      }
      if (tb.requires_grad()) {
        VecMap db(tb.grads().data(), outd);
        db.noalias() += G.colwise().sum().transpose();
      }
    });
  }
  check_finite(out, "affine");
  return out;
}

namespace {

enum class Ew { Add, Sub, Mul };

Tensor elementwise(const Tensor& a, const Tensor& b, Ew op, const char* name) {
  const bool bs = b.numel() == 1 && a.numel() != 1;
  const bool as = a.numel() == 1 && b.numel() != 1;
  if (!as && !bs) check_shape_match(a, b, name);
  const Tensor& big = as ? b : a;
  Tensor out = Tensor::zeros(big.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (size_t i = 0; i < ov.size(); ++i) {
    const real x = as ? av[0] : av[i];
    const real y = bs ? bv[0] : bv[i];
    ov[i] = op == Ew::Add ? x + y : op == Ew::Sub ? x - y : x * y;
  }
  if (tracked({&a, &b})) {
    Tensor ta = a, tb = b;
    prepare(out, {&ta, &tb});
    Tape::current()->push([ta, tb, out, op, as, bs]() mutable {
      const auto& og = out.grads();
      const auto& av = ta.values();
      const auto& bv = tb.values();
      if (ta.requires_grad()) {
        auto& ag = ta.grads();
        for (size_t i = 0; i < og.size(); ++i) {
          const real g = op == Ew::Mul ? og[i] * (bs ? bv[0] : bv[i]) : og[i];
          ag[as ? 0 : i] += g;
        }
      }
      if (tb.requires_grad()) {
        auto& bg = tb.grads();
        for (size_t i = 0; i < og.size(); ++i) {
          real g = og[i];
          if (op == Ew::Sub) g = -g;
          if (op == Ew::Mul) g = og[i] * (as ? av[0] : av[i]);
          bg[bs ? 0 : i] += g;
        }
      }
    });
  }
  check_finite(out, name);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, Ew::Add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, Ew::Sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, Ew::Mul, "mul"); }

Tensor scale(const Tensor& a, real s) {
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] * s;
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out, s]() mutable {
      const auto& og = out.grads();
      auto& ig = in.grads();
      for (size_t i = 0; i < og.size(); ++i) ig[i] += og[i] * s;
    });
  }
  check_finite(out, "scale");
  return out;
}

Tensor add_const(const Tensor& a, real c) {
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + c;
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out]() mutable {
      const auto& og = out.grads();
      auto& ig = in.grads();
      for (size_t i = 0; i < og.size(); ++i) ig[i] += og[i];
    });
  }
  return out;
}

Tensor exp(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (size_t i = 0; i < av.size(); ++i) ov[i] = std::exp(av[i]);
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out]() mutable {
      const auto& og = out.grads();
      const auto& ov = out.values();
      auto& ig = in.grads();
      for (size_t i = 0; i < og.size(); ++i) ig[i] += og[i] * ov[i];
    });
  }
  check_finite(out, "exp");
  return out;
}

Tensor clamp(const Tensor& a, real lo, real hi) {
  require(lo <= hi, "clamp: lo > hi");
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (size_t i = 0; i < av.size(); ++i) ov[i] = std::min(hi, std::max(lo, av[i]));
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out, lo, hi]() mutable {
      const auto& og = out.grads();
      const auto& iv = in.values();
      auto& ig = in.grads();
      for (size_t i = 0; i < og.size(); ++i)
        if (iv[i] >= lo && iv[i] <= hi) ig[i] += og[i];
    });
  }
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] > 0 ? av[i] : real(0);
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out]() mutable {
      const auto& og = out.grads();
      const auto& iv = in.values();
      auto& ig = in.grads();
      for (size_t i = 0; i < og.size(); ++i)
        if (iv[i] > 0) ig[i] += og[i];
    });
  }
  return out;
}

Tensor relu6(const Tensor& a) { return clamp(a, 0, 6); }

Tensor sigmoid(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (size_t i = 0; i < av.size(); ++i) ov[i] = real(1) / (real(1) + std::exp(-av[i]));
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out]() mutable {
      const auto& og = out.grads();
      const auto& ov = out.values();
      auto& ig = in.grads();
      for (size_t i = 0; i < og.size(); ++i) ig[i] += og[i] * ov[i] * (real(1) - ov[i]);
    });
  }
  check_finite(out, "sigmoid");
  return out;
}

Tensor tanh(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (size_t i = 0; i < av.size(); ++i) ov[i] = std::tanh(av[i]);
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out]() mutable {
      const auto& og = out.grads();
      const auto& ov = out.values();
      auto& ig = in.grads();
      for (size_t i = 0; i < og.size(); ++i) ig[i] += og[i] * (real(1) - ov[i] * ov[i]);
    });
  }
  check_finite(out, "tanh");
  return out;
}

Tensor softmax(const Tensor& a, int axis) {
  if (axis < 0) axis = a.ndim() - 1;
  require((a.ndim() == 1 && axis == 0) || (a.ndim() == 2 && axis == 1),
          "softmax: supported forms are 1D axis 0 and 2D axis 1");
  const int rows = a.ndim() == 1 ? 1 : a.shape()[0];
  const int cols = a.ndim() == 1 ? a.shape()[0] : a.shape()[1];
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (int r = 0; r < rows; ++r) {
    const real* x = av.data() + size_t(r) * cols;
    real* y = ov.data() + size_t(r) * cols;
    real mx = x[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, x[c]);
    real z = 0;
    for (int c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - mx);
      z += y[c];
    }
    for (int c = 0; c < cols; ++c) y[c] /= z;
  }
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out, rows, cols]() mutable {
      const auto& og = out.grads();
      const auto& ov = out.values();
      auto& ig = in.grads();
      for (int r = 0; r < rows; ++r) {
        const real* g = og.data() + size_t(r) * cols;
        const real* y = ov.data() + size_t(r) * cols;
        real* d = ig.data() + size_t(r) * cols;
        real dot = 0;
        for (int c = 0; c < cols; ++c) dot += g[c] * y[c];
        for (int c = 0; c < cols; ++c) d[c] += y[c] * (g[c] - dot);
      }
    });
  }
  check_finite(out, "softmax");
  return out;
}

Tensor concat(const std::vector<Tensor>& ts, int axis) {
  require(!ts.empty(), "concat: empty input list");
  const int d = ts[0].ndim();
  require(d == 1 || d == 2, "concat: supports 1D and 2D, got " + shape_str(ts[0].shape()));
  require(axis >= 0 && axis < d, "concat: bad axis");
  Shape oshape = ts[0].shape();
  oshape[axis] = 0;
  for (const Tensor& t : ts) {
    require(t.ndim() == d, "concat: rank mismatch");
    for (int i = 0; i < d; ++i)
      if (i != axis)
        require(t.shape()[i] == ts[0].shape()[i],
                "concat: shape mismatch " + shape_str(t.shape()));
    oshape[axis] += t.shape()[axis];
  }
  Tensor out = Tensor::zeros(oshape);
  auto& ov = out.values();
  if (d == 1 || axis == 0) {
    size_t off = 0;
    for (const Tensor& t : ts) {
      std::copy(t.values().begin(), t.values().end(), ov.begin() + off);
      off += t.values().size();
    }
  } else {  // 2D, axis == 1
    const int rows = oshape[0], ocols = oshape[1];
    int coff = 0;
    for (const Tensor& t : ts) {
      const int tcols = t.shape()[1];
      const auto& tv = t.values();
      for (int r = 0; r < rows; ++r)
        std::copy(tv.begin() + size_t(r) * tcols, tv.begin() + size_t(r + 1) * tcols,
                  ov.begin() + size_t(r) * ocols + coff);
      coff += tcols;
    }
  }
  bool any = false;
  if (Tape::current())
    for (const Tensor& t : ts)
      if (t.requires_grad()) any = true;
  if (any) {
    std::vector<Tensor> ins = ts;
    out.set_requires_grad(true);
    out.ensure_grad();
    for (Tensor& t : ins)
      if (t.requires_grad()) t.ensure_grad();
    Tape::current()->push([ins, out, d, axis]() mutable {
      const auto& og = out.grads();
      if (d == 1 || axis == 0) {
        size_t off = 0;
        for (Tensor& t : ins) {
          const size_t n = t.numel();
          if (t.requires_grad()) {
            auto& tg = t.grads();
            for (size_t i = 0; i < n; ++i) tg[i] += og[off + i];
          }
          off += n;
        }
      } else {
        const int rows = out.shape()[0], ocols = out.shape()[1];
        int coff = 0;
        for (Tensor& t : ins) {
          const int tcols = t.shape()[1];
          if (t.requires_grad()) {
            auto& tg = t.grads();
            for (int r = 0; r < rows; ++r)
              for (int c = 0; c < tcols; ++c)
                tg[size_t(r) * tcols + c] += og[size_t(r) * ocols + coff + c];
          }
          coff += tcols;
        }
      }
    });
  }
  return out;
}

Tensor slice(const Tensor& a, int axis, int start, int len) {
  const int d = a.ndim();
  require(d == 1 || d == 2, "slice: supports 1D and 2D, got " + shape_str(a.shape()));
  require(axis >= 0 && axis < d, "slice: bad axis");
  require(start >= 0 && len > 0 && start + len <= a.shape()[axis],
          "slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
              ") out of bounds for " + shape_str(a.shape()));
  Shape oshape = a.shape();
  oshape[axis] = len;
  Tensor out = Tensor::zeros(oshape);
  const auto& av = a.values();
  auto& ov = out.values();
  const int rows = d == 2 ? a.shape()[0] : 1;
  const int cols = d == 2 ? a.shape()[1] : a.shape()[0];
  if (d == 1 || axis == 1) {
    const int orows = d == 2 ? rows : 1;
    for (int r = 0; r < orows; ++r)
      std::copy(av.begin() + size_t(r) * cols + start,
                av.begin() + size_t(r) * cols + start + len, ov.begin() + size_t(r) * len);
  } else {  // 2D rows
    std::copy(av.begin() + size_t(start) * cols, av.begin() + size_t(start + len) * cols,
              ov.begin());
  }
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out, d, axis, start, len]() mutable {
      const auto& og = out.grads();
      auto& ig = in.grads();
      const int cols = d == 2 ? in.shape()[1] : in.shape()[0];
      if (d == 1 || axis == 1) {
        const int orows = d == 2 ? in.shape()[0] : 1;
        for (int r = 0; r < orows; ++r)
          for (int c = 0; c < len; ++c)
            ig[size_t(r) * cols + start + c] += og[size_t(r) * len + c];
      } else {
        for (size_t i = 0; i < og.size(); ++i) ig[size_t(start) * cols + i] += og[i];
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  require(shape_numel(shape) == static_cast<long long>(a.numel()),
          "reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  Tensor out = Tensor::zeros(shape);
  out.values() = a.values();
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out]() mutable {
      const auto& og = out.grads();
      auto& ig = in.grads();
      for (size_t i = 0; i < og.size(); ++i) ig[i] += og[i];
    });
  }
  return out;
}

Tensor sum_all(const Tensor& a) {
  Tensor out = Tensor::zeros({1});
  real s = 0;
  for (real v : a.values()) s += v;
  out.values()[0] = s;
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out]() mutable {
      const real g = out.grads()[0];
      auto& ig = in.grads();
      for (real& v : ig) v += g;
    });
  }
  check_finite(out, "sum_all");
  return out;
}

Tensor mean_all(const Tensor& a) {
  const real inv = real(1) / real(a.numel());
  return scale(sum_all(a), inv);
}

Tensor sum_axis(const Tensor& a, int axis) {
  require(a.ndim() == 2, "sum_axis: expects 2D, got " + shape_str(a.shape()));
  require(axis == 0 || axis == 1, "sum_axis: bad axis");
  const int rows = a.shape()[0], cols = a.shape()[1];
  Tensor out = Tensor::zeros({axis == 0 ? cols : rows});
  const auto& av = a.values();
  auto& ov = out.values();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) ov[axis == 0 ? c : r] += av[size_t(r) * cols + c];
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out, rows, cols, axis]() mutable {
      const auto& og = out.grads();
      auto& ig = in.grads();
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) ig[size_t(r) * cols + c] += og[axis == 0 ? c : r];
    });
  }
  check_finite(out, "sum_axis");
  return out;
}

Tensor mean_axis(const Tensor& a, int axis) {
  require(a.ndim() == 2, "mean_axis: expects 2D, got " + shape_str(a.shape()));
  const real inv = real(1) / real(a.shape()[axis == 0 ? 0 : 1]);
  return scale(sum_axis(a, axis), inv);
}

Tensor spatial_mean(const Tensor& a) {
  require(a.ndim() == 4, "spatial_mean: expects {n,c,h,w}, got " + shape_str(a.shape()));
  const int n = a.shape()[0], c = a.shape()[1], h = a.shape()[2], w = a.shape()[3];
  const size_t hw = size_t(h) * w;
  const real inv = real(1) / real(hw);
  Tensor out = Tensor::zeros({n, c});
  const auto& av = a.values();
  auto& ov = out.values();
  for (int i = 0; i < n * c; ++i) {
    real s = 0;
    const real* p = av.data() + size_t(i) * hw;
    for (size_t j = 0; j < hw; ++j) s += p[j];
    ov[i] = s * inv;
  }
  if (tracked({&a})) {
    Tensor in = a;
    prepare(out, {&in});
    Tape::current()->push([in, out, n, c, hw, inv]() mutable {
      const auto& og = out.grads();
      auto& ig = in.grads();
      for (int i = 0; i < n * c; ++i) {
        const real g = og[i] * inv;
        real* p = ig.data() + size_t(i) * hw;
        for (size_t j = 0; j < hw; ++j) p[j] += g;
      }
    });
  }
  check_finite(out, "spatial_mean");
  return out;
}

Tensor row_scale(const Tensor& x, const Tensor& s) {
  require(x.ndim() == 2 && s.ndim() == 1 && s.shape()[0] == x.shape()[0],
          "row_scale: want {n,c} x {n}, got " + shape_str(x.shape()) + " x " +
              shape_str(s.shape()));
  const int n = x.shape()[0], c = x.shape()[1];
  Tensor out = Tensor::zeros({n, c});
  {
    const auto& xv = x.values();
    const auto& sv = s.values();
    auto& ov = out.values();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) ov[size_t(i) * c + j] = xv[size_t(i) * c + j] * sv[i];
  }
  if (tracked({&x, &s})) {
    Tensor tx = x, ts = s;
    prepare(out, {&tx, &ts});
    Tape::current()->push([tx, ts, out, n, c]() mutable {
      const auto& og = out.grads();
      for (int i = 0; i < n; ++i) {
        const size_t row = size_t(i) * c;
        if (tx.requires_grad()) {
          const real si = ts.values()[i];
          for (int j = 0; j < c; ++j) tx.grads()[row + j] += og[row + j] * si;
        }
        if (ts.requires_grad()) {
          real acc = 0;
          for (int j = 0; j < c; ++j) acc += og[row + j] * tx.values()[row + j];
          ts.grads()[i] += acc;
        }
      }
    });
  }
  check_finite(out, "row_scale");
  return out;
}

}  // namespace dl::nn
