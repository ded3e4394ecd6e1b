#include "dl/nn/ops.hpp"

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace dl::nn {
namespace {

using Mat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using CMatMap = Eigen::Map<const Mat>;

struct ConvDims {
  int n, cin, h, w;
  int cout, cpg, kh, kw;  // cpg = in channels per group
  int stride, pad, groups;
  int oh, ow;
};

void im2col(const real* x, const ConvDims& d, real* col) {
  // col is {cin*kh*kw, oh*ow}
  const int ohw = d.oh * d.ow;
  for (int c = 0; c < d.cin; ++c) {
    const real* xc = x + size_t(c) * d.h * d.w;
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj) {
        real* row = col + (size_t(c) * d.kh * d.kw + size_t(ki) * d.kw + kj) * ohw;
        for (int oy = 0; oy < d.oh; ++oy) {
          const int iy = oy * d.stride - d.pad + ki;
          if (iy < 0 || iy >= d.h) {
            for (int ox = 0; ox < d.ow; ++ox) row[oy * d.ow + ox] = 0;
            continue;
          }
          for (int ox = 0; ox < d.ow; ++ox) {
            const int ix = ox * d.stride - d.pad + kj;
            row[oy * d.ow + ox] = (ix >= 0 && ix < d.w) ? xc[size_t(iy) * d.w + ix] : real(0);
          }
        }
      }
    }
  }
}

void col2im_add(const real* col, const ConvDims& d, real* dx) {
  const int ohw = d.oh * d.ow;
  for (int c = 0; c < d.cin; ++c) {
    real* xc = dx + size_t(c) * d.h * d.w;
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj) {
        const real* row = col + (size_t(c) * d.kh * d.kw + size_t(ki) * d.kw + kj) * ohw;
        for (int oy = 0; oy < d.oh; ++oy) {
          const int iy = oy * d.stride - d.pad + ki;
          if (iy < 0 || iy >= d.h) continue;
          for (int ox = 0; ox < d.ow; ++ox) {
            const int ix = ox * d.stride - d.pad + kj;
            if (ix >= 0 && ix < d.w) xc[size_t(iy) * d.w + ix] += row[oy * d.ow + ox];
          }
        }
      }
    }
  }
}

void depthwise_forward(const real* x, const real* w, const ConvDims& d, real* y) {
  const int mult = d.cout / d.groups;  // output channels per input channel
  for (int c = 0; c < d.cin; ++c) {
    const real* xc = x + size_t(c) * d.h * d.w;
    for (int m = 0; m < mult; ++m) {
      const int co = c * mult + m;
      const real* wc = w + size_t(co) * d.kh * d.kw;
      real* yc = y + size_t(co) * d.oh * d.ow;
      for (int oy = 0; oy < d.oh; ++oy) {
        for (int ox = 0; ox < d.ow; ++ox) {
          real s = 0;
          const int iy0 = oy * d.stride - d.pad;
          const int ix0 = ox * d.stride - d.pad;
          for (int ki = 0; ki < d.kh; ++ki) {
            const int iy = iy0 + ki;
            if (iy < 0 || iy >= d.h) continue;
            for (int kj = 0; kj < d.kw; ++kj) {
              const int ix = ix0 + kj;
              if (ix >= 0 && ix < d.w) s += wc[ki * d.kw + kj] * xc[size_t(iy) * d.w + ix];
            }
          }
          yc[size_t(oy) * d.ow + ox] = s;
        }
      }
    }
  }
}

void depthwise_backward(const real* x, const real* w, const real* gy, const ConvDims& d,
                        real* dx, real* dw) {
  const int mult = d.cout / d.groups;
  for (int c = 0; c < d.cin; ++c) {
    const real* xc = x + size_t(c) * d.h * d.w;
    real* dxc = dx ? dx + size_t(c) * d.h * d.w : nullptr;
    for (int m = 0; m < mult; ++m) {
      const int co = c * mult + m;
      const real* wc = w + size_t(co) * d.kh * d.kw;
      real* dwc = dw ? dw + size_t(co) * d.kh * d.kw : nullptr;
      const real* gc = gy + size_t(co) * d.oh * d.ow;
      for (int oy = 0; oy < d.oh; ++oy) {
        for (int ox = 0; ox < d.ow; ++ox) {
          const real g = gc[size_t(oy) * d.ow + ox];
          if (g == 0) continue;
          const int iy0 = oy * d.stride - d.pad;
          const int ix0 = ox * d.stride - d.pad;
          for (int ki = 0; ki < d.kh; ++ki) {
            const int iy = iy0 + ki;
            if (iy < 0 || iy >= d.h) continue;
            for (int kj = 0; kj < d.kw; ++kj) {
              const int ix = ix0 + kj;
              if (ix < 0 || ix >= d.w) continue;
              if (dwc) dwc[ki * d.kw + kj] += g * xc[size_t(iy) * d.w + ix];
              if (dxc) dxc[size_t(iy) * d.w + ix] += g * wc[ki * d.kw + kj];
            }
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int pad,
              int groups) {
  require(x.ndim() == 3 || x.ndim() == 4,
          "conv2d: input must be {c,h,w} or {n,c,h,w}, got " + shape_str(x.shape()));
  require(w.ndim() == 4, "conv2d: weight must be {cout,cin/g,kh,kw}, got " + shape_str(w.shape()));
  require(stride >= 1 && pad >= 0, "conv2d: bad stride/pad");
  const bool batched = x.ndim() == 4;
  ConvDims d;
  d.n = batched ? x.shape()[0] : 1;
  d.cin = x.shape()[batched ? 1 : 0];
  d.h = x.shape()[batched ? 2 : 1];
  d.w = x.shape()[batched ? 3 : 2];
  d.cout = w.shape()[0];
  d.cpg = w.shape()[1];
  d.kh = w.shape()[2];
  d.kw = w.shape()[3];
  d.stride = stride;
  d.pad = pad;
  d.groups = groups;
  require(groups == 1 || groups == d.cin,
          "conv2d: groups must be 1 or equal to input channels");
  require(d.cpg * groups == d.cin, "conv2d: weight in-channels " + std::to_string(d.cpg) +
                                       " inconsistent with groups");
  require(d.cout % groups == 0, "conv2d: out channels not divisible by groups");
  d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
  d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
  require(d.oh >= 1 && d.ow >= 1, "conv2d: kernel larger than padded input");
  if (bias.defined())
    require(bias.ndim() == 1 && bias.shape()[0] == d.cout,
            "conv2d: bias shape " + shape_str(bias.shape()) + " does not match out channels");

  Tensor out = Tensor::zeros(batched ? Shape{d.n, d.cout, d.oh, d.ow}
                                     : Shape{d.cout, d.oh, d.ow});
  const size_t in_sz = size_t(d.cin) * d.h * d.w;
  const size_t out_sz = size_t(d.cout) * d.oh * d.ow;
  const int ohw = d.oh * d.ow;
  const int krows = d.cin * d.kh * d.kw;
  const bool pointwise = groups == 1 && d.kh == 1 && d.kw == 1 && stride == 1 && pad == 0;
  const bool depthwise = groups > 1;

  // Cached im2col buffers, one per batch item; reused by the backward pass.
  auto cols = std::make_shared<std::vector<std::vector<real>>>();
  if (groups == 1 && !pointwise) cols->resize(d.n);

  for (int n = 0; n < d.n; ++n) {
    const real* xn = x.values().data() + size_t(n) * in_sz;
    real* yn = out.values().data() + size_t(n) * out_sz;
    if (depthwise) {
      depthwise_forward(xn, w.values().data(), d, yn);
    } else if (pointwise) {
      CMatMap Wm(w.values().data(), d.cout, d.cin);
      CMatMap Xm(xn, d.cin, ohw);
      MatMap Ym(yn, d.cout, ohw);
      Ym.noalias() = Wm * Xm;
    } else {
      auto& col = (*cols)[n];
      col.resize(size_t(krows) * ohw);
      im2col(xn, d, col.data());
      CMatMap Wm(w.values().data(), d.cout, krows);
      CMatMap Cm(col.data(), krows, ohw);
      MatMap Ym(yn, d.cout, ohw);
      Ym.noalias() = Wm * Cm;
    }
    if (bias.defined()) {
      const auto& bv = bias.values();
      for (int c = 0; c < d.cout; ++c) {
        real* yc = yn + size_t(c) * ohw;
        for (int i = 0; i < ohw; ++i) yc[i] += bv[c];
      }
    }
  }

  const bool track = Tape::current() && (x.requires_grad() || w.requires_grad() ||
                                         (bias.defined() && bias.requires_grad()));
  if (track) {
    Tensor tx = x, tw = w, tb = bias;
    out.set_requires_grad(true);
    out.ensure_grad();
    if (tx.requires_grad()) tx.ensure_grad();
    if (tw.requires_grad()) tw.ensure_grad();
    if (tb.defined() && tb.requires_grad()) tb.ensure_grad();
    Tape::current()->push([tx, tw, tb, out, d, cols, in_sz, out_sz, ohw, krows, pointwise,
                           depthwise]() mutable {
      const bool need_dx = tx.requires_grad();
      const bool need_dw = tw.requires_grad();
      std::vector<real> dcol;
      for (int n = 0; n < d.n; ++n) {
        const real* xn = tx.values().data() + size_t(n) * in_sz;
        const real* gn = out.grads().data() + size_t(n) * out_sz;
        real* dxn = need_dx ? tx.grads().data() + size_t(n) * in_sz : nullptr;
        if (depthwise) {
          depthwise_backward(xn, tw.values().data(), gn, d, dxn,
                             need_dw ? tw.grads().data() : nullptr);
        } else if (pointwise) {
          CMatMap Wm(tw.values().data(), d.cout, d.cin);
          CMatMap Gm(gn, d.cout, ohw);
          CMatMap Xm(xn, d.cin, ohw);
          if (need_dw) {
            MatMap dW(tw.grads().data(), d.cout, d.cin);
            dW.noalias() += Gm * Xm.transpose();
          }
          if (need_dx) {
            MatMap dX(dxn, d.cin, ohw);
            dX.noalias() += Wm.transpose() * Gm;
          }
        } else {
          const auto& col = (*cols)[n];
          CMatMap Cm(col.data(), krows, ohw);
          CMatMap Gm(gn, d.cout, ohw);
          if (need_dw) {
            MatMap dW(tw.grads().data(), d.cout, krows);
            dW.noalias() += Gm * Cm.transpose();
          }
          if (need_dx) {
            dcol.assign(size_t(krows) * ohw, 0);
            MatMap dCm(dcol.data(), krows, ohw);
            CMatMap Wm(tw.values().data(), d.cout, krows);
            dCm.noalias() = Wm.transpose() * Gm;
            col2im_add(dcol.data(), d, dxn);
          }
        }
        if (tb.defined() && tb.requires_grad()) {
          auto& bg = tb.grads();
          for (int c = 0; c < d.cout; ++c) {
            real s = 0;
            const real* gc = gn + size_t(c) * ohw;
            for (int i = 0; i < ohw; ++i) s += gc[i];
            bg[c] += s;
          }
        }
      }
    });
  }
  check_finite(out, "conv2d");
  return out;
}

}  // namespace dl::nn
