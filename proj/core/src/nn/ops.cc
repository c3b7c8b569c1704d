// core/src/nn/ops.cc

// Copyright 2026  diadfuse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "diadfuse/nn/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "diadfuse/error.h"

namespace diadfuse::nn {
namespace {

int PadFor(int kernel, Padding pad) {
  if (pad == Padding::kValid) return 0;
  if (kernel % 2 == 0) Fail(Errc::ShapeMismatch, "same padding requires an odd kernel");
  return (kernel - 1) / 2;
}

void CheckConv(Eigen::Index length, int kernel, int stride) {
  if (kernel < 1 || stride < 1) Fail(Errc::ShapeMismatch, "kernel and stride must be >= 1");
  if (length < 1) Fail(Errc::ShapeMismatch, "conv1d needs at least one frame");
}

}  // namespace

Eigen::Index ConvOutputLength(Eigen::Index length, int kernel, int stride, Padding pad) {
  CheckConv(length, kernel, stride);
  const Eigen::Index p = PadFor(kernel, pad);
  const Eigen::Index span = length + 2 * p - kernel;
  if (span < 0) {
    Fail(Errc::ShapeMismatch, "sequence of " + std::to_string(length) +
                                  " frames is shorter than kernel " + std::to_string(kernel));
  }
  return span / stride + 1;
}

Tensor2 Im2Col(const Tensor2 &x, int kernel, int stride, Padding pad) {
  const Eigen::Index t_out = ConvOutputLength(x.rows(), kernel, stride, pad);
  const Eigen::Index p = PadFor(kernel, pad);
  const Eigen::Index din = x.cols();
  Tensor2 col = Tensor2::Zero(t_out, kernel * din);
  for (Eigen::Index t = 0; t < t_out; ++t) {
    for (int j = 0; j < kernel; ++j) {
      const Eigen::Index src = t * stride - p + j;
      if (src < 0 || src >= x.rows()) continue;
      col.block(t, j * din, 1, din) = x.row(src);
    }
  }
  return col;
}

void Col2ImAdd(const Tensor2 &dcol, int kernel, int stride, Padding pad, Tensor2 &dx) {
  const Eigen::Index p = PadFor(kernel, pad);
  const Eigen::Index din = dx.cols();
  for (Eigen::Index t = 0; t < dcol.rows(); ++t) {
    for (int j = 0; j < kernel; ++j) {
      const Eigen::Index src = t * stride - p + j;
      if (src < 0 || src >= dx.rows()) continue;
      dx.row(src) += dcol.block(t, j * din, 1, din);
    }
  }
}

Tensor2 Conv1d(const Tensor2 &x, const Tensor2 &weight, int kernel, int stride, Padding pad) {
  if (weight.rows() != kernel * x.cols()) {
    Fail(Errc::ShapeMismatch, "conv1d weight has " + std::to_string(weight.rows()) +
                                  " rows, expected kernel*Din = " +
                                  std::to_string(kernel * x.cols()));
  }
  return Im2Col(x, kernel, stride, pad) * weight;
}

Tensor2 Dense(const Tensor2 &x, const Tensor2 &weight, const Tensor2 &bias) {
  if (x.cols() != weight.rows() || bias.rows() != 1 || bias.cols() != weight.cols()) {
    Fail(Errc::ShapeMismatch, "dense: incompatible shapes");
  }
  Tensor2 y = x * weight;
  y.rowwise() += bias.row(0);
  return y;
}

Tensor2 Relu(const Tensor2 &x) { return x.cwiseMax(0.0); }

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor2 Sigmoid(const Tensor2 &x) {
  return x.unaryExpr([](double v) { return Sigmoid(v); });
}

Tensor2 Softmax(const Tensor2 &x) {
  Tensor2 y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - m).exp();
    y.row(i) /= y.row(i).sum();
  }
  return y;
}

double Bce(double p, double y) {
  const double q = std::clamp(p, kBceEps, 1.0 - kBceEps);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

GruResult GruForward(const Tensor2 &x, const GruWeights &w, const RowVec &h0, GruCache *cache) {
  const Eigen::Index h = w.hidden();
  if (x.rows() < 1) Fail(Errc::ShapeMismatch, "gru needs at least one frame");
  if (w.wx.rows() != x.cols() || w.wx.cols() != 3 * h || w.wh.cols() != 3 * h ||
      w.bx.cols() != 3 * h || w.bh.cols() != 3 * h || h0.cols() != h) {
    Fail(Errc::ShapeMismatch, "gru: weight shapes do not match input/hidden sizes");
  }
  const Eigen::Index steps = x.rows();
  Tensor2 gx = x * w.wx;
  gx.rowwise() += w.bx.row(0);

  GruResult out;
  out.states.resize(steps, h);
  if (cache != nullptr) {
    cache->r.resize(steps, h);
    cache->z.resize(steps, h);
    cache->n.resize(steps, h);
    cache->hn.resize(steps, h);
    cache->h0 = h0;
  }
  RowVec hprev = h0;
  RowVec hh(3 * h);
  for (Eigen::Index t = 0; t < steps; ++t) {
    hh.noalias() = hprev * w.wh;
    hh += w.bh.row(0);
    RowVec r(h), z(h), n(h);
    for (Eigen::Index k = 0; k < h; ++k) {
      r(k) = Sigmoid(gx(t, k) + hh(k));
      z(k) = Sigmoid(gx(t, h + k) + hh(h + k));
      n(k) = std::tanh(gx(t, 2 * h + k) + r(k) * hh(2 * h + k));
    }
    RowVec hnew = (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(hprev);
    out.states.row(t) = hnew;
    if (cache != nullptr) {
      cache->r.row(t) = r;
      cache->z.row(t) = z;
      cache->n.row(t) = n;
      cache->hn.row(t) = hh.segment(2 * h, h);
    }
    hprev = std::move(hnew);
  }
  out.last = hprev;
  return out;
}

GruGrads GruBackward(const Tensor2 &x, const GruWeights &w, const GruResult &fwd,
                     const GruCache &cache, const Tensor2 &dstates) {
  const Eigen::Index h = w.hidden();
  const Eigen::Index steps = x.rows();
  Tensor2 dgx(steps, 3 * h);
  Tensor2 dhh(steps, 3 * h);
  Tensor2 hprevs(steps, h);
  RowVec dnext = RowVec::Zero(h);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const RowVec hprev = t > 0 ? RowVec(fwd.states.row(t - 1)) : cache.h0;
    hprevs.row(t) = hprev;
    const RowVec dh = dstates.row(t) + dnext;
    RowVec dprev(h);
    for (Eigen::Index k = 0; k < h; ++k) {
      const double r = cache.r(t, k), z = cache.z(t, k), n = cache.n(t, k);
      const double dn = dh(k) * (1.0 - z);
      const double dz = dh(k) * (hprev(k) - n);
      const double dn_pre = dn * (1.0 - n * n);
      const double dr_pre = dn_pre * cache.hn(t, k) * r * (1.0 - r);
      const double dz_pre = dz * z * (1.0 - z);
      dgx(t, k) = dr_pre;
      dgx(t, h + k) = dz_pre;
      dgx(t, 2 * h + k) = dn_pre;
      dhh(t, k) = dr_pre;
      dhh(t, h + k) = dz_pre;
      dhh(t, 2 * h + k) = dn_pre * r;
      dprev(k) = dh(k) * z;
    }
    dprev.noalias() += dhh.row(t) * w.wh.transpose();
    dnext = std::move(dprev);
  }
  GruGrads g;
  g.dwx.noalias() = x.transpose() * dgx;
  g.dbx = dgx.colwise().sum();
  g.dx.noalias() = dgx * w.wx.transpose();
  g.dwh.noalias() = hprevs.transpose() * dhh;
  g.dbh = dhh.colwise().sum();
  g.dh0 = dnext;
  return g;
}

}  // namespace diadfuse::nn
