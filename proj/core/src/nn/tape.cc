// core/src/nn/tape.cc

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

#include "diadfuse/nn/tape.h"

#include <algorithm>
#include <cmath>

#include "diadfuse/error.h"

namespace diadfuse::nn {

Tape::Tape(const ModelParams &params, bool record) : params_(params), record_(record) {
  nodes_.reserve(64);
}

Var Tape::Push(Tensor2 value, bool needs_grad) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = needs_grad && record_;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Tensor2 &Tape::Value(Var v) const {
  const Node &n = nodes_[v.index];
  return n.borrowed != nullptr ? *n.borrowed : n.owned;
}

Tensor2 &Tape::Grad(Var v) {
  Node &n = nodes_[v.index];
  if (n.param) return target_->at(*n.param);
  if (n.grad.size() == 0) {
    const Tensor2 &val = Value(v);
    n.grad = Tensor2::Zero(val.rows(), val.cols());
  }
  return n.grad;
}

Var Tape::Param(ParamId id) {
  Node n;
  n.borrowed = &params_[id];
  n.needs_grad = record_;
  n.param = id.index;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::Input(const Tensor2 &value) {
  Node n;
  n.borrowed = &value;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::Constant(Tensor2 value) { return Push(std::move(value), false); }

Var Tape::MatMul(Var a, Var b) {
  const Tensor2 &va = Value(a), &vb = Value(b);
  if (va.cols() != vb.rows()) Fail(Errc::ShapeMismatch, "matmul: inner dimensions differ");
  Var out = Push(va * vb, NeedsGrad(a) || NeedsGrad(b));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, a, b, out] {
      const Tensor2 &g = Grad(out);
      if (NeedsGrad(a)) Grad(a).noalias() += g * Value(b).transpose();
      if (NeedsGrad(b)) Grad(b).noalias() += Value(a).transpose() * g;
    };
  }
  return out;
}

Var Tape::AddBias(Var x, Var bias) {
  const Tensor2 &vx = Value(x), &vb = Value(bias);
  if (vb.rows() != 1 || vb.cols() != vx.cols()) Fail(Errc::ShapeMismatch, "bias shape");
  Tensor2 y = vx;
  y.rowwise() += vb.row(0);
  Var out = Push(std::move(y), NeedsGrad(x) || NeedsGrad(bias));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, x, bias, out] {
      const Tensor2 &g = Grad(out);
      if (NeedsGrad(x)) Grad(x) += g;
      if (NeedsGrad(bias)) Grad(bias) += g.colwise().sum();
    };
  }
  return out;
}

Var Tape::Add(Var a, Var b) {
  const Tensor2 &va = Value(a), &vb = Value(b);
  if (va.rows() != vb.rows() || va.cols() != vb.cols()) Fail(Errc::ShapeMismatch, "add");
  Var out = Push(va + vb, NeedsGrad(a) || NeedsGrad(b));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, a, b, out] {
      const Tensor2 &g = Grad(out);
      if (NeedsGrad(a)) Grad(a) += g;
      if (NeedsGrad(b)) Grad(b) += g;
    };
  }
  return out;
}

Var Tape::Scale(Var a, double factor) {
  Var out = Push(Value(a) * factor, NeedsGrad(a));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, a, out, factor] { Grad(a) += Grad(out) * factor; };
  }
  return out;
}

Var Tape::Relu(Var x) {
  Var out = Push(Value(x).cwiseMax(0.0), NeedsGrad(x));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, x, out] {
      Grad(x).array() += (Value(x).array() > 0.0).select(Grad(out).array(), 0.0);
    };
  }
  return out;
}

Var Tape::Sigmoid(Var x) {
  Var out = Push(nn::Sigmoid(Value(x)), NeedsGrad(x));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, x, out] {
      const auto &y = Value(out).array();
      Grad(x).array() += Grad(out).array() * y * (1.0 - y);
    };
  }
  return out;
}

Var Tape::Tanh(Var x) {
  Var out = Push(Value(x).array().tanh().matrix(), NeedsGrad(x));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, x, out] {
      const auto &y = Value(out).array();
      Grad(x).array() += Grad(out).array() * (1.0 - y * y);
    };
  }
  return out;
}

Var Tape::SoftmaxRows(Var x) {
  Var out = Push(nn::Softmax(Value(x)), NeedsGrad(x));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, x, out] {
      const Tensor2 &y = Value(out);
      const Tensor2 &g = Grad(out);
      Tensor2 &gx = Grad(x);
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const double dot = y.row(i).dot(g.row(i));
        gx.row(i).array() += y.row(i).array() * (g.row(i).array() - dot);
      }
    };
  }
  return out;
}

Var Tape::MeanRows(Var x) {
  const Tensor2 &vx = Value(x);
  Var out = Push(vx.colwise().mean(), NeedsGrad(x));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, x, out] {
      Tensor2 &gx = Grad(x);
      const double inv = 1.0 / static_cast<double>(gx.rows());
      gx.rowwise() += Grad(out).row(0) * inv;
    };
  }
  return out;
}

Var Tape::Row(Var x, Eigen::Index r) {
  const Tensor2 &vx = Value(x);
  if (r < 0 || r >= vx.rows()) Fail(Errc::ShapeMismatch, "row index out of range");
  Var out = Push(vx.row(r), NeedsGrad(x));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, x, out, r] { Grad(x).row(r) += Grad(out).row(0); };
  }
  return out;
}

Var Tape::ConcatCols(Var a, Var b) {
  const Tensor2 &va = Value(a), &vb = Value(b);
  if (va.rows() != vb.rows()) Fail(Errc::ShapeMismatch, "concat: row counts differ");
  Tensor2 y(va.rows(), va.cols() + vb.cols());
  y << va, vb;
  Var out = Push(std::move(y), NeedsGrad(a) || NeedsGrad(b));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, a, b, out] {
      const Tensor2 &g = Grad(out);
      const Eigen::Index ca = Value(a).cols();
      if (NeedsGrad(a)) Grad(a) += g.leftCols(ca);
      if (NeedsGrad(b)) Grad(b) += g.rightCols(g.cols() - ca);
    };
  }
  return out;
}

Var Tape::Conv1d(Var x, Var weight, int kernel, int stride, Padding pad) {
  const Tensor2 &vx = Value(x), &vw = Value(weight);
  if (vw.rows() != kernel * vx.cols()) Fail(Errc::ShapeMismatch, "conv1d weight shape");
  Tensor2 col = Im2Col(vx, kernel, stride, pad);
  Tensor2 y = col * vw;
  Var out = Push(std::move(y), NeedsGrad(x) || NeedsGrad(weight));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, x, weight, out, kernel, stride, pad,
                                  col = std::move(col)] {
      const Tensor2 &g = Grad(out);
      if (NeedsGrad(weight)) Grad(weight).noalias() += col.transpose() * g;
      if (NeedsGrad(x)) {
        Tensor2 dcol = g * Value(weight).transpose();
        Col2ImAdd(dcol, kernel, stride, pad, Grad(x));
      }
    };
  }
  return out;
}

Var Tape::Gru(Var x, Var wx, Var wh, Var bx, Var bh) {
  const GruWeights w{Value(wx), Value(wh), Value(bx), Value(bh)};
  const RowVec h0 = RowVec::Zero(w.hidden());
  const bool grad = NeedsGrad(x) || NeedsGrad(wx) || NeedsGrad(wh) || NeedsGrad(bx) ||
                    NeedsGrad(bh);
  if (!grad) return Push(GruForward(Value(x), w, h0).states, false);
  GruCache cache;
  GruResult fwd = GruForward(Value(x), w, h0, &cache);
  Var out = Push(fwd.states, true);
  nodes_[out.index].backward = [this, x, wx, wh, bx, bh, out, fwd = std::move(fwd),
                                cache = std::move(cache)] {
    const GruWeights w{Value(wx), Value(wh), Value(bx), Value(bh)};
    GruGrads g = GruBackward(Value(x), w, fwd, cache, Grad(out));
    if (NeedsGrad(x)) Grad(x) += g.dx;
    if (NeedsGrad(wx)) Grad(wx) += g.dwx;
    if (NeedsGrad(wh)) Grad(wh) += g.dwh;
    if (NeedsGrad(bx)) Grad(bx) += g.dbx;
    if (NeedsGrad(bh)) Grad(bh) += g.dbh;
  };
  return out;
}

Var Tape::WeightedSum(Var weights, const std::vector<Var> &layers) {
  const Tensor2 &vw = Value(weights);
  if (layers.empty() || vw.rows() != 1 || vw.cols() != static_cast<Eigen::Index>(layers.size())) {
    Fail(Errc::ShapeMismatch, "weighted sum: need one weight per layer");
  }
  const Tensor2 &first = Value(layers[0]);
  Tensor2 y = Tensor2::Zero(first.rows(), first.cols());
  bool grad = NeedsGrad(weights);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Tensor2 &vl = Value(layers[l]);
    if (vl.rows() != first.rows() || vl.cols() != first.cols()) {
      Fail(Errc::ShapeMismatch, "weighted sum: layers differ in shape");
    }
    y += vw(0, static_cast<Eigen::Index>(l)) * vl;
    grad = grad || NeedsGrad(layers[l]);
  }
  Var out = Push(std::move(y), grad);
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, weights, layers, out] {
      const Tensor2 &g = Grad(out);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto li = static_cast<Eigen::Index>(l);
        if (NeedsGrad(weights)) Grad(weights)(0, li) += g.cwiseProduct(Value(layers[l])).sum();
        if (NeedsGrad(layers[l])) Grad(layers[l]) += Value(weights)(0, li) * g;
      }
    };
  }
  return out;
}

Var Tape::Bce(Var p, double target) {
  const double pv = Scalar(p);
  Tensor2 y(1, 1);
  y(0, 0) = nn::Bce(pv, target);
  Var out = Push(std::move(y), NeedsGrad(p));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, p, out, pv, target] {
      if (pv < kBceEps || pv > 1.0 - kBceEps) return;
      Grad(p)(0, 0) += Grad(out)(0, 0) * (-(target / pv) + (1.0 - target) / (1.0 - pv));
    };
  }
  return out;
}

Var Tape::CrossEntropy(Var probs, Eigen::Index target_class) {
  const Tensor2 &vp = Value(probs);
  if (vp.rows() != 1 || target_class < 0 || target_class >= vp.cols()) {
    Fail(Errc::ShapeMismatch, "cross entropy: bad class index");
  }
  const double pv = vp(0, target_class);
  const double q = std::clamp(pv, kBceEps, 1.0 - kBceEps);
  Tensor2 y(1, 1);
  y(0, 0) = -std::log(q);
  Var out = Push(std::move(y), NeedsGrad(probs));
  if (NeedsGrad(out)) {
    nodes_[out.index].backward = [this, probs, out, pv, target_class] {
      if (pv < kBceEps || pv > 1.0 - kBceEps) return;
      Grad(probs)(0, target_class) += -Grad(out)(0, 0) / pv;
    };
  }
  return out;
}

void Tape::Backward(Var loss, Grads &into) {
  if (!record_) Fail(Errc::UsageError, "backward on a non-recording tape");
  const Tensor2 &lv = Value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) Fail(Errc::ShapeMismatch, "loss must be 1x1");
  if (!into.SameShapeAs(params_)) Fail(Errc::ShapeMismatch, "gradient buffer shape");
  target_ = &into;
  if (!NeedsGrad(loss)) return;
  Grad(loss)(0, 0) += 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node &n = nodes_[i];
    if (n.backward && n.needs_grad) n.backward();
  }
  target_ = nullptr;
}

}  // namespace diadfuse::nn
