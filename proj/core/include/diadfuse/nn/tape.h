// include/diadfuse/nn/tape.h

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

#ifndef DIADFUSE_NN_TAPE_H_
#define DIADFUSE_NN_TAPE_H_

#include <functional>
#include <optional>
#include <vector>

#include "diadfuse/nn/ops.h"
#include "diadfuse/nn/tensor.h"

namespace diadfuse::nn {

struct Var {
  std::size_t index = 0;
};

// Records the forward computation of one example and replays it in reverse.
// Nodes are appended in evaluation order, so reverse creation order is a
// reverse topological order and Backward visits every node once.
//
// Parameter leaves and borrowed inputs alias caller storage, which must
// outlive the tape.
class Tape {
 public:
  explicit Tape(const ModelParams &params, bool record = true);

  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var Param(ParamId id);
  Var Input(const Tensor2 &value);  // borrowed, no gradient
  Var Constant(Tensor2 value);      // owned, no gradient

  const Tensor2 &Value(Var v) const;
  double Scalar(Var v) const { return Value(v)(0, 0); }

  Var MatMul(Var a, Var b);
  Var AddBias(Var x, Var bias);  // bias 1 x cols, broadcast over rows
  Var Add(Var a, Var b);
  Var Scale(Var a, double factor);
  Var Relu(Var x);
  Var Sigmoid(Var x);
  Var Tanh(Var x);
  Var SoftmaxRows(Var x);
  Var MeanRows(Var x);
  Var Row(Var x, Eigen::Index r);
  Var ConcatCols(Var a, Var b);
  Var Conv1d(Var x, Var weight, int kernel, int stride, Padding pad);
  Var Gru(Var x, Var wx, Var wh, Var bx, Var bh);
  // sum_l w(0, l) * layers[l]
  Var WeightedSum(Var weights, const std::vector<Var> &layers);
  Var Dense(Var x, Var weight, Var bias) { return AddBias(MatMul(x, weight), bias); }

  // Losses on a probability. Both clamp to [kBceEps, 1 - kBceEps]; the
  // clamp has zero gradient outside that range.
  Var Bce(Var p, double target);
  Var CrossEntropy(Var probs, Eigen::Index target_class);

  // Reverse-mode pass from a 1x1 node. Parameter gradients are accumulated
  // (added) into `into`.
  void Backward(Var loss, Grads &into);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor2 owned;
    const Tensor2 *borrowed = nullptr;
    Tensor2 grad;
    bool needs_grad = false;
    std::optional<std::size_t> param;
    std::function<void()> backward;
  };

  Var Push(Tensor2 value, bool needs_grad);
  bool NeedsGrad(Var v) const { return nodes_[v.index].needs_grad; }
  Tensor2 &Grad(Var v);

  const ModelParams &params_;
  bool record_;
  Grads *target_ = nullptr;
  std::vector<Node> nodes_;
};

}  // namespace diadfuse::nn

#endif  // DIADFUSE_NN_TAPE_H_
