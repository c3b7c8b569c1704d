// include/diadfuse/nn/ops.h

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

#ifndef DIADFUSE_NN_OPS_H_
#define DIADFUSE_NN_OPS_H_

// Forward kernels shared by the tape and by direct (no-gradient) callers.

#include "diadfuse/nn/tensor.h"

namespace diadfuse::nn {

enum class Padding { kSame, kValid };

inline constexpr double kBceEps = 1e-7;

Eigen::Index ConvOutputLength(Eigen::Index length, int kernel, int stride, Padding pad);

// Rows of the result are the receptive fields [x[t*s-p], ..., x[t*s-p+k-1]]
// flattened tap-major, zero outside the sequence.
Tensor2 Im2Col(const Tensor2 &x, int kernel, int stride, Padding pad);
// Adjoint of Im2Col: scatters column gradients back onto dx.
void Col2ImAdd(const Tensor2 &dcol, int kernel, int stride, Padding pad, Tensor2 &dx);

// Temporal cross-correlation. `weight` is [kernel*Din x Dout], row index
// tap*Din + d.
Tensor2 Conv1d(const Tensor2 &x, const Tensor2 &weight, int kernel, int stride, Padding pad);

Tensor2 Dense(const Tensor2 &x, const Tensor2 &weight, const Tensor2 &bias);
Tensor2 Relu(const Tensor2 &x);
Tensor2 Sigmoid(const Tensor2 &x);
double Sigmoid(double x);
// Row-wise softmax.
Tensor2 Softmax(const Tensor2 &x);

// -[y ln p + (1-y) ln(1-p)] with p clamped to [eps, 1-eps].
double Bce(double p, double y);

// Gate layout along the 3H axis is r | z | n:
//   r = sig(x Wx_r + bx_r + h Wh_r + bh_r)
//   z = sig(x Wx_z + bx_z + h Wh_z + bh_z)
//   n = tanh(x Wx_n + bx_n + r * (h Wh_n + bh_n))
//   h' = (1 - z) * n + z * h
struct GruWeights {
  const Tensor2 &wx;  // Din x 3H
  const Tensor2 &wh;  // H x 3H
  const Tensor2 &bx;  // 1 x 3H
  const Tensor2 &bh;  // 1 x 3H
  Eigen::Index hidden() const { return wh.rows(); }
};

struct GruCache {
  Tensor2 r, z, n, hn;  // T x H each; hn = h_{t-1} Wh_n + bh_n
  RowVec h0;
};

struct GruResult {
  Tensor2 states;  // T x H
  RowVec last;
};

GruResult GruForward(const Tensor2 &x, const GruWeights &w, const RowVec &h0,
                     GruCache *cache = nullptr);

struct GruGrads {
  Tensor2 dx, dwx, dwh, dbx, dbh;
  RowVec dh0;
};

GruGrads GruBackward(const Tensor2 &x, const GruWeights &w, const GruResult &fwd,
                     const GruCache &cache, const Tensor2 &dstates);

}  // namespace diadfuse::nn

#endif  // DIADFUSE_NN_OPS_H_
