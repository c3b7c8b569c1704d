// include/diadfuse/nn/tensor.h

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

#ifndef DIADFUSE_NN_TENSOR_H_
#define DIADFUSE_NN_TENSOR_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diadfuse/rng.h"

namespace diadfuse::nn {

// Frame-major real matrix: one row per time step.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

struct ParamId {
  std::size_t index = 0;
};

// Named trainable tensors. Insertion order is the canonical order used for
// serialization, gradient reduction and optimizer state.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(std::uint64_t seed) : seed_(seed) {}

  ParamId Add(const std::string &name, Tensor2 value);
  ParamId Id(const std::string &name) const;
  bool Contains(const std::string &name) const { return index_.count(name) != 0; }

  std::size_t size() const { return values_.size(); }
  const std::string &name(std::size_t i) const { return names_[i]; }
  const Tensor2 &operator[](ParamId id) const { return values_[id.index]; }
  Tensor2 &operator[](ParamId id) { return values_[id.index]; }
  const Tensor2 &at(std::size_t i) const { return values_[i]; }
  Tensor2 &at(std::size_t i) { return values_[i]; }
  const Tensor2 &Get(const std::string &name) const { return values_[Id(name).index]; }
  Tensor2 &Get(const std::string &name) { return values_[Id(name).index]; }

  std::uint64_t seed() const { return seed_; }
  std::size_t ScalarCount() const;

  bool SameShapeAs(const ModelParams &other) const;
  bool operator==(const ModelParams &other) const;

 private:
  std::uint64_t seed_ = 0;
  std::vector<std::string> names_;
  std::vector<Tensor2> values_;
  std::map<std::string, std::size_t> index_;
};

// Gradient buffers aligned with a ModelParams instance.
class Grads {
 public:
  Grads() = default;
  explicit Grads(const ModelParams &params);

  std::size_t size() const { return values_.size(); }
  Tensor2 &at(std::size_t i) { return values_[i]; }
  const Tensor2 &at(std::size_t i) const { return values_[i]; }
  Tensor2 &operator[](ParamId id) { return values_[id.index]; }
  const Tensor2 &operator[](ParamId id) const { return values_[id.index]; }

  void SetZero();
  void Add(const Grads &other);
  void Scale(double factor);
  bool SameShapeAs(const ModelParams &params) const;

 private:
  std::vector<Tensor2> values_;
};

// Xavier-uniform for a fan_in x fan_out weight.
Tensor2 XavierUniform(Eigen::Index rows, Eigen::Index cols, double fan_in,
                      double fan_out, Rng &rng);
Tensor2 UniformInit(Eigen::Index rows, Eigen::Index cols, double limit, Rng &rng);

}  // namespace diadfuse::nn

#endif  // DIADFUSE_NN_TENSOR_H_
