// core/src/nn/tensor.cc

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

#include "diadfuse/nn/tensor.h"

#include <cmath>

#include "diadfuse/error.h"

namespace diadfuse::nn {

ParamId ModelParams::Add(const std::string &name, Tensor2 value) {
  if (index_.count(name) != 0) {
    Fail(Errc::SchemaViolation, "duplicate parameter name '" + name + "'");
  }
  index_[name] = values_.size();
  names_.push_back(name);
  values_.push_back(std::move(value));
  return ParamId{values_.size() - 1};
}

ParamId ModelParams::Id(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    Fail(Errc::SchemaViolation, "unknown parameter '" + name + "'");
  }
  return ParamId{it->second};
}

std::size_t ModelParams::ScalarCount() const {
  std::size_t n = 0;
  for (const auto &v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

bool ModelParams::SameShapeAs(const ModelParams &other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i].rows() != other.values_[i].rows() ||
        values_[i].cols() != other.values_[i].cols()) {
      return false;
    }
  }
  return true;
}

bool ModelParams::operator==(const ModelParams &other) const {
  if (seed_ != other.seed_ || !SameShapeAs(other)) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] != other.values_[i]) return false;
  }
  return true;
}

Grads::Grads(const ModelParams &params) {
  values_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    values_.push_back(Tensor2::Zero(params.at(i).rows(), params.at(i).cols()));
  }
}

void Grads::SetZero() {
  for (auto &v : values_) v.setZero();
}

void Grads::Add(const Grads &other) {
  if (other.values_.size() != values_.size()) {
    Fail(Errc::ShapeMismatch, "gradient sets differ in size");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
}

void Grads::Scale(double factor) {
  for (auto &v : values_) v *= factor;
}

bool Grads::SameShapeAs(const ModelParams &params) const {
  if (params.size() != values_.size()) return false;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (params.at(i).rows() != values_[i].rows() ||
        params.at(i).cols() != values_[i].cols()) {
      return false;
    }
  }
  return true;
}

Tensor2 UniformInit(Eigen::Index rows, Eigen::Index cols, double limit, Rng &rng) {
  Tensor2 t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.Uniform(-limit, limit);
  return t;
}

Tensor2 XavierUniform(Eigen::Index rows, Eigen::Index cols, double fan_in,
                      double fan_out, Rng &rng) {
  return UniformInit(rows, cols, std::sqrt(6.0 / (fan_in + fan_out)), rng);
}

}  // namespace diadfuse::nn
