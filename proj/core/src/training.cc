// core/src/training.cc

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

#include "diadfuse/training.h"

#include <algorithm>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "diadfuse/error.h"
#include "diadfuse/nn/adam.h"
#include "diadfuse/rng.h"

namespace diadfuse::train {

std::string TrainLog::ToJson() const {
  nlohmann::json j;
  j["best_epoch"] = best_epoch;
  j["best_val_f1"] = best_val_f1;
  j["best_val_loss"] = best_val_loss;
  nlohmann::json e = nlohmann::json::array();
  for (const auto &ep : epochs) {
    e.push_back({{"epoch", ep.epoch},
                 {"train_loss", ep.train_loss},
                 {"val_f1", ep.val_f1},
                 {"val_loss", ep.val_loss}});
  }
  j["epochs"] = std::move(e);
  return j.dump(1);
}

int DefaultThreads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

void ParallelFor(std::size_t n, int threads, const std::function<void(std::size_t)> &fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

nn::ModelParams Fit(nn::ModelParams init, const Objective &objective, const TrainConfig &config,
                    TrainLog *log, const std::string &tag) {
  if (objective.n_train == 0) Fail(Errc::EmptySplit, tag + ": empty training split");
  if (config.batch_size < 1 || config.max_epochs < 1 || !(config.lr > 0.0)) {
    Fail(Errc::InvalidConfig, tag + ": batch_size, max_epochs and lr must be positive");
  }
  nn::ModelParams params = std::move(init);
  nn::Adam adam(params, nn::AdamConfig{.lr = config.lr});
  Rng rng(config.seed);

  std::vector<std::size_t> order(objective.n_train);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t max_chunks = (batch + kReduceChunk - 1) / kReduceChunk;
  std::vector<nn::Grads> chunk_grads(max_chunks, nn::Grads(params));
  std::vector<double> chunk_loss(max_chunks);
  nn::Grads total(params);

  TrainLog local;
  TrainLog &out = log != nullptr ? *log : local;
  out = TrainLog{};
  nn::ModelParams best;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.Shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::size_t chunks = (end - start + kReduceChunk - 1) / kReduceChunk;
      ParallelFor(chunks, config.threads, [&](std::size_t c) {
        nn::Grads &g = chunk_grads[c];
        g.SetZero();
        double loss = 0.0;
        const std::size_t lo = start + c * kReduceChunk;
        const std::size_t hi = std::min(end, lo + kReduceChunk);
        for (std::size_t k = lo; k < hi; ++k) loss += objective.example_grad(params, order[k], g);
        chunk_loss[c] = loss;
      });
      total.SetZero();
      for (std::size_t c = 0; c < chunks; ++c) {
        total.Add(chunk_grads[c]);
        epoch_loss += chunk_loss[c];
      }
      total.Scale(1.0 / static_cast<double>(end - start));
      adam.Step(params, total);
    }
    const ValidationScore vs = objective.validate(params);
    EpochLog ep{epoch, epoch_loss / static_cast<double>(order.size()), vs.f1, vs.loss};
    out.epochs.push_back(ep);
    const bool better = out.best_epoch < 0 || vs.f1 > out.best_val_f1 ||
                        (vs.f1 == out.best_val_f1 && vs.loss < out.best_val_loss);
    spdlog::info("{} epoch {:2d} train_loss {:.5f} val_f1 {:.4f} val_loss {:.5f}{}", tag, epoch,
                 ep.train_loss, vs.f1, vs.loss, better ? " *" : "");
    if (better) {
      out.best_epoch = epoch;
      out.best_val_f1 = vs.f1;
      out.best_val_loss = vs.loss;
      best = params;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  return best;
}

}  // namespace diadfuse::train
