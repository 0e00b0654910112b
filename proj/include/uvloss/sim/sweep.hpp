#pragma once

#include <future>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "uvloss/sim/trainer.hpp"

namespace uvloss::sim {

struct SweepVariant {
  std::string name;
  LossKind loss_kind = LossKind::smooth_l1();
  WeightingMode weighting = StaticWeighting{};
};

struct SweepCell {
  std::string variant;
  double lr = 0.0;
  Outcome outcome = Outcome::kCompleted;
  int diverged_iter = -1;
  double final_total = 0.0;
};

struct SweepTable {
  std::vector<SweepCell> cells;  // variant-major, lr ascending within a variant
  // Largest grid learning rate that completed, per variant; empty if none did.
  std::vector<std::pair<std::string, std::optional<double>>> lr_max;

  std::optional<double> lr_max_for(const std::string& variant) const {
    for (const auto& [name, lr] : lr_max) {
      if (name == variant) return lr;
    }
    throw std::invalid_argument("no sweep variant named '" + variant + "'");
  }
};

/// Trains every (variant, lr) cell on the same task and reports the largest
/// stable learning rate per variant. Cells run concurrently; the table is
/// assembled in grid order regardless of completion order.
inline SweepTable divergence_sweep(const SyntheticTask& task, const TrainConfig& base,
                                   std::span<const double> lr_grid,
                                   std::span<const SweepVariant> variants) {
  if (lr_grid.empty()) throw std::invalid_argument("sweep: lr_grid must be non-empty");
  for (size_t i = 0; i < lr_grid.size(); ++i) {
    if (!(lr_grid[i] > 0.0)) throw std::invalid_argument("sweep: learning rates must be > 0");
    if (i > 0 && !(lr_grid[i] > lr_grid[i - 1])) {
      throw std::invalid_argument("sweep: lr_grid must be strictly increasing");
    }
  }
  if (variants.empty()) throw std::invalid_argument("sweep: variants must be non-empty");

  std::vector<TrainConfig> configs;
  configs.reserve(variants.size() * lr_grid.size());
  for (const SweepVariant& v : variants) {
    for (double lr : lr_grid) {
      TrainConfig cfg = base;
      cfg.loss_kind = v.loss_kind;
      cfg.weighting = v.weighting;
      cfg.base_lr = lr;
      cfg.validate();
      configs.push_back(std::move(cfg));
    }
  }

  std::vector<std::future<TrainResult>> futures;
  futures.reserve(configs.size());
  for (const TrainConfig& cfg : configs) {
    futures.push_back(std::async(std::launch::async, [&task, &cfg] { return train(task, cfg); }));
  }

  SweepTable table;
  size_t cell = 0;
  for (const SweepVariant& v : variants) {
    std::optional<double> best;
    for (double lr : lr_grid) {
      const TrainResult r = futures[cell++].get();
      table.cells.push_back({v.name, lr, r.outcome, r.diverged_iter, r.final_total});
      if (r.outcome == Outcome::kCompleted) best = lr;
    }
    table.lr_max.emplace_back(v.name, best);
  }
  return table;
}

}  // namespace uvloss::sim
