#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "uvloss/robust_loss.hpp"
#include "uvloss/task_weighting.hpp"

namespace uvloss::sim {

struct StaticWeighting {
  double k = 1.0;  // detection + k * dense_pose
};

struct BwsWeighting {
  BwsConfig cfg;
};

using WeightingMode = std::variant<StaticWeighting, BwsWeighting>;

/// Term table the simulator emits: one detection-group classification loss,
/// a dense-pose-group classification loss, and the two coordinate losses.
inline std::vector<TermSpec> sim_term_specs() {
  return {
      {"cls", LossGroup::kDetection, 1.0},
      {"ann", LossGroup::kDensePose, 2.0},
      {"u", LossGroup::kDensePose, 0.1},
      {"v", LossGroup::kDensePose, 0.1},
  };
}

struct TrainConfig {
  double base_lr = 0.002;
  int warmup_iters = 500;
  double warmup_factor = 0.1;
  int total_iters = 2000;
  // Resolved to iterations as floor(frac * total_iters); the defaults put the
  // two decays at the 100/130 and 120/130 marks (1538 and 1846 of 2000).
  std::vector<double> decay_fracs = {100.0 / 130.0, 120.0 / 130.0};
  double decay_factor = 0.1;
  LossKind loss_kind = LossKind::dense_point(0.25);
  WeightingMode weighting = StaticWeighting{};
  std::vector<TermSpec> term_table = sim_term_specs();
  uint64_t seed = 7;  // parameter initialization
  double divergence_threshold = 1e6;

  bool is_bws() const { return std::holds_alternative<BwsWeighting>(weighting); }

  double group_k() const {
    if (is_bws()) return std::get<BwsWeighting>(weighting).cfg.k;
    return std::get<StaticWeighting>(weighting).k;
  }

  void validate() const {
    if (!(base_lr >= 0.0) || !std::isfinite(base_lr)) {
      throw std::invalid_argument("train: base_lr must be finite and >= 0");
    }
    if (total_iters <= 0) throw std::invalid_argument("train: total_iters must be > 0");
    if (warmup_iters < 0 || warmup_iters >= total_iters) {
      throw std::invalid_argument("train: warmup_iters must be in [0, total_iters)");
    }
    if (!(warmup_factor > 0.0 && warmup_factor <= 1.0)) {
      throw std::invalid_argument("train: warmup_factor must be in (0, 1]");
    }
    if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
      throw std::invalid_argument("train: decay_factor must be in (0, 1]");
    }
    for (size_t i = 0; i < decay_fracs.size(); ++i) {
      if (!(decay_fracs[i] > 0.0 && decay_fracs[i] <= 1.0)) {
        throw std::invalid_argument("train: decay_fracs must be in (0, 1]");
      }
      if (i > 0 && !(decay_fracs[i] > decay_fracs[i - 1])) {
        throw std::invalid_argument("train: decay_fracs must be strictly increasing");
      }
    }
    if (!(group_k() > 0.0)) throw std::invalid_argument("train: k must be > 0");
    if (!(divergence_threshold > 1.0)) {
      throw std::invalid_argument("train: divergence_threshold must be > 1");
    }
    if (term_table.empty()) throw std::invalid_argument("train: term table must be non-empty");
    if (is_bws()) std::get<BwsWeighting>(weighting).cfg.validate();
  }

  std::vector<int> decay_iters() const {
    std::vector<int> out;
    for (double frac : decay_fracs) {
      out.push_back(static_cast<int>(std::floor(frac * total_iters)));
    }
    return out;
  }
};

/// Learning rate at an iteration: linear warmup from warmup_factor*base_lr to
/// base_lr over warmup_iters, then base_lr scaled by decay_factor for every
/// decay point passed (a decay applies from its iteration onward).
inline double lr_at(int iter, const TrainConfig& cfg) {
  if (iter < 0 || iter >= cfg.total_iters) {
    throw std::out_of_range("lr_at: iter outside [0, total_iters)");
  }
  if (iter < cfg.warmup_iters) {
    const double t = static_cast<double>(iter) / static_cast<double>(cfg.warmup_iters);
    return cfg.base_lr * (cfg.warmup_factor + (1.0 - cfg.warmup_factor) * t);
  }
  double lr = cfg.base_lr;
  for (int d : cfg.decay_iters()) {
    if (iter >= d) lr *= cfg.decay_factor;
  }
  return lr;
}

}  // namespace uvloss::sim
