#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace uvloss::sim {

struct TaskParams {
  uint64_t seed = 42;
  int n_samples = 64;
  int n_points = 196;  // regressed (u, v) coordinate pairs per sample
  int feature_dim = 8;
  double outlier_frac = 0.05;
  double outlier_scale = 3.0;

  void validate() const {
    if (n_samples <= 0) throw std::invalid_argument("task: n_samples must be > 0");
    if (n_points <= 0) throw std::invalid_argument("task: n_points must be > 0");
    if (feature_dim <= 0) throw std::invalid_argument("task: feature_dim must be > 0");
    if (!(outlier_frac >= 0.0 && outlier_frac < 1.0)) {
      throw std::invalid_argument("task: outlier_frac must be in [0, 1)");
    }
    if (!(outlier_scale > 1.0)) throw std::invalid_argument("task: outlier_scale must be > 1");
  }
};

/// Seeded many-point regression task with two auxiliary binary label sets for
/// the classification heads. Clean targets lie in (0, 1); exactly
/// floor(outlier_frac * n_samples * n_points) coordinate pairs are displaced
/// by +-outlier_scale (the target range is 1).
struct SyntheticTask {
  TaskParams params;
  std::vector<double> features;     // n_samples x feature_dim, row-major
  std::vector<double> targets;      // n_samples x 2*n_points; u at column 2t, v at 2t+1
  std::vector<uint8_t> det_labels;  // detection-group classification labels
  std::vector<uint8_t> ann_labels;  // dense-pose-group classification labels
  int n_outliers = 0;
};

inline SyntheticTask gen_task(const TaskParams& params) {
  params.validate();
  SyntheticTask task;
  task.params = params;

  const int n = params.n_samples;
  const int f = params.feature_dim;
  const int cols = 2 * params.n_points;

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  task.features.resize(static_cast<size_t>(n) * f);
  for (double& x : task.features) x = normal(rng);

  // Fixed random linear map, squashed into (0, 1).
  std::vector<double> map(static_cast<size_t>(f) * cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(f));
  for (double& w : map) w = normal(rng) * scale;

  task.targets.assign(static_cast<size_t>(n) * cols, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < cols; ++j) {
      double z = 0.0;
      for (int k = 0; k < f; ++k) {
        z += task.features[static_cast<size_t>(i) * f + k] * map[static_cast<size_t>(k) * cols + j];
      }
      task.targets[static_cast<size_t>(i) * cols + j] = 1.0 / (1.0 + std::exp(-z));
    }
  }

  // Each label set comes from its own random direction.
  for (std::vector<uint8_t>* labels : {&task.det_labels, &task.ann_labels}) {
    std::vector<double> dir(f);
    for (double& w : dir) w = normal(rng);
    labels->resize(n);
    for (int i = 0; i < n; ++i) {
      double z = 0.0;
      for (int k = 0; k < f; ++k) z += task.features[static_cast<size_t>(i) * f + k] * dir[k];
      (*labels)[i] = z > 0.0 ? 1 : 0;
    }
  }

  // Displace exactly floor(frac * n * n_points) distinct (sample, point)
  // pairs; both coordinates of a chosen pair move by +-outlier_scale.
  const int64_t slots = static_cast<int64_t>(n) * params.n_points;
  task.n_outliers = static_cast<int>(std::floor(params.outlier_frac * static_cast<double>(slots)));
  if (task.n_outliers > 0) {
    std::vector<int64_t> idx(slots);
    for (int64_t i = 0; i < slots; ++i) idx[i] = i;
    for (int i = 0; i < task.n_outliers; ++i) {
      std::uniform_int_distribution<int64_t> pick(i, slots - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    std::uniform_int_distribution<int> coin(0, 1);
    for (int i = 0; i < task.n_outliers; ++i) {
      const int64_t sample = idx[i] / params.n_points;
      const int64_t point = idx[i] % params.n_points;
      double* uv = &task.targets[static_cast<size_t>(sample) * cols + 2 * point];
      uv[0] += coin(rng) ? params.outlier_scale : -params.outlier_scale;
      uv[1] += coin(rng) ? params.outlier_scale : -params.outlier_scale;
    }
  }
  return task;
}

}  // namespace uvloss::sim
