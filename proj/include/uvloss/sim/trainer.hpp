#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "uvloss/sim/schedule.hpp"
#include "uvloss/sim/synthetic.hpp"

namespace uvloss::sim {

/// Flat parameter block of the desk-scale model: a linear regression head
/// with bias (feature_dim x 2*n_points + 2*n_points) and two logistic
/// classification heads.
struct SimParams {
  std::vector<double> reg_w;  // feature_dim x 2*n_points, row-major
  std::vector<double> reg_b;  // 2*n_points
  std::vector<double> cls_w;  // feature_dim
  double cls_b = 0.0;
  std::vector<double> ann_w;  // feature_dim
  double ann_b = 0.0;
};

inline SimParams init_params(const SyntheticTask& task, uint64_t seed) {
  SimParams p;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int cols = 2 * task.params.n_points;
  p.reg_w.resize(static_cast<size_t>(task.params.feature_dim) * cols);
  for (double& w : p.reg_w) w = 0.01 * normal(rng);
  p.reg_b.assign(cols, 0.0);
  p.cls_w.resize(task.params.feature_dim);
  for (double& w : p.cls_w) w = 0.01 * normal(rng);
  p.cls_b = 0.01 * normal(rng);
  p.ann_w.resize(task.params.feature_dim);
  for (double& w : p.ann_w) w = 0.01 * normal(rng);
  p.ann_b = 0.01 * normal(rng);
  return p;
}

/// Simulator term order is fixed: cls (detection group), then ann, u, v
/// (dense-pose group).
inline std::vector<std::string> sim_term_names() { return {"cls", "ann", "u", "v"}; }

namespace detail {

struct LogisticEval {
  double loss = 0.0;            // mean binary cross entropy
  std::vector<double> grad_w;   // d loss / d w
  double grad_b = 0.0;
  bool finite = true;
};

inline LogisticEval eval_logistic(const SyntheticTask& task, const std::vector<double>& w,
                                  double b, const std::vector<uint8_t>& labels, bool with_grads) {
  const int n = task.params.n_samples;
  const int f = task.params.feature_dim;
  LogisticEval out;
  std::vector<double> residual(n, 0.0);  // p - y
  for (int i = 0; i < n; ++i) {
    const double* x = &task.features[static_cast<size_t>(i) * f];
    double z = b;
    for (int k = 0; k < f; ++k) z += x[k] * w[k];
    if (!std::isfinite(z)) {
      out.finite = false;
      continue;
    }
    const double y = labels[i];
    out.loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    residual[i] = 1.0 / (1.0 + std::exp(-z)) - y;
  }
  out.loss /= n;
  out.finite = out.finite && std::isfinite(out.loss);
  if (with_grads && out.finite) {
    out.grad_w.assign(f, 0.0);
    for (int i = 0; i < n; ++i) {
      const double* x = &task.features[static_cast<size_t>(i) * f];
      for (int k = 0; k < f; ++k) out.grad_w[k] += x[k] * residual[i];
      out.grad_b += residual[i];
    }
    for (double& g : out.grad_w) g /= n;
    out.grad_b /= n;
  }
  return out;
}

struct ForwardBackward {
  // Raw (unweighted) term values in sim term order: cls, ann, u, v.
  std::vector<double> term_values;
  bool finite = true;
  // d(term)/d(param) pieces before any weighting multiplier. The u and v
  // gradients live in disjoint (even/odd) columns of reg_grad_w/reg_grad_b:
  // reg_grad_w[k*cols + j] = (1/n) * sum_i X[i,k] * rho'(r[i,j]).
  std::vector<double> reg_grad_w;
  std::vector<double> reg_grad_b;
  std::vector<double> cls_grad_w;
  double cls_grad_b = 0.0;
  std::vector<double> ann_grad_w;
  double ann_grad_b = 0.0;
};

inline ForwardBackward forward_backward(const SyntheticTask& task, const TrainConfig& cfg,
                                        const SimParams& params, bool with_grads) {
  const int n = task.params.n_samples;
  const int f = task.params.feature_dim;
  const int cols = 2 * task.params.n_points;

  ForwardBackward out;

  // Regression terms average over samples but sum over points, so their
  // magnitude grows with the number of regressed coordinates; the many-point
  // branch dominates the total, as it does in the full detector.
  std::vector<double> grad_cells;
  if (with_grads) grad_cells.assign(static_cast<size_t>(n) * cols, 0.0);
  double loss_u = 0.0;
  double loss_v = 0.0;
  bool finite = true;
  for (int i = 0; i < n; ++i) {
    const double* x = &task.features[static_cast<size_t>(i) * f];
    for (int j = 0; j < cols; ++j) {
      double pred = params.reg_b[j];
      for (int k = 0; k < f; ++k) pred += x[k] * params.reg_w[static_cast<size_t>(k) * cols + j];
      const double r = pred - task.targets[static_cast<size_t>(i) * cols + j];
      if (!std::isfinite(r)) {
        finite = false;
        continue;
      }
      const double l = cfg.loss_kind.loss(r);
      if (j % 2 == 0) {
        loss_u += l;
      } else {
        loss_v += l;
      }
      if (with_grads) grad_cells[static_cast<size_t>(i) * cols + j] = cfg.loss_kind.grad(r);
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss_u *= inv_n;
  loss_v *= inv_n;

  const auto cls = detail::eval_logistic(task, params.cls_w, params.cls_b, task.det_labels,
                                         with_grads);
  const auto ann = detail::eval_logistic(task, params.ann_w, params.ann_b, task.ann_labels,
                                         with_grads);

  out.finite = finite && cls.finite && ann.finite && std::isfinite(loss_u) &&
               std::isfinite(loss_v);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.term_values = out.finite
                        ? std::vector<double>{cls.loss, ann.loss, loss_u, loss_v}
                        : std::vector<double>{nan, nan, nan, nan};

  if (with_grads && out.finite) {
    out.reg_grad_w.assign(static_cast<size_t>(f) * cols, 0.0);
    out.reg_grad_b.assign(cols, 0.0);
    for (int i = 0; i < n; ++i) {
      const double* x = &task.features[static_cast<size_t>(i) * f];
      const double* g = &grad_cells[static_cast<size_t>(i) * cols];
      for (int k = 0; k < f; ++k) {
        double* dst = &out.reg_grad_w[static_cast<size_t>(k) * cols];
        const double xk = x[k];
        for (int j = 0; j < cols; ++j) dst[j] += xk * g[j];
      }
      for (int j = 0; j < cols; ++j) out.reg_grad_b[j] += g[j];
    }
    for (double& g : out.reg_grad_w) g *= inv_n;
    for (double& g : out.reg_grad_b) g *= inv_n;
    out.cls_grad_w = cls.grad_w;
    out.cls_grad_b = cls.grad_b;
    out.ann_grad_w = ann.grad_w;
    out.ann_grad_b = ann.grad_b;
  }
  return out;
}

inline std::vector<LossTerm> make_terms(const TrainConfig& cfg,
                                        const std::vector<double>& values) {
  const auto names = sim_term_names();
  std::vector<LossTerm> terms;
  for (size_t i = 0; i < names.size(); ++i) {
    const TermSpec* spec = find_term_spec(cfg.term_table, names[i]);
    if (spec == nullptr) {
      throw std::invalid_argument("train: term table is missing an entry for '" + names[i] + "'");
    }
    terms.push_back({names[i], values[i], spec->group, spec->weight});
  }
  return terms;
}

struct CombineOutcome {
  double total = 0.0;
  std::vector<double> effective_weights;     // per term, multiplier of the raw value in the total
  std::vector<double> gradient_multipliers;  // per term, d(total)/d(raw value)
};

inline CombineOutcome combine_terms(const TrainConfig& cfg, const std::vector<double>& values) {
  const auto terms = make_terms(cfg, values);
  CombineOutcome out;
  WeightedTotal wt;
  std::map<std::string, double> mults;
  if (cfg.is_bws()) {
    const BwsConfig& bws = std::get<BwsWeighting>(cfg.weighting).cfg;
    wt = combine_bws(terms, bws);
    mults = bws_backprop_scale(terms, bws);
  } else {
    wt = combine_static(terms, std::get<StaticWeighting>(cfg.weighting).k);
    mults = wt.per_term_weights;  // the static total is linear in each value
  }
  out.total = wt.total;
  for (const LossTerm& t : terms) {
    out.effective_weights.push_back(wt.per_term_weights.at(t.name));
    out.gradient_multipliers.push_back(mults.at(t.name));
  }
  return out;
}

}  // namespace detail

/// Raw term values (sim term order) at a parameter point.
inline std::vector<double> term_values_at(const SyntheticTask& task, const TrainConfig& cfg,
                                          const SimParams& params) {
  return detail::forward_backward(task, cfg, params, /*with_grads=*/false).term_values;
}

/// Combined weighted total at a parameter point. Exposed for gradient checks.
inline double total_at(const SyntheticTask& task, const TrainConfig& cfg,
                       const SimParams& params) {
  const auto fb = detail::forward_backward(task, cfg, params, /*with_grads=*/false);
  if (!fb.finite) return std::numeric_limits<double>::quiet_NaN();
  return detail::combine_terms(cfg, fb.term_values).total;
}

/// Gradient multipliers d(total)/d(term value) at a parameter point. In
/// detached mode these are the per-iteration constants the update uses; the
/// gradient of the total is then the gradient of sum_i multiplier_i * term_i
/// with the multipliers held fixed.
inline std::vector<double> gradient_multipliers_at(const SyntheticTask& task,
                                                   const TrainConfig& cfg,
                                                   const SimParams& params) {
  const auto fb = detail::forward_backward(task, cfg, params, /*with_grads=*/false);
  if (!fb.finite) throw std::runtime_error("gradient_multipliers_at: non-finite forward pass");
  return detail::combine_terms(cfg, fb.term_values).gradient_multipliers;
}

/// Analytic gradient of total_at with respect to every parameter.
inline SimParams grad_at(const SyntheticTask& task, const TrainConfig& cfg,
                         const SimParams& params) {
  const auto fb = detail::forward_backward(task, cfg, params, /*with_grads=*/true);
  if (!fb.finite) throw std::runtime_error("grad_at: non-finite forward pass");
  const auto combined = detail::combine_terms(cfg, fb.term_values);
  const double m_cls = combined.gradient_multipliers[0];
  const double m_ann = combined.gradient_multipliers[1];
  const double m_u = combined.gradient_multipliers[2];
  const double m_v = combined.gradient_multipliers[3];

  SimParams grad;
  const int cols = 2 * task.params.n_points;
  grad.reg_w.resize(fb.reg_grad_w.size());
  for (size_t idx = 0; idx < fb.reg_grad_w.size(); ++idx) {
    const double m = (idx % cols) % 2 == 0 ? m_u : m_v;
    grad.reg_w[idx] = m * fb.reg_grad_w[idx];
  }
  grad.reg_b.resize(fb.reg_grad_b.size());
  for (size_t j = 0; j < fb.reg_grad_b.size(); ++j) {
    grad.reg_b[j] = (j % 2 == 0 ? m_u : m_v) * fb.reg_grad_b[j];
  }
  grad.cls_w.resize(fb.cls_grad_w.size());
  for (size_t k = 0; k < fb.cls_grad_w.size(); ++k) grad.cls_w[k] = m_cls * fb.cls_grad_w[k];
  grad.cls_b = m_cls * fb.cls_grad_b;
  grad.ann_w.resize(fb.ann_grad_w.size());
  for (size_t k = 0; k < fb.ann_grad_w.size(); ++k) grad.ann_w[k] = m_ann * fb.ann_grad_w[k];
  grad.ann_b = m_ann * fb.ann_grad_b;
  return grad;
}

struct IterationRecord {
  int iter = 0;
  double lr = 0.0;
  std::vector<double> term_losses;   // sim term order: cls, ann, u, v
  std::vector<double> term_weights;  // effective multiplier of each raw value
  double total = 0.0;
};

enum class Outcome { kCompleted, kDiverged };

inline const char* to_string(Outcome o) {
  return o == Outcome::kCompleted ? "completed" : "diverged";
}

struct TrainResult {
  std::vector<std::string> term_names = sim_term_names();
  std::vector<IterationRecord> records;
  Outcome outcome = Outcome::kCompleted;
  int diverged_iter = -1;  // -1 when completed
  double initial_total = 0.0;
  double final_total = 0.0;
  std::vector<double> final_losses;
};

/// Full-batch gradient descent with the configured loss kind, weighting mode
/// and schedule. Halts with Diverged at the first non-finite total or a total
/// exceeding divergence_threshold * the iteration-0 total.
inline TrainResult train(const SyntheticTask& task, const TrainConfig& cfg) {
  task.params.validate();
  cfg.validate();
  SimParams params = init_params(task, cfg.seed);

  TrainResult result;
  result.records.reserve(cfg.total_iters);
  for (int iter = 0; iter < cfg.total_iters; ++iter) {
    const double lr = lr_at(iter, cfg);
    const auto fb = detail::forward_backward(task, cfg, params, /*with_grads=*/true);

    IterationRecord rec;
    rec.iter = iter;
    rec.lr = lr;
    rec.term_losses = fb.term_values;

    if (!fb.finite) {
      rec.term_weights.assign(fb.term_values.size(), std::numeric_limits<double>::quiet_NaN());
      rec.total = std::numeric_limits<double>::quiet_NaN();
      result.records.push_back(std::move(rec));
      result.outcome = Outcome::kDiverged;
      result.diverged_iter = iter;
      break;
    }

    const auto combined = detail::combine_terms(cfg, fb.term_values);
    rec.term_weights = combined.effective_weights;
    rec.total = combined.total;
    result.records.push_back(rec);

    if (iter == 0) result.initial_total = combined.total;
    if (!std::isfinite(combined.total) ||
        combined.total > cfg.divergence_threshold * result.initial_total) {
      result.outcome = Outcome::kDiverged;
      result.diverged_iter = iter;
      break;
    }

    const double m_cls = combined.gradient_multipliers[0];
    const double m_ann = combined.gradient_multipliers[1];
    const double m_u = combined.gradient_multipliers[2];
    const double m_v = combined.gradient_multipliers[3];
    const int cols = 2 * task.params.n_points;
    for (size_t idx = 0; idx < params.reg_w.size(); ++idx) {
      const double m = (idx % cols) % 2 == 0 ? m_u : m_v;
      params.reg_w[idx] -= lr * m * fb.reg_grad_w[idx];
    }
    for (size_t j = 0; j < params.reg_b.size(); ++j) {
      params.reg_b[j] -= lr * ((j % 2 == 0 ? m_u : m_v)) * fb.reg_grad_b[j];
    }
    for (size_t k = 0; k < params.cls_w.size(); ++k) {
      params.cls_w[k] -= lr * m_cls * fb.cls_grad_w[k];
    }
    params.cls_b -= lr * m_cls * fb.cls_grad_b;
    for (size_t k = 0; k < params.ann_w.size(); ++k) {
      params.ann_w[k] -= lr * m_ann * fb.ann_grad_w[k];
    }
    params.ann_b -= lr * m_ann * fb.ann_grad_b;
  }

  const IterationRecord& last = result.records.back();
  result.final_total = last.total;
  result.final_losses = last.term_losses;
  return result;
}

}  // namespace uvloss::sim
