#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uvloss {

enum class LossGroup { kDetection, kDensePose };

inline const char* to_string(LossGroup g) {
  switch (g) {
    case LossGroup::kDetection: return "detection";
    case LossGroup::kDensePose: return "dense_pose";
  }
  throw std::invalid_argument("unknown loss group");
}

inline LossGroup loss_group_from_string(const std::string& s) {
  if (s == "detection") return LossGroup::kDetection;
  if (s == "dense_pose") return LossGroup::kDensePose;
  throw std::invalid_argument("unknown loss group '" + s + "' (expected detection|dense_pose)");
}

/// One named scalar loss with its group and static weight.
struct LossTerm {
  std::string name;
  double value = 0.0;
  LossGroup group = LossGroup::kDetection;
  double static_weight = 1.0;
};

inline void validate_term(const LossTerm& t) {
  if (!std::isfinite(t.value) || t.value < 0.0) {
    throw std::invalid_argument("LossTerm '" + t.name + "': value must be finite and >= 0");
  }
  if (!(t.static_weight >= 0.0)) {
    throw std::invalid_argument("LossTerm '" + t.name + "': static_weight must be >= 0");
  }
}

struct BwsConfig {
  double k = 1.0;                  // group scale on the dense-pose subtotal
  bool detach_weights = true;      // treat the softmin weights as per-iteration constants
  bool apply_static_first = true;  // weight each raw loss by static_weight before the softmin

  void validate() const {
    if (!(k > 0.0)) throw std::invalid_argument("BwsConfig: k must be > 0");
  }
};

struct WeightedTotal {
  double total = 0.0;
  // Effective multiplier of each raw term value in the total, i.e.
  // total == sum over terms of per_term_weights[name] * value.
  std::map<std::string, double> per_term_weights;
  // Subtotals before the k factor is applied to the dense-pose group.
  std::map<LossGroup, double> group_subtotals;
  // Groups that contributed nothing because no term referenced them.
  std::vector<LossGroup> empty_groups;
};

/// Softmin weights: w_i = exp(-L_i) / sum_j exp(-L_j). Shifts by the group
/// minimum before exponentiation so the largest exponent is 0; shift
/// invariance of the ratio makes this exact.
inline std::vector<double> bws_weights(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("bws_weights: values must be non-empty");
  double lo = values[0];
  for (double v : values) {
    if (std::isnan(v)) throw std::invalid_argument("bws_weights: NaN loss value");
    lo = std::min(lo, v);
  }
  std::vector<double> w(values.size());
  double z = 0.0;
  for (size_t i = 0; i < values.size(); ++i) {
    w[i] = std::exp(-(values[i] - lo));
    z += w[i];
  }
  for (double& wi : w) wi /= z;
  return w;
}

namespace detail {

inline void check_group_known(const LossTerm& t) {
  if (t.group != LossGroup::kDetection && t.group != LossGroup::kDensePose) {
    throw std::invalid_argument("LossTerm '" + t.name + "': unknown group");
  }
}

}  // namespace detail

/// Static composition: total = sum_det w_i*L_i + k * sum_dp w_i*L_i using each
/// term's static weight.
inline WeightedTotal combine_static(std::span<const LossTerm> terms, double k) {
  if (terms.empty()) throw std::invalid_argument("combine_static: terms must be non-empty");
  if (!(k > 0.0)) throw std::invalid_argument("combine_static: k must be > 0");
  WeightedTotal out;
  out.group_subtotals[LossGroup::kDetection] = 0.0;
  out.group_subtotals[LossGroup::kDensePose] = 0.0;
  bool seen[2] = {false, false};
  for (const LossTerm& t : terms) {
    validate_term(t);
    detail::check_group_known(t);
    const bool dp = t.group == LossGroup::kDensePose;
    seen[dp ? 1 : 0] = true;
    out.group_subtotals[t.group] += t.static_weight * t.value;
    out.per_term_weights[t.name] = t.static_weight * (dp ? k : 1.0);
  }
  if (!seen[0]) out.empty_groups.push_back(LossGroup::kDetection);
  if (!seen[1]) out.empty_groups.push_back(LossGroup::kDensePose);
  out.total = out.group_subtotals[LossGroup::kDetection] +
              k * out.group_subtotals[LossGroup::kDensePose];
  return out;
}

namespace detail {

struct GroupView {
  std::vector<size_t> idx;      // indices into the term span
  std::vector<double> scaled;   // statically pre-weighted values fed to the softmin
  std::vector<double> weights;  // softmin weights over `scaled`
};

inline GroupView make_group_view(std::span<const LossTerm> terms, LossGroup g,
                                 const BwsConfig& cfg) {
  GroupView v;
  for (size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].group != g) continue;
    v.idx.push_back(i);
    const double sw = cfg.apply_static_first ? terms[i].static_weight : 1.0;
    v.scaled.push_back(sw * terms[i].value);
  }
  if (!v.idx.empty()) v.weights = bws_weights(v.scaled);
  return v;
}

}  // namespace detail

/// Balanced weighting: softmin weights are computed within each group over the
/// (optionally statically pre-weighted) values and applied; the group
/// subtotals combine as detection + k * dense_pose. A group with no terms
/// contributes 0 and is flagged in empty_groups.
inline WeightedTotal combine_bws(std::span<const LossTerm> terms, const BwsConfig& cfg) {
  if (terms.empty()) throw std::invalid_argument("combine_bws: terms must be non-empty");
  cfg.validate();
  for (const LossTerm& t : terms) {
    validate_term(t);
    detail::check_group_known(t);
  }
  WeightedTotal out;
  for (LossGroup g : {LossGroup::kDetection, LossGroup::kDensePose}) {
    const auto view = detail::make_group_view(terms, g, cfg);
    double subtotal = 0.0;
    const double group_factor = g == LossGroup::kDensePose ? cfg.k : 1.0;
    for (size_t j = 0; j < view.idx.size(); ++j) {
      const LossTerm& t = terms[view.idx[j]];
      subtotal += view.weights[j] * view.scaled[j];
      const double sw = cfg.apply_static_first ? t.static_weight : 1.0;
      out.per_term_weights[t.name] = view.weights[j] * sw * group_factor;
    }
    out.group_subtotals[g] = subtotal;
    if (view.idx.empty()) out.empty_groups.push_back(g);
  }
  out.total = out.group_subtotals[LossGroup::kDetection] +
              cfg.k * out.group_subtotals[LossGroup::kDensePose];
  return out;
}

/// Gradient multiplier of the combined total with respect to each raw term
/// value. Detached mode treats the softmin weights as constants; non-detached
/// mode differentiates through them:
///   d/ds_j [ sum_i s_i w_i(s) ] = w_j * (1 - s_j + sum_i s_i w_i).
inline std::map<std::string, double> bws_backprop_scale(std::span<const LossTerm> terms,
                                                        const BwsConfig& cfg) {
  if (terms.empty()) throw std::invalid_argument("bws_backprop_scale: terms must be non-empty");
  cfg.validate();
  for (const LossTerm& t : terms) {
    validate_term(t);
    detail::check_group_known(t);
  }
  std::map<std::string, double> out;
  for (LossGroup g : {LossGroup::kDetection, LossGroup::kDensePose}) {
    const auto view = detail::make_group_view(terms, g, cfg);
    if (view.idx.empty()) continue;
    const double group_factor = g == LossGroup::kDensePose ? cfg.k : 1.0;
    double weighted_sum = 0.0;  // sum_i s_i w_i, needed for the product rule
    for (size_t j = 0; j < view.idx.size(); ++j) weighted_sum += view.scaled[j] * view.weights[j];
    for (size_t j = 0; j < view.idx.size(); ++j) {
      const LossTerm& t = terms[view.idx[j]];
      const double sw = cfg.apply_static_first ? t.static_weight : 1.0;
      double d_subtotal_ds = view.weights[j];
      if (!cfg.detach_weights) {
        d_subtotal_ds = view.weights[j] * (1.0 - view.scaled[j] + weighted_sum);
      }
      out[t.name] = d_subtotal_ds * sw * group_factor;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Named weight tables (term name -> group, static weight).
// ---------------------------------------------------------------------------

struct TermSpec {
  std::string name;
  LossGroup group = LossGroup::kDetection;
  double weight = 1.0;
};

/// Reference table for the eight-loss detector + dense-pose decomposition.
inline std::vector<TermSpec> default_term_specs() {
  return {
      {"rpn_cls", LossGroup::kDetection, 1.0},  {"rpn_reg", LossGroup::kDetection, 1.0},
      {"rcnn_cls", LossGroup::kDetection, 1.0}, {"rcnn_reg", LossGroup::kDetection, 1.0},
      {"ann", LossGroup::kDensePose, 2.0},      {"index_uv", LossGroup::kDensePose, 0.3},
      {"u", LossGroup::kDensePose, 0.1},        {"v", LossGroup::kDensePose, 0.1},
  };
}

inline const TermSpec* find_term_spec(std::span<const TermSpec> specs, const std::string& name) {
  for (const TermSpec& s : specs) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

}  // namespace uvloss
