#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uvloss/gps.hpp"

namespace uvloss {

enum class SimilarityKind { kGps, kGpsm };

inline const char* to_string(SimilarityKind k) {
  return k == SimilarityKind::kGps ? "gps" : "gpsm";
}

inline SimilarityKind similarity_kind_from_string(const std::string& s) {
  if (s == "gps") return SimilarityKind::kGps;
  if (s == "gpsm") return SimilarityKind::kGpsm;
  throw std::invalid_argument("unknown similarity kind '" + s + "' (expected gps|gpsm)");
}

struct ThresholdAp {
  double threshold = 0.0;
  double ap = 0.0;
};

struct ApReport {
  double ap = 0.0;  // mean over thresholds
  std::vector<ThresholdAp> per_threshold;
  int n_images = 0;     // images present in the ground truth
  int n_instances = 0;  // ground-truth instances
};

struct InstanceMetricsRow {
  std::string image_id;
  double gps = 0.0;
  double iou = 0.0;
  double gpsm = 0.0;
};

namespace detail {

struct EvalImage {
  std::vector<size_t> gt_idx;    // indices into the ground-truth span
  std::vector<size_t> pred_idx;  // indices into the prediction span
};

// Groups instances by image id, preserving first-appearance order of
// ground-truth images; prediction-only images are appended afterwards.
inline std::vector<EvalImage> group_by_image(std::span<const InstanceRecord> gts,
                                             std::span<const InstanceRecord> preds,
                                             int* n_gt_images) {
  std::vector<EvalImage> images;
  std::map<std::string, size_t> by_id;
  for (size_t i = 0; i < gts.size(); ++i) {
    auto [it, inserted] = by_id.emplace(gts[i].image_id, images.size());
    if (inserted) images.emplace_back();
    images[it->second].gt_idx.push_back(i);
  }
  *n_gt_images = static_cast<int>(images.size());
  for (size_t i = 0; i < preds.size(); ++i) {
    auto [it, inserted] = by_id.emplace(preds[i].image_id, images.size());
    if (inserted) images.emplace_back();
    images[it->second].pred_idx.push_back(i);
  }
  return images;
}

// Pairwise similarity between every prediction and ground truth of one image.
inline std::vector<std::vector<double>> similarity_matrix(std::span<const InstanceRecord> gts,
                                                          std::span<const InstanceRecord> preds,
                                                          const EvalImage& img,
                                                          const GpsConfig& cfg,
                                                          SimilarityKind kind) {
  std::vector<std::vector<double>> sim(img.pred_idx.size(),
                                       std::vector<double>(img.gt_idx.size(), 0.0));
  for (size_t p = 0; p < img.pred_idx.size(); ++p) {
    for (size_t g = 0; g < img.gt_idx.size(); ++g) {
      const InstanceRecord& gt = gts[img.gt_idx[g]];
      const InstanceRecord& pred = preds[img.pred_idx[p]];
      const double gps = gps_instance(gt, pred, cfg).value;
      if (kind == SimilarityKind::kGps) {
        sim[p][g] = gps;
      } else {
        sim[p][g] = gps_masked(gps, mask_iou(gt.mask, pred.mask).value);
      }
    }
  }
  return sim;
}

// Predictions sorted by descending score; ties keep input order.
inline std::vector<size_t> score_order(std::span<const InstanceRecord> preds) {
  std::vector<size_t> order(preds.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return preds[a].score > preds[b].score; });
  return order;
}

// 101-point interpolated AP from a TP/FP sequence in score order.
inline double interpolated_ap(const std::vector<bool>& is_tp, int n_gt) {
  const size_t n = is_tp.size();
  if (n == 0) return 0.0;
  std::vector<double> recall(n), precision(n);
  int tp = 0;
  for (size_t i = 0; i < n; ++i) {
    tp += is_tp[i] ? 1 : 0;
    recall[i] = static_cast<double>(tp) / n_gt;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // Precision envelope: non-increasing from the right.
  for (size_t i = n - 1; i > 0; --i) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  size_t j = 0;
  for (int r = 0; r <= 100; ++r) {
    const double level = r / 100.0;
    while (j < n && recall[j] < level) ++j;
    if (j < n) sum += precision[j];
  }
  return sum / 101.0;
}

}  // namespace detail

/// COCO-style average precision over similarity thresholds. Per threshold,
/// predictions are processed in descending score (ties by input order) and
/// each greedily matches the unmatched same-image ground truth with the
/// highest similarity >= threshold (ties by ground-truth input order); the
/// per-threshold AP uses 101-point precision interpolation and the final AP
/// is the mean over thresholds.
inline ApReport ap_over_thresholds(std::span<const InstanceRecord> gts,
                                   std::span<const InstanceRecord> preds, const GpsConfig& cfg,
                                   SimilarityKind kind) {
  cfg.validate();
  if (gts.empty()) {
    throw std::invalid_argument("ap_over_thresholds: no ground-truth instances");
  }
  ApReport report;
  report.n_instances = static_cast<int>(gts.size());

  const auto images = detail::group_by_image(gts, preds, &report.n_images);

  // Precompute similarities once; the per-threshold pass only re-matches.
  std::vector<std::vector<std::vector<double>>> sims;
  sims.reserve(images.size());
  for (const auto& img : images) {
    sims.push_back(detail::similarity_matrix(gts, preds, img, cfg, kind));
  }
  // Map prediction index -> (image index, row in that image's matrix).
  std::vector<std::pair<size_t, size_t>> pred_pos(preds.size());
  for (size_t im = 0; im < images.size(); ++im) {
    for (size_t p = 0; p < images[im].pred_idx.size(); ++p) {
      pred_pos[images[im].pred_idx[p]] = {im, p};
    }
  }

  const auto order = detail::score_order(preds);
  const int n_gt = static_cast<int>(gts.size());

  double ap_sum = 0.0;
  for (double t : cfg.thresholds) {
    std::vector<std::vector<bool>> gt_matched(images.size());
    for (size_t im = 0; im < images.size(); ++im) {
      gt_matched[im].assign(images[im].gt_idx.size(), false);
    }
    std::vector<bool> is_tp;
    is_tp.reserve(order.size());
    for (size_t pi : order) {
      const auto [im, row] = pred_pos[pi];
      const auto& sim = sims[im];
      int best = -1;
      double best_sim = 0.0;
      for (size_t g = 0; g < images[im].gt_idx.size(); ++g) {
        if (gt_matched[im][g]) continue;
        const double s = sim[row][g];
        if (s >= t && (best < 0 || s > best_sim)) {
          best = static_cast<int>(g);
          best_sim = s;
        }
      }
      if (best >= 0) {
        gt_matched[im][best] = true;
        is_tp.push_back(true);
      } else {
        is_tp.push_back(false);
      }
    }
    const double ap_t = detail::interpolated_ap(is_tp, n_gt);
    report.per_threshold.push_back({t, ap_t});
    ap_sum += ap_t;
  }
  report.ap = ap_sum / static_cast<double>(cfg.thresholds.size());
  return report;
}

/// Per-instance diagnostics: predictions in descending score order are paired
/// greedily with the unmatched same-image ground truth of highest point
/// similarity (no threshold); one row per matched pair.
inline std::vector<InstanceMetricsRow> per_instance_metrics(std::span<const InstanceRecord> gts,
                                                            std::span<const InstanceRecord> preds,
                                                            const GpsConfig& cfg) {
  cfg.validate();
  int n_images = 0;
  const auto images = detail::group_by_image(gts, preds, &n_images);
  std::vector<std::pair<size_t, size_t>> pred_pos(preds.size());
  std::vector<std::vector<std::vector<double>>> sims;
  sims.reserve(images.size());
  for (size_t im = 0; im < images.size(); ++im) {
    sims.push_back(detail::similarity_matrix(gts, preds, images[im], cfg, SimilarityKind::kGps));
    for (size_t p = 0; p < images[im].pred_idx.size(); ++p) {
      pred_pos[images[im].pred_idx[p]] = {im, p};
    }
  }
  std::vector<std::vector<bool>> gt_matched(images.size());
  for (size_t im = 0; im < images.size(); ++im) {
    gt_matched[im].assign(images[im].gt_idx.size(), false);
  }
  std::vector<InstanceMetricsRow> rows;
  for (size_t pi : detail::score_order(preds)) {
    const auto [im, row] = pred_pos[pi];
    int best = -1;
    double best_sim = -1.0;
    for (size_t g = 0; g < images[im].gt_idx.size(); ++g) {
      if (gt_matched[im][g]) continue;
      if (sims[im][row][g] > best_sim) {
        best = static_cast<int>(g);
        best_sim = sims[im][row][g];
      }
    }
    if (best < 0) continue;
    gt_matched[im][best] = true;
    const InstanceRecord& gt = gts[images[im].gt_idx[best]];
    const InstanceRecord& pred = preds[pi];
    InstanceMetricsRow r;
    r.image_id = gt.image_id;
    r.gps = best_sim;
    r.iou = mask_iou(gt.mask, pred.mask).value;
    r.gpsm = gps_masked(r.gps, r.iou);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace uvloss
