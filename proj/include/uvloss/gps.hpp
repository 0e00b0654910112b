#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uvloss {

/// One annotated body-surface point: part chart index in [1, 24] and
/// chart-local coordinates u, v in (0, 1].
struct SurfacePoint {
  int part = 1;
  double u = 1.0;
  double v = 1.0;

  SurfacePoint() = default;
  SurfacePoint(int part_, double u_, double v_) : part(part_), u(u_), v(v_) { validate(); }

  void validate() const {
    if (part < 1 || part > 24) {
      throw std::invalid_argument("SurfacePoint: part must be in [1, 24], got " +
                                  std::to_string(part));
    }
    if (!(u > 0.0 && u <= 1.0) || !(v > 0.0 && v <= 1.0)) {
      throw std::invalid_argument("SurfacePoint: u and v must be in (0, 1]");
    }
  }
};

/// Binary foreground mask with explicit dimensions; cells stored row-major.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, uint8_t fill = 0)
      : width_(width), height_(height), cells_(checked_size(width, height), fill ? 1 : 0) {}

  /// Builds a mask from run lengths of alternating 0/1 cells, starting with
  /// the zero run (a leading one run is expressed as a zero-length first run).
  static Mask from_rle(int width, int height, std::span<const int64_t> runs) {
    Mask m(width, height);
    size_t pos = 0;
    uint8_t value = 0;
    for (int64_t run : runs) {
      if (run < 0) throw std::invalid_argument("Mask: negative RLE run length");
      if (pos + static_cast<size_t>(run) > m.cells_.size()) {
        throw std::invalid_argument("Mask: RLE runs exceed width*height");
      }
      for (int64_t i = 0; i < run; ++i) m.cells_[pos++] = value;
      value ^= 1;
    }
    if (pos != m.cells_.size()) {
      throw std::invalid_argument("Mask: RLE runs cover " + std::to_string(pos) +
                                  " cells, expected " + std::to_string(m.cells_.size()));
    }
    return m;
  }

  /// Inverse of from_rle.
  std::vector<int64_t> to_rle() const {
    std::vector<int64_t> runs;
    uint8_t value = 0;
    int64_t count = 0;
    for (uint8_t c : cells_) {
      if (c != value) {
        runs.push_back(count);
        count = 0;
        value = c;
      }
      ++count;
    }
    runs.push_back(count);
    return runs;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  uint8_t at(int x, int y) const { return cells_[static_cast<size_t>(y) * width_ + x]; }
  void set(int x, int y, bool on) { cells_[static_cast<size_t>(y) * width_ + x] = on ? 1 : 0; }

  std::span<const uint8_t> cells() const { return cells_; }

 private:
  static size_t checked_size(int width, int height) {
    if (width <= 0 || height <= 0) {
      throw std::invalid_argument("Mask: dimensions must be positive");
    }
    return static_cast<size_t>(width) * static_cast<size_t>(height);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> cells_;
};

/// One person instance: identifier, detection score (predictions only),
/// foreground mask, and up to 196 annotated surface points.
struct InstanceRecord {
  std::string image_id;
  double score = 0.0;
  Mask mask;
  std::vector<SurfacePoint> points;
};

using PointDistanceFn = std::function<double(const SurfacePoint&, const SurfacePoint&)>;

/// Chart-local Euclidean distance in (u, v) when the parts match, d_max when
/// they differ. Desk-scale stand-in for a true surface distance.
inline double point_distance_uv(const SurfacePoint& a, const SurfacePoint& b, double d_max) {
  if (!(d_max > 0.0)) throw std::invalid_argument("point_distance_uv: d_max must be > 0");
  if (a.part != b.part) return d_max;
  return std::hypot(a.u - b.u, a.v - b.v);
}

inline std::vector<double> default_gps_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
  return t;
}

struct GpsConfig {
  // Normalization constant of the similarity exponent. The default 0.255
  // follows the convention of the original dense-pose evaluation tooling.
  double kappa = 0.255;
  // Point distance; empty means part-aware UV Euclidean with d_max = 10*kappa
  // (cross-part similarity then underflows to ~0).
  PointDistanceFn distance;
  std::vector<double> thresholds = default_gps_thresholds();

  double cross_part_distance() const { return 10.0 * kappa; }

  double point_distance(const SurfacePoint& a, const SurfacePoint& b) const {
    if (distance) return distance(a, b);
    return point_distance_uv(a, b, cross_part_distance());
  }

  void validate() const {
    if (!(kappa > 0.0)) throw std::invalid_argument("GpsConfig: kappa must be > 0");
    if (thresholds.empty()) throw std::invalid_argument("GpsConfig: thresholds must be non-empty");
    for (size_t i = 0; i < thresholds.size(); ++i) {
      if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0)) {
        throw std::invalid_argument("GpsConfig: thresholds must be in (0, 1)");
      }
      if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
        throw std::invalid_argument("GpsConfig: thresholds must be strictly increasing");
      }
    }
  }
};

struct GpsValue {
  double value = 0.0;
  int n_missing = 0;  // ground-truth points with no matching prediction point
};

/// Geodesic point similarity of one instance pair: the mean over ground-truth
/// points of exp(-g^2 / (2*kappa^2)), with correspondence by point index. A
/// ground-truth point beyond the end of the prediction's point list
/// contributes similarity 0 and is counted in n_missing.
inline GpsValue gps_instance(const InstanceRecord& gt, const InstanceRecord& pred,
                             const GpsConfig& cfg) {
  cfg.validate();
  if (gt.points.empty()) {
    throw std::invalid_argument("gps_instance: ground truth has no points");
  }
  const double inv_denom = 1.0 / (2.0 * cfg.kappa * cfg.kappa);
  GpsValue out;
  double sum = 0.0;
  for (size_t i = 0; i < gt.points.size(); ++i) {
    if (i >= pred.points.size()) {
      ++out.n_missing;
      continue;
    }
    const double g = cfg.point_distance(gt.points[i], pred.points[i]);
    sum += std::exp(-g * g * inv_denom);
  }
  out.value = sum / static_cast<double>(gt.points.size());
  return out;
}

struct IouValue {
  double value = 0.0;
  bool empty_union = false;
};

/// Intersection over union of two equal-sized binary masks. An empty union
/// yields 0 with the empty_union flag set.
inline IouValue mask_iou(const Mask& m, const Mask& mhat) {
  if (m.width() != mhat.width() || m.height() != mhat.height()) {
    throw std::invalid_argument("mask_iou: mask dimensions differ");
  }
  size_t inter = 0;
  size_t uni = 0;
  const auto a = m.cells();
  const auto b = mhat.cells();
  for (size_t i = 0; i < a.size(); ++i) {
    inter += a[i] & b[i];
    uni += a[i] | b[i];
  }
  if (uni == 0) return {0.0, true};
  return {static_cast<double>(inter) / static_cast<double>(uni), false};
}

/// Masked similarity: geometric mean of the point similarity and the mask IoU.
inline double gps_masked(double gps, double iou) {
  if (!(gps >= 0.0 && gps <= 1.0) || !(iou >= 0.0 && iou <= 1.0)) {
    throw std::invalid_argument("gps_masked: inputs must be in [0, 1]");
  }
  return std::sqrt(gps * iou);
}

}  // namespace uvloss
