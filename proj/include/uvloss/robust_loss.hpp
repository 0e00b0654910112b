#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uvloss {

/// Scale factor of the dense-point loss. Valid range is (0, 1/2].
class LossParams {
 public:
  explicit LossParams(double omega) : omega_(omega) {
    if (!(omega > 0.0 && omega <= 0.5)) {
      throw std::invalid_argument("LossParams: omega must be in (0, 0.5], got " +
                                  std::to_string(omega));
    }
  }

  double omega() const { return omega_; }

 private:
  double omega_;
};

/// Signed prediction-minus-target difference. Rejects NaN/Inf on construction.
class Residual {
 public:
  explicit Residual(double x) : x_(x) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument("Residual: value must be finite");
    }
  }

  double value() const { return x_; }

 private:
  double x_;
};

// ---------------------------------------------------------------------------
// Scalar kernels. The double overloads are the unchecked fast path; the
// strong-typed overloads below validate via LossParams/Residual.
// ---------------------------------------------------------------------------

/// Dense-point loss: omega*ln(1+x^2) inside |x|<1, linear tail outside.
/// Both branches meet at omega*ln(2).
inline double dp_loss(double x, double omega) {
  const double ax = std::abs(x);
  if (ax < 1.0) return omega * std::log1p(x * x);
  return omega * ((ax - 1.0) + std::numbers::ln2);
}

/// Exact derivative of dp_loss: 2*omega*x/(1+x^2) inside, omega*sign(x)
/// outside. Odd in x and continuous at |x| = 1 (both branches give +-omega).
inline double dp_grad(double x, double omega) {
  const double ax = std::abs(x);
  if (ax < 1.0) return 2.0 * omega * x / (1.0 + x * x);
  return x > 0.0 ? omega : -omega;
}

/// Magnitude-form variant of dp_grad: omega*|x|/(1+x^2) inside, omega
/// outside. Not the derivative of dp_loss (missing factor 2 and sign,
/// discontinuous at |x| = 1); kept only so the two forms can be charted
/// side by side. Never use for optimization.
inline double dp_grad_magnitude_form(double x, double omega) {
  const double ax = std::abs(x);
  if (ax < 1.0) return omega * ax / (1.0 + x * x);
  return omega;
}

/// Smooth-L1 with transition fixed at |x| = 1: 0.5*x^2 inside, |x|-0.5 outside.
inline double smooth_l1(double x) {
  const double ax = std::abs(x);
  if (ax < 1.0) return 0.5 * x * x;
  return ax - 0.5;
}

/// Derivative of smooth_l1: x inside, sign(x) outside.
inline double smooth_l1_grad(double x) {
  const double ax = std::abs(x);
  if (ax < 1.0) return x;
  return x > 0.0 ? 1.0 : -1.0;
}

/// Magnitude-form variant of smooth_l1_grad (|x| inside, 1 outside).
/// Comparison-only, same caveat as dp_grad_magnitude_form.
inline double smooth_l1_grad_magnitude_form(double x) {
  const double ax = std::abs(x);
  if (ax < 1.0) return ax;
  return 1.0;
}

inline double dp_loss(Residual x, const LossParams& p) { return dp_loss(x.value(), p.omega()); }
inline double dp_grad(Residual x, const LossParams& p) { return dp_grad(x.value(), p.omega()); }
inline double smooth_l1(Residual x) { return smooth_l1(x.value()); }
inline double smooth_l1_grad(Residual x) { return smooth_l1_grad(x.value()); }

// ---------------------------------------------------------------------------
// LossKind: tagged choice between the two kernels.
// ---------------------------------------------------------------------------

class LossKind {
 public:
  static LossKind dense_point(double omega) { return LossKind(Tag::kDensePoint, LossParams(omega)); }
  static LossKind smooth_l1() { return LossKind(Tag::kSmoothL1, LossParams(0.5)); }

  bool is_dense_point() const { return tag_ == Tag::kDensePoint; }

  double omega() const {
    if (!is_dense_point()) throw std::logic_error("LossKind: omega is only defined for dense_point");
    return params_.omega();
  }

  double loss(double x) const {
    return is_dense_point() ? dp_loss(x, params_.omega()) : uvloss::smooth_l1(x);
  }

  double grad(double x) const {
    return is_dense_point() ? dp_grad(x, params_.omega()) : uvloss::smooth_l1_grad(x);
  }

  double grad_magnitude_form(double x) const {
    return is_dense_point() ? dp_grad_magnitude_form(x, params_.omega())
                            : uvloss::smooth_l1_grad_magnitude_form(x);
  }

  std::string name() const { return is_dense_point() ? "dense_point" : "smooth_l1"; }

 private:
  enum class Tag { kDensePoint, kSmoothL1 };

  LossKind(Tag tag, LossParams params) : tag_(tag), params_(params) {}

  Tag tag_;
  LossParams params_;  // meaningful only for kDensePoint
};

// ---------------------------------------------------------------------------
// Batch reduction.
// ---------------------------------------------------------------------------

enum class Reduction { kMean, kSum };

struct BatchLossResult {
  double value = 0.0;
  std::vector<double> grads;  // same length as the input residuals
};

/// Reduces per-element losses and returns per-element gradients with matching
/// scaling (divided by the count for mean reduction). Empty input is an error.
inline BatchLossResult batch_loss(std::span<const Residual> residuals, const LossKind& kind,
                                  Reduction reduction = Reduction::kMean) {
  if (residuals.empty()) {
    throw std::invalid_argument("batch_loss: residuals must be non-empty");
  }
  BatchLossResult out;
  out.grads.reserve(residuals.size());
  double sum = 0.0;
  for (const Residual& r : residuals) {
    sum += kind.loss(r.value());
    out.grads.push_back(kind.grad(r.value()));
  }
  if (reduction == Reduction::kMean) {
    const double inv = 1.0 / static_cast<double>(residuals.size());
    sum *= inv;
    for (double& g : out.grads) g *= inv;
  }
  out.value = sum;
  return out;
}

}  // namespace uvloss
