#pragma once

// Detection losses with analytic gradients: smooth-L1, the rotated-RPN
// objectness/regression loss, the quadrilateral angle losses and the joint
// ROI loss.

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "rboxkit/codec.hpp"
#include "rboxkit/geometry.hpp"

namespace rboxkit {

inline constexpr double kProbClamp = 1e-12;

struct ValueAndDerivative {
  double value = 0.0;
  double derivative = 0.0;
};

/// 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise.
ValueAndDerivative smooth_l1(double x);

/// Sum with a fixed pairwise tree so results do not depend on threading or
/// accumulation order within the tree.
double pairwise_sum(std::span<const double> values);

struct RpnBatch {
  std::vector<double> objectness;            // predicted p_i in (0, 1)
  std::vector<int> labels;                   // ground-truth p_i* in {0, 1}
  std::vector<RegressionTarget> predicted;   // t_i
  std::vector<RegressionTarget> targets;     // t_i*
  double n_obj = 1.0;
  double n_reg = 1.0;
  double lambda = 10.0;
};

struct RpnLoss {
  double loss = 0.0;
  double objectness_term = 0.0;
  double regression_term = 0.0;
  std::vector<double> d_objectness;
  std::vector<RegressionTarget> d_predicted;
};

/// (1/N_obj) sum -p* log p + lambda (1/N_reg) sum p* smoothL1(t - t*).
/// Throws ValidationError on an empty or inconsistent batch.
RpnLoss rpn_loss(const RpnBatch& batch);

enum class AngleLossKind { tangent_l1, smooth_l1, l2 };

std::string_view to_string(AngleLossKind kind);
/// Accepts "tangent_l1", "smooth_l1" and "l2".
AngleLossKind angle_loss_kind_from_string(std::string_view name);

/// Penalty for a single interior angle (degrees) and its derivative with
/// respect to that angle.
ValueAndDerivative angle_penalty(double angle_deg, AngleLossKind kind);

struct AngleLoss {
  double loss = 0.0;
  std::array<double, 8> grad{};  // d/d(x0, y0, x1, y1, x2, y2, x3, y3)
};

/// Sum of angle penalties over the interior angles at corners 0, 1 and 2.
AngleLoss angle_loss(const Quad& q, AngleLossKind kind);

struct RoiSample {
  std::vector<double> class_probs;  // p_0 .. p_K, p_0 = background
  int true_class = 0;               // u
  RegressionTarget obb_pred;        // t^u
  RegressionTarget obb_true;        // v
  std::array<double, 4> hbb_pred{};  // xmin, ymin, w, h offsets
  std::array<double, 4> hbb_true{};
  Quad quad;                         // predicted quadrilateral for the angle term
  double lambda = 1.0;
  AngleLossKind angle_kind = AngleLossKind::l2;
  bool hbb_only = false;
};

struct RoiLoss {
  double loss = 0.0;
  double cls_term = 0.0;
  double hbb_term = 0.0;
  double obb_term = 0.0;
  double angle_term = 0.0;
  std::vector<double> d_class_probs;
  RegressionTarget d_obb_pred;
  std::array<double, 4> d_hbb_pred{};
  std::array<double, 8> d_quad{};
};

/// -log p_u + lambda [u >= 1] (L_hbb + L_obb + L_angle). The HBB-only mode
/// drops the OBB and angle terms.
RoiLoss roi_loss(const RoiSample& sample);

}  // namespace rboxkit
