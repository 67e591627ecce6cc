#include "rboxkit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rboxkit/error.hpp"

namespace rboxkit {
namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;
constexpr double kRadPerDeg = std::numbers::pi / 180.0;
constexpr double kCosNudge = 1e-12;
constexpr double kMinSide = 1e-9;

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// -log(p) on the clamped probability; derivative is zero where clamping is active.
ValueAndDerivative neg_log(double p) {
  const double clamped = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return {-std::log(clamped), clamped == p ? -1.0 / p : 0.0};
}

// Interior angle (degrees) at `vertex` between the sides to `prev` and
// `next`, plus its gradient with respect to the three points.
struct AngleWithGrad {
  double degrees;
  Point2 d_vertex, d_prev, d_next;
};

AngleWithGrad angle_with_grad(Point2 vertex, Point2 prev, Point2 next) {
  const Point2 va = vertex - prev;
  const Point2 vb = vertex - next;
  const Point2 pn = next - prev;
  const double a2 = dot(va, va), b2 = dot(vb, vb), d2 = dot(pn, pn);
  const double a = std::sqrt(a2);
  const double b = std::sqrt(b2);
  const double d = std::sqrt(d2);
  if (a < kMinSide || b < kMinSide) throw DegenerateError("quad has a degenerate side");

  // Squared lengths keep exact right angles exact.
  double c = (a2 + b2 - d2) / (2.0 * a * b);
  c = std::clamp(c, -1.0 + kCosNudge, 1.0 - kCosNudge);
  const double dtheta_dc = -kDegPerRad / std::sqrt(1.0 - c * c);

  const double dc_da = (a * a - b * b + d * d) / (2.0 * a * a * b);
  const double dc_db = (b * b - a * a + d * d) / (2.0 * a * b * b);
  const double dc_dd = -d / (a * b);

  const Point2 ua = va * (1.0 / a);
  const Point2 ub = vb * (1.0 / b);
  const Point2 ud = d > 0.0 ? pn * (1.0 / d) : Point2{};

  AngleWithGrad out;
  out.degrees = std::acos(c) * kDegPerRad;
  out.d_vertex = (ua * dc_da + ub * dc_db) * dtheta_dc;
  out.d_prev = (ua * -dc_da - ud * dc_dd) * dtheta_dc;
  out.d_next = (ub * -dc_db + ud * dc_dd) * dtheta_dc;
  return out;
}

}  // namespace

ValueAndDerivative smooth_l1(double x) {
  const double ax = std::abs(x);
  if (ax < 1.0) return {0.5 * x * x, x};
  return {ax - 0.5, sign(x)};
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

RpnLoss rpn_loss(const RpnBatch& batch) {
  const std::size_t n = batch.objectness.size();
  if (n == 0) throw ValidationError("rpn_loss: empty batch");
  if (batch.labels.size() != n || batch.predicted.size() != n || batch.targets.size() != n) {
    throw ValidationError("rpn_loss: batch fields have mismatched lengths");
  }
  if (!(batch.n_obj > 0.0) || !(batch.n_reg > 0.0)) {
    throw ValidationError("rpn_loss: normalizers must be positive");
  }

  RpnLoss out;
  out.d_objectness.assign(n, 0.0);
  out.d_predicted.assign(n, RegressionTarget{});
  std::vector<double> obj_terms(n, 0.0);
  std::vector<double> reg_terms(n, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const int label = batch.labels[i];
    if (label != 0 && label != 1) throw ValidationError("rpn_loss: labels must be 0 or 1");
    if (!std::isfinite(batch.objectness[i])) throw ValidationError("rpn_loss: non-finite objectness");
    if (label == 0) continue;

    const ValueAndDerivative nl = neg_log(batch.objectness[i]);
    obj_terms[i] = nl.value;
    out.d_objectness[i] = nl.derivative / batch.n_obj;

    const double reg_scale = batch.lambda / batch.n_reg;
    double reg = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const ValueAndDerivative sx = smooth_l1(batch.predicted[i].tx[k] - batch.targets[i].tx[k]);
      const ValueAndDerivative sy = smooth_l1(batch.predicted[i].ty[k] - batch.targets[i].ty[k]);
      reg += sx.value + sy.value;
      out.d_predicted[i].tx[k] = reg_scale * sx.derivative;
      out.d_predicted[i].ty[k] = reg_scale * sy.derivative;
    }
    reg_terms[i] = reg;
  }

  out.objectness_term = pairwise_sum(obj_terms) / batch.n_obj;
  out.regression_term = batch.lambda * pairwise_sum(reg_terms) / batch.n_reg;
  out.loss = out.objectness_term + out.regression_term;
  return out;
}

std::string_view to_string(AngleLossKind kind) {
  switch (kind) {
    case AngleLossKind::tangent_l1: return "tangent_l1";
    case AngleLossKind::smooth_l1: return "smooth_l1";
    case AngleLossKind::l2: return "l2";
  }
  return "unknown";
}

AngleLossKind angle_loss_kind_from_string(std::string_view name) {
  if (name == "tangent_l1") return AngleLossKind::tangent_l1;
  if (name == "smooth_l1") return AngleLossKind::smooth_l1;
  if (name == "l2") return AngleLossKind::l2;
  throw ValidationError("unknown angle loss variant '" + std::string(name) + "'");
}

ValueAndDerivative angle_penalty(double angle_deg, AngleLossKind kind) {
  const double dev = angle_deg - 90.0;
  switch (kind) {
    case AngleLossKind::tangent_l1: {
      const double r = dev * kRadPerDeg;
      const double c = std::cos(r);
      if (std::abs(c) < 1e-12) throw DegenerateError("tangent angle loss is unbounded at 0 or 180 degrees");
      const double t = std::tan(r);
      return {std::abs(t), sign(t) * kRadPerDeg / (c * c)};
    }
    case AngleLossKind::smooth_l1: {
      const ValueAndDerivative s = smooth_l1(std::abs(dev));
      return {s.value, s.derivative * sign(dev)};
    }
    case AngleLossKind::l2:
      return {dev * dev, 2.0 * dev};
  }
  return {};
}

AngleLoss angle_loss(const Quad& q, AngleLossKind kind) {
  canonicalize(q);
  AngleLoss out;
  for (std::size_t l = 0; l < 3; ++l) {
    const std::size_t prev = (l + 3) % 4;
    const std::size_t next = (l + 1) % 4;
    const AngleWithGrad ag = angle_with_grad(q.corners[l], q.corners[prev], q.corners[next]);
    const ValueAndDerivative pen = angle_penalty(ag.degrees, kind);
    out.loss += pen.value;
    auto accumulate = [&](std::size_t corner, Point2 g) {
      out.grad[2 * corner] += pen.derivative * g.x;
      out.grad[2 * corner + 1] += pen.derivative * g.y;
    };
    accumulate(l, ag.d_vertex);
    accumulate(prev, ag.d_prev);
    accumulate(next, ag.d_next);
  }
  return out;
}

RoiLoss roi_loss(const RoiSample& s) {
  if (s.class_probs.size() < 2) throw ValidationError("roi_loss: need background plus at least one class");
  const int num_classes = static_cast<int>(s.class_probs.size()) - 1;
  if (s.true_class < 0 || s.true_class > num_classes) {
    throw ValidationError("roi_loss: true class " + std::to_string(s.true_class) + " outside [0, " +
                          std::to_string(num_classes) + "]");
  }
  double total = 0.0;
  for (double p : s.class_probs) {
    if (!std::isfinite(p) || p < 0.0) throw ValidationError("roi_loss: invalid class probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("roi_loss: class probabilities must sum to 1");

  RoiLoss out;
  out.d_class_probs.assign(s.class_probs.size(), 0.0);
  const ValueAndDerivative nl = neg_log(s.class_probs[s.true_class]);
  out.cls_term = nl.value;
  out.d_class_probs[s.true_class] = nl.derivative;

  if (s.true_class >= 1) {
    for (std::size_t k = 0; k < 4; ++k) {
      const ValueAndDerivative h = smooth_l1(s.hbb_pred[k] - s.hbb_true[k]);
      out.hbb_term += h.value;
      out.d_hbb_pred[k] = s.lambda * h.derivative;
    }
    if (!s.hbb_only) {
      for (std::size_t k = 0; k < 4; ++k) {
        const ValueAndDerivative sx = smooth_l1(s.obb_pred.tx[k] - s.obb_true.tx[k]);
        const ValueAndDerivative sy = smooth_l1(s.obb_pred.ty[k] - s.obb_true.ty[k]);
        out.obb_term += sx.value + sy.value;
        out.d_obb_pred.tx[k] = s.lambda * sx.derivative;
        out.d_obb_pred.ty[k] = s.lambda * sy.derivative;
      }
      const AngleLoss al = angle_loss(s.quad, s.angle_kind);
      out.angle_term = al.loss;
      for (std::size_t k = 0; k < 8; ++k) out.d_quad[k] = s.lambda * al.grad[k];
    }
  }
  out.loss = out.cls_term + s.lambda * (out.hbb_term + out.obb_term + out.angle_term);
  return out;
}

}  // namespace rboxkit
