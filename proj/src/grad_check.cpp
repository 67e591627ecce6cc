#include "rboxkit/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "rboxkit/error.hpp"
#include "rboxkit/geometry.hpp"
#include "rboxkit/losses.hpp"
#include "rboxkit/rng.hpp"

namespace rboxkit {
namespace {

// Keeps samples this far (in the loss's own units) from non-smooth points.
constexpr double kKinkMargin = 0.05;

double away_from_unit_kink(Rng& rng, double lo, double hi) {
  for (;;) {
    const double x = rng.uniform(lo, hi);
    if (std::abs(std::abs(x) - 1.0) > kKinkMargin) return x;
  }
}

bool angles_are_smooth_for(const Quad& q, AngleLossKind kind) {
  if (!is_valid_quad(q)) return false;
  const auto angles = interior_angles(q);
  for (std::size_t l = 0; l < 3; ++l) {
    const double dev = std::abs(angles[l] - 90.0);
    if (dev > 60.0) return false;
    if (kind == AngleLossKind::tangent_l1 && dev < kKinkMargin) return false;
    if (kind == AngleLossKind::smooth_l1 && std::abs(dev - 1.0) < kKinkMargin) return false;
  }
  return true;
}

Quad sample_near_rectangle(Rng& rng, AngleLossKind kind) {
  for (;;) {
    const RRect r{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(20, 80), rng.uniform(20, 80),
                  rng.uniform(0, 180)};
    Quad q = rrect_to_quad(r);
    for (Point2& p : q.corners) {
      p.x += rng.uniform(-3, 3);
      p.y += rng.uniform(-3, 3);
    }
    if (angles_are_smooth_for(q, kind)) return q;
  }
}

std::vector<double> flatten(const Quad& q) {
  std::vector<double> v;
  for (const Point2& p : q.corners) {
    v.push_back(p.x);
    v.push_back(p.y);
  }
  return v;
}

Quad unflatten(std::span<const double> v) {
  Quad q;
  for (std::size_t i = 0; i < 4; ++i) q.corners[i] = {v[2 * i], v[2 * i + 1]};
  return q;
}

RegressionTarget read_target(std::span<const double> v) {
  RegressionTarget t;
  for (std::size_t k = 0; k < 4; ++k) {
    t.tx[k] = v[k];
    t.ty[k] = v[4 + k];
  }
  return t;
}

void write_target(const RegressionTarget& t, std::span<double> out) {
  for (std::size_t k = 0; k < 4; ++k) {
    out[k] = t.tx[k];
    out[4 + k] = t.ty[k];
  }
}

RegressionTarget offset_target(Rng& rng, const RegressionTarget& base) {
  RegressionTarget t = base;
  for (std::size_t k = 0; k < 4; ++k) {
    t.tx[k] += away_from_unit_kink(rng, -2.5, 2.5);
    t.ty[k] += away_from_unit_kink(rng, -2.5, 2.5);
  }
  return t;
}

RegressionTarget random_target(Rng& rng) {
  RegressionTarget t;
  for (std::size_t k = 0; k < 4; ++k) {
    t.tx[k] = rng.uniform(-1.5, 1.5);
    t.ty[k] = rng.uniform(-1.5, 1.5);
  }
  return t;
}

double check_smooth_l1(Rng& rng, double h) {
  const std::vector<double> point{away_from_unit_kink(rng, -3.0, 3.0)};
  return grad_check(
      [](std::span<const double> x, std::span<double> g) {
        const ValueAndDerivative s = smooth_l1(x[0]);
        g[0] = s.derivative;
        return s.value;
      },
      point, h);
}

double check_rpn(Rng& rng, double h) {
  const std::size_t n = 1 + rng.below(16);
  RpnBatch batch;
  batch.n_obj = static_cast<double>(n);
  batch.n_reg = static_cast<double>(1 + rng.below(n));
  std::vector<double> point;
  for (std::size_t i = 0; i < n; ++i) {
    batch.labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
    point.push_back(rng.uniform(0.05, 0.95));
  }
  for (std::size_t i = 0; i < n; ++i) {
    batch.targets.push_back(random_target(rng));
    std::vector<double> t(8);
    write_target(offset_target(rng, batch.targets.back()), t);
    point.insert(point.end(), t.begin(), t.end());
  }
  return grad_check(
      [batch, n](std::span<const double> x, std::span<double> g) mutable {
        batch.objectness.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
        batch.predicted.clear();
        for (std::size_t i = 0; i < n; ++i) batch.predicted.push_back(read_target(x.subspan(n + 8 * i, 8)));
        const RpnLoss l = rpn_loss(batch);
        std::copy(l.d_objectness.begin(), l.d_objectness.end(), g.begin());
        for (std::size_t i = 0; i < n; ++i) write_target(l.d_predicted[i], g.subspan(n + 8 * i, 8));
        return l.loss;
      },
      point, h);
}

// Class probabilities are parameterized by softmax logits so that every
// perturbed point remains a valid distribution; the analytic gradient is
// pulled back through the softmax Jacobian.
double check_roi(Rng& rng, double h, std::size_t trial) {
  const std::size_t classes = 2 + rng.below(5);
  RoiSample base;
  base.true_class = static_cast<int>(rng.below(classes));
  base.angle_kind = static_cast<AngleLossKind>(trial % 3);
  base.obb_true = random_target(rng);
  for (double& v : base.hbb_true) v = rng.uniform(-1.5, 1.5);

  std::vector<double> point;
  for (std::size_t j = 0; j < classes; ++j) point.push_back(rng.uniform(-2.0, 2.0));
  std::vector<double> obb(8);
  write_target(offset_target(rng, base.obb_true), obb);
  point.insert(point.end(), obb.begin(), obb.end());
  for (std::size_t k = 0; k < 4; ++k) point.push_back(base.hbb_true[k] + away_from_unit_kink(rng, -2.5, 2.5));
  const std::vector<double> quad = flatten(sample_near_rectangle(rng, base.angle_kind));
  point.insert(point.end(), quad.begin(), quad.end());

  return grad_check(
      [base, classes](std::span<const double> x, std::span<double> g) mutable {
        const auto logits = x.first(classes);
        const double zmax = *std::max_element(logits.begin(), logits.end());
        std::vector<double> p(classes);
        double z = 0.0;
        for (std::size_t j = 0; j < classes; ++j) z += (p[j] = std::exp(logits[j] - zmax));
        for (double& v : p) v /= z;
        base.class_probs = p;
        base.obb_pred = read_target(x.subspan(classes, 8));
        for (std::size_t k = 0; k < 4; ++k) base.hbb_pred[k] = x[classes + 8 + k];
        base.quad = unflatten(x.subspan(classes + 12, 8));

        const RoiLoss l = roi_loss(base);
        double weighted = 0.0;
        for (std::size_t j = 0; j < classes; ++j) weighted += l.d_class_probs[j] * p[j];
        for (std::size_t j = 0; j < classes; ++j) g[j] = p[j] * (l.d_class_probs[j] - weighted);
        write_target(l.d_obb_pred, g.subspan(classes, 8));
        for (std::size_t k = 0; k < 4; ++k) g[classes + 8 + k] = l.d_hbb_pred[k];
        std::copy(l.d_quad.begin(), l.d_quad.end(), g.begin() + static_cast<std::ptrdiff_t>(classes + 12));
        return l.loss;
      },
      point, h);
}

double check_angle(Rng& rng, double h, AngleLossKind kind) {
  const std::vector<double> point = flatten(sample_near_rectangle(rng, kind));
  return grad_check(
      [kind](std::span<const double> x, std::span<double> g) {
        const AngleLoss l = angle_loss(unflatten(x), kind);
        std::copy(l.grad.begin(), l.grad.end(), g.begin());
        return l.loss;
      },
      point, h);
}

}  // namespace

double grad_check(const DifferentiableFn& f, std::span<const double> point, double h) {
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> analytic(x.size(), 0.0);
  std::vector<double> scratch(x.size(), 0.0);
  const double f0 = f(x, analytic);
  if (!std::isfinite(f0)) throw Error("grad_check: non-finite function value");

  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(analytic[i])) throw Error("grad_check: non-finite analytic gradient");
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f(x, scratch);
    x[i] = saved - h;
    const double fm = f(x, scratch);
    x[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) throw Error("grad_check: non-finite function value");
    const double numeric = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
  }
  return worst;
}

std::string_view to_string(GradTarget target) {
  switch (target) {
    case GradTarget::smooth_l1: return "smooth_l1";
    case GradTarget::rpn: return "rpn";
    case GradTarget::roi: return "roi";
    case GradTarget::angle_tangent_l1: return "angle:tangent_l1";
    case GradTarget::angle_smooth_l1: return "angle:smooth_l1";
    case GradTarget::angle_l2: return "angle:l2";
  }
  return "unknown";
}

std::vector<GradTarget> parse_grad_targets(std::string_view names) {
  if (names == "all") {
    return {GradTarget::smooth_l1,        GradTarget::rpn,             GradTarget::roi,
            GradTarget::angle_tangent_l1, GradTarget::angle_smooth_l1, GradTarget::angle_l2};
  }
  if (names == "smooth_l1") return {GradTarget::smooth_l1};
  if (names == "rpn") return {GradTarget::rpn};
  if (names == "roi") return {GradTarget::roi};
  if (names == "angle") return {GradTarget::angle_tangent_l1, GradTarget::angle_smooth_l1, GradTarget::angle_l2};
  if (names.starts_with("angle:")) {
    switch (angle_loss_kind_from_string(names.substr(6))) {
      case AngleLossKind::tangent_l1: return {GradTarget::angle_tangent_l1};
      case AngleLossKind::smooth_l1: return {GradTarget::angle_smooth_l1};
      case AngleLossKind::l2: return {GradTarget::angle_l2};
    }
  }
  throw ValidationError("unknown loss selector '" + std::string(names) + "'");
}

GradSuiteResult run_grad_suite(GradTarget target, std::size_t trials, std::uint64_t seed, double h) {
  Rng rng(seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(target) + 1)));
  GradSuiteResult result{target, trials, 0.0};
  for (std::size_t trial = 0; trial < trials; ++trial) {
    double err = 0.0;
    switch (target) {
      case GradTarget::smooth_l1: err = check_smooth_l1(rng, h); break;
      case GradTarget::rpn: err = check_rpn(rng, h); break;
      case GradTarget::roi: err = check_roi(rng, h, trial); break;
      case GradTarget::angle_tangent_l1: err = check_angle(rng, h, AngleLossKind::tangent_l1); break;
      case GradTarget::angle_smooth_l1: err = check_angle(rng, h, AngleLossKind::smooth_l1); break;
      case GradTarget::angle_l2: err = check_angle(rng, h, AngleLossKind::l2); break;
    }
    result.max_rel_error = std::max(result.max_rel_error, err);
  }
  return result;
}

}  // namespace rboxkit
