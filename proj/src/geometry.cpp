#include "rboxkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rboxkit/error.hpp"

namespace rboxkit {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kMinArea = 1e-12;
constexpr double kMinSide = 1e-9;

double length(Point2 p) { return std::hypot(p.x, p.y); }

bool finite(const Quad& q) {
  return std::all_of(q.corners.begin(), q.corners.end(),
                     [](Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); });
}

// nullptr when valid, otherwise the reason.
const char* quad_defect(const Quad& q, double* area_out) {
  if (!finite(q)) return "quad has non-finite coordinates";
  const double area = signed_area(q.corners);
  if (area_out) *area_out = area;
  if (!(std::abs(area) > kMinArea)) return "quad has zero area";
  const double orientation = area > 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 prev = q.corners[(i + 3) % 4];
    const Point2 cur = q.corners[i];
    const Point2 next = q.corners[(i + 1) % 4];
    if (orientation * cross(cur - prev, next - cur) < -kConvexEps) return "quad is not convex";
  }
  return nullptr;
}

// Sutherland-Hodgman step: keeps the part of `subject` left of edge e0->e1.
Polygon clip_half_plane(const Polygon& subject, Point2 e0, Point2 e1) {
  Polygon out;
  if (subject.empty()) return out;
  out.reserve(subject.size() + 2);
  const Point2 edge = e1 - e0;
  const double inv_len = 1.0 / length(edge);
  auto side = [&](Point2 p) { return cross(edge, p - e0) * inv_len; };

  for (std::size_t i = 0; i < subject.size(); ++i) {
    const Point2 cur = subject[i];
    const Point2 next = subject[(i + 1) % subject.size()];
    const double dc = side(cur);
    const double dn = side(next);
    const bool cur_in = dc >= -kClipEps;
    const bool next_in = dn >= -kClipEps;
    if (cur_in) out.push_back(cur);
    if (cur_in != next_in) {
      const double t = dc / (dc - dn);
      out.push_back(cur + (next - cur) * t);
    }
  }
  return out;
}

void merge_close_vertices(Polygon& poly) {
  Polygon merged;
  merged.reserve(poly.size());
  for (const Point2& p : poly) {
    if (merged.empty() || length(p - merged.back()) > kClipEps) merged.push_back(p);
  }
  while (merged.size() > 1 && length(merged.front() - merged.back()) <= kClipEps) merged.pop_back();
  poly = std::move(merged);
}

bool lexicographic_less(const Quad& a, const Quad& b) {
  for (std::size_t i = 0; i < 4; ++i) {
    if (a.corners[i].x != b.corners[i].x) return a.corners[i].x < b.corners[i].x;
    if (a.corners[i].y != b.corners[i].y) return a.corners[i].y < b.corners[i].y;
  }
  return false;
}

double cosine_rule_angle(Point2 vertex, Point2 left, Point2 right) {
  // Squared lengths avoid a sqrt round trip, so right angles on exact inputs stay exact.
  const Point2 u = left - vertex, v = right - vertex, w = right - left;
  const double a2 = dot(u, u), b2 = dot(v, v), d2 = dot(w, w);
  const double a = std::sqrt(a2), b = std::sqrt(b2);
  if (a < kMinSide || b < kMinSide) throw DegenerateError("quad has a degenerate side");
  const double c = std::clamp((a2 + b2 - d2) / (2.0 * a * b), -1.0, 1.0);
  return std::acos(c) * kRadToDeg;
}

}  // namespace

double signed_area(std::span<const Point2> pts) {
  double twice = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    twice += cross(pts[i], pts[(i + 1) % pts.size()]);
  }
  return 0.5 * twice;
}

bool is_valid_quad(const Quad& q) { return quad_defect(q, nullptr) == nullptr; }

Quad canonicalize(const Quad& q) {
  double area = 0.0;
  if (const char* defect = quad_defect(q, &area)) throw ValidationError(defect);
  if (area > 0.0) return q;
  return Quad{{q.corners[0], q.corners[3], q.corners[2], q.corners[1]}};
}

double quad_area(const Quad& q) { return signed_area(canonicalize(q).corners); }

Polygon convex_intersect(const Quad& a, const Quad& b) {
  const Quad ca = canonicalize(a);
  const Quad cb = canonicalize(b);
  Polygon poly(ca.corners.begin(), ca.corners.end());
  for (std::size_t i = 0; i < 4 && !poly.empty(); ++i) {
    poly = clip_half_plane(poly, cb.corners[i], cb.corners[(i + 1) % 4]);
  }
  merge_close_vertices(poly);
  if (poly.size() < 3) return {};
  const double scale = std::min(signed_area(ca.corners), signed_area(cb.corners));
  if (signed_area(poly) <= kMinArea * std::max(1.0, scale)) return {};
  return poly;
}

double rotated_iou(const Quad& a, const Quad& b) {
  // Fixed argument order makes the result exactly symmetric.
  const Quad ca = canonicalize(a);
  const Quad cb = canonicalize(b);
  const Quad& first = lexicographic_less(cb, ca) ? cb : ca;
  const Quad& second = lexicographic_less(cb, ca) ? ca : cb;

  const Polygon inter = convex_intersect(first, second);
  if (inter.empty()) return 0.0;
  const double inter_area = signed_area(inter);
  const double union_area = signed_area(ca.corners) + signed_area(cb.corners) - inter_area;
  if (!(union_area > 0.0)) return 0.0;
  return std::clamp(inter_area / union_area, 0.0, 1.0);
}

double hbb_iou(const AABB& a, const AABB& b) {
  if (a.w < 0 || a.h < 0 || b.w < 0 || b.h < 0) throw ValidationError("AABB has negative size");
  const double iw = std::min(a.xmax(), b.xmax()) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax(), b.ymax()) - std::max(a.ymin, b.ymin);
  const double inter = std::max(0.0, iw) * std::max(0.0, ih);
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::array<double, 4> interior_angles(const Quad& q) {
  canonicalize(q);
  std::array<double, 4> angles{};
  for (std::size_t i = 0; i < 4; ++i) {
    angles[i] = cosine_rule_angle(q.corners[i], q.corners[(i + 3) % 4], q.corners[(i + 1) % 4]);
  }
  return angles;
}

RRect min_area_rect(const Quad& q) {
  const Quad c = canonicalize(q);

  double best_area = std::numeric_limits<double>::infinity();
  Point2 best_u{1.0, 0.0};
  double u_lo = 0, u_hi = 0, n_lo = 0, n_hi = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 edge = c.corners[(i + 1) % 4] - c.corners[i];
    const double len = length(edge);
    if (len < kMinSide) continue;
    const Point2 u = edge * (1.0 / len);
    const Point2 n{-u.y, u.x};
    double ulo = std::numeric_limits<double>::infinity(), uhi = -ulo;
    double nlo = ulo, nhi = -ulo;
    for (const Point2& p : c.corners) {
      ulo = std::min(ulo, dot(p, u));
      uhi = std::max(uhi, dot(p, u));
      nlo = std::min(nlo, dot(p, n));
      nhi = std::max(nhi, dot(p, n));
    }
    const double area = (uhi - ulo) * (nhi - nlo);
    if (area < best_area) {
      best_area = area;
      best_u = u;
      u_lo = ulo, u_hi = uhi, n_lo = nlo, n_hi = nhi;
    }
  }

  const Point2 best_n{-best_u.y, best_u.x};
  const Point2 center = best_u * (0.5 * (u_lo + u_hi)) + best_n * (0.5 * (n_lo + n_hi));
  double extent_u = u_hi - u_lo;
  double extent_n = n_hi - n_lo;

  // The w axis is whichever rectangle axis lies closer to the front edge.
  Point2 w_axis = best_u;
  const Point2 front = q.corners[1] - q.corners[0];
  if (length(front) >= kMinSide && std::abs(dot(front, best_n)) > std::abs(dot(front, best_u))) {
    w_axis = best_n;
    std::swap(extent_u, extent_n);
  }
  const double angle = normalize_half_turn(std::atan2(w_axis.y, w_axis.x) * kRadToDeg);
  return RRect{center.x, center.y, extent_u, extent_n, angle};
}

AxisAligned axis_align(const Quad& q) {
  const RRect r = min_area_rect(q);
  const Point2 center{r.cx, r.cy};
  const double rotation = 0.0 - r.angle;
  Quad rotated;
  for (std::size_t i = 0; i < 4; ++i) rotated.corners[i] = rotate_about(q.corners[i], center, rotation);
  return AxisAligned{bounding_box(rotated), rotation};
}

Quad rrect_to_quad(const RRect& r) {
  const double rad = r.angle * kDegToRad;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  const double hw = 0.5 * r.w;
  const double hh = 0.5 * r.h;
  const std::array<Point2, 4> local{{{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}}};
  Quad q;
  for (std::size_t i = 0; i < 4; ++i) {
    q.corners[i] = {r.cx + c * local[i].x - s * local[i].y, r.cy + s * local[i].x + c * local[i].y};
  }
  return q;
}

AABB bounding_box(const Quad& q) {
  double xmin = q.corners[0].x, xmax = xmin, ymin = q.corners[0].y, ymax = ymin;
  for (const Point2& p : q.corners) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  return AABB{xmin, ymin, xmax - xmin, ymax - ymin};
}

Quad aabb_to_quad(const AABB& b) {
  Quad q;
  q.corners = {Point2{b.xmin, b.ymin}, Point2{b.xmax(), b.ymin}, Point2{b.xmax(), b.ymax()}, Point2{b.xmin, b.ymax()}};
  return q;
}

Point2 rotate_about(Point2 p, Point2 center, double degrees) {
  const double rad = degrees * kDegToRad;
  const double c = std::cos(rad);
  const double s = std::sin(rad);
  const Point2 d = p - center;
  return {center.x + c * d.x - s * d.y, center.y + s * d.x + c * d.y};
}

double normalize_half_turn(double degrees) {
  double a = std::fmod(degrees, 180.0);
  if (a < 0.0) a += 180.0;
  if (a >= 180.0) a -= 180.0;
  return a;
}

}  // namespace rboxkit
