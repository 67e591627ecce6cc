#pragma once

// Floating-point geometry for convex quadrilaterals and rotated rectangles.
//
// Conventions: pixel coordinates, angles in degrees at the API boundary,
// rotations counter-clockwise in the (x right, y up) sense. A valid quad is
// finite, simple, convex and has non-zero area; corner 0 marks the object
// front and is preserved by canonicalization.

#include <array>
#include <span>
#include <vector>

namespace rboxkit {

inline constexpr double kConvexEps = 1e-9;
inline constexpr double kClipEps = 1e-9;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(Point2 a, double s) { return {a.x * s, a.y * s}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }

struct Quad {
  std::array<Point2, 4> corners{};

  friend bool operator==(const Quad&, const Quad&) = default;
};

/// Rotated rectangle. `angle` is measured from +x to the w edge, in [0, 180).
struct RRect {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double angle = 0.0;

  friend bool operator==(const RRect&, const RRect&) = default;
};

/// Axis-aligned box given by its upper-left corner and size.
struct AABB {
  double xmin = 0.0;
  double ymin = 0.0;
  double w = 0.0;
  double h = 0.0;

  double xmax() const { return xmin + w; }
  double ymax() const { return ymin + h; }
  double area() const { return w * h; }

  friend bool operator==(const AABB&, const AABB&) = default;
};

using Polygon = std::vector<Point2>;

/// Signed shoelace area; positive for counter-clockwise order.
double signed_area(std::span<const Point2> pts);

/// True when `q` satisfies every quad invariant.
bool is_valid_quad(const Quad& q);

/// Validates `q` and returns it in counter-clockwise order with the same
/// physical corner at index 0. Throws ValidationError.
Quad canonicalize(const Quad& q);

double quad_area(const Quad& q);

/// Vertices of a ∩ b in counter-clockwise order; empty when the overlap has
/// zero area.
Polygon convex_intersect(const Quad& a, const Quad& b);

double rotated_iou(const Quad& a, const Quad& b);

double hbb_iou(const AABB& a, const AABB& b);

/// Interior angle at each corner (degrees), evaluated with the cosine rule
/// on the two sides meeting there. Throws DegenerateError on a side shorter
/// than 1e-9.
std::array<double, 4> interior_angles(const Quad& q);

RRect min_area_rect(const Quad& q);

struct AxisAligned {
  AABB box;
  double rotation = 0.0;  // degrees applied about the min-area-rect center
};

/// Rotates `q` about its minimum-area-rectangle center so that rectangle
/// becomes axis-aligned.
AxisAligned axis_align(const Quad& q);

/// Corner 0 is the rotated image of the local (-w/2, -h/2) corner; order is
/// counter-clockwise.
Quad rrect_to_quad(const RRect& r);

/// Tight axis-aligned bounds of any quad (no validation).
AABB bounding_box(const Quad& q);

/// Corners of `b` starting at (xmin, ymin), counter-clockwise.
Quad aabb_to_quad(const AABB& b);

Point2 rotate_about(Point2 p, Point2 center, double degrees);

/// Reduces an angle in degrees to [0, 180).
double normalize_half_turn(double degrees);

}  // namespace rboxkit
