#include "rboxkit/codec.hpp"

#include <cmath>
#include <limits>

#include "rboxkit/error.hpp"

namespace rboxkit {

RegressionTarget encode_obb(const RRect& anchor, const Quad& target) {
  if (!(anchor.w > 0.0) || !(anchor.h > 0.0)) {
    throw ValidationError("anchor width and height must be positive");
  }
  const Quad base = rrect_to_quad(anchor);
  RegressionTarget t;
  for (std::size_t i = 0; i < 4; ++i) {
    t.tx[i] = (target.corners[i].x - base.corners[i].x) / anchor.w;
    t.ty[i] = (target.corners[i].y - base.corners[i].y) / anchor.h;
  }
  return t;
}

Quad decode_obb(const RRect& anchor, const RegressionTarget& t) {
  const Quad base = rrect_to_quad(anchor);
  Quad q;
  for (std::size_t i = 0; i < 4; ++i) {
    q.corners[i] = {t.tx[i] * anchor.w + base.corners[i].x, t.ty[i] * anchor.h + base.corners[i].y};
  }
  return q;
}

Quad match_corner_order(const Quad& reference, const Quad& target) {
  std::size_t best_shift = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t shift = 0; shift < 4; ++shift) {
    double cost = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const Point2 d = target.corners[(i + shift) % 4] - reference.corners[i];
      cost += dot(d, d);
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_shift = shift;
    }
  }
  Quad out;
  for (std::size_t i = 0; i < 4; ++i) out.corners[i] = target.corners[(i + best_shift) % 4];
  return out;
}

}  // namespace rboxkit
