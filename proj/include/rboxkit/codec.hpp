#pragma once

#include <array>

#include "rboxkit/geometry.hpp"

namespace rboxkit {

/// Corner offsets of a quad relative to an anchor, normalized by the anchor
/// size: tx[i] = (x_i - x_{i,a}) / w_a, ty[i] = (y_i - y_{i,a}) / h_a.
struct RegressionTarget {
  std::array<double, 4> tx{};
  std::array<double, 4> ty{};

  friend bool operator==(const RegressionTarget&, const RegressionTarget&) = default;
};

/// Index-wise corner correspondence with the anchor's materialized corners.
/// Throws ValidationError when the anchor has a non-positive dimension.
RegressionTarget encode_obb(const RRect& anchor, const Quad& target);

/// Inverse of encode_obb. The result is not validated.
Quad decode_obb(const RRect& anchor, const RegressionTarget& t);

/// Cyclic rotation of `target` whose corners lie closest (total squared
/// distance) to `reference`. Ties keep the smaller shift, so an unrotated
/// target wins when it is already optimal.
Quad match_corner_order(const Quad& reference, const Quad& target);

}  // namespace rboxkit
