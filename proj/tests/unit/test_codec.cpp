#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "rboxkit/codec.hpp"
#include "rboxkit/error.hpp"

using namespace rboxkit;

TEST(Codec, IdentityEncodesToZero) {
  const RRect anchor{50, 40, 100, 30, 45};
  EXPECT_EQ(encode_obb(anchor, rrect_to_quad(anchor)), RegressionTarget{});
  EXPECT_EQ(decode_obb(anchor, RegressionTarget{}), rrect_to_quad(anchor));
}

TEST(Codec, CornerShiftIsNormalizedByAnchorWidth) {
  const RRect anchor{50, 50, 100, 40, 0};
  Quad q = rrect_to_quad(anchor);
  q.corners[1].x += 10;
  const RegressionTarget t = encode_obb(anchor, q);
  EXPECT_DOUBLE_EQ(t.tx[1], 0.1);
  EXPECT_EQ(t.tx[0], 0.0);
  EXPECT_EQ(t.ty[1], 0.0);

  RegressionTarget d;
  d.tx[1] = 0.1;
  const Quad decoded = decode_obb(anchor, d);
  EXPECT_DOUBLE_EQ(decoded.corners[1].x, rrect_to_quad(anchor).corners[1].x + 10);
}

TEST(Codec, RejectsDegenerateAnchor) {
  const Quad q = rrect_to_quad({0, 0, 1, 1, 0});
  EXPECT_THROW(encode_obb({0, 0, 0, 10, 0}, q), ValidationError);
  EXPECT_THROW(encode_obb({0, 0, 10, -1, 0}, q), ValidationError);
}

TEST(Codec, RoundTripOnRandomPairs) {
  Rng rng(6);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const RRect anchor = rboxkit::testing::random_rrect(rng);
    const Quad q = rboxkit::testing::random_convex_quad(
        rng, {anchor.cx + rng.uniform(-20, 20), anchor.cy + rng.uniform(-20, 20)}, rng.uniform(2, 60));
    const Quad back = decode_obb(anchor, encode_obb(anchor, q));
    for (std::size_t k = 0; k < 4; ++k) {
      worst = std::max({worst, std::abs(back.corners[k].x - q.corners[k].x), std::abs(back.corners[k].y - q.corners[k].y)});
    }
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(MatchCornerOrder, PicksClosestCyclicShift) {
  const Quad ref = rrect_to_quad({0, 0, 10, 4, 0});
  Quad shifted = ref;
  std::rotate(shifted.corners.begin(), shifted.corners.begin() + 2, shifted.corners.end());
  EXPECT_EQ(match_corner_order(ref, shifted), ref);
  EXPECT_EQ(match_corner_order(ref, ref), ref);
}

TEST(MatchCornerOrder, TiesKeepOriginalOrder) {
  // A square rotated 45 degrees sits equally far from two shifts of the reference.
  const Quad ref = rrect_to_quad({0, 0, 2, 2, 0});
  const Quad sq = rrect_to_quad({0, 0, 2, 2, 45});
  EXPECT_EQ(match_corner_order(ref, sq), sq);
}
