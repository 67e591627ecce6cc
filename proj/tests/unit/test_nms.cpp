#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "rboxkit/nms.hpp"

using namespace rboxkit;
using rboxkit::testing::greedy_nms_oracle;

namespace {

ScoredDetection det(const RRect& r, double score, int cls = 0) { return {rrect_to_quad(r), cls, score}; }

std::vector<ScoredDetection> random_set(Rng& rng, std::size_t n) {
  std::vector<ScoredDetection> dets;
  for (std::size_t i = 0; i < n; ++i) {
    const RRect r{rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(5, 30), rng.uniform(5, 30), rng.uniform(0, 180)};
    // Coarse scores make ties common so tie-breaking is exercised.
    dets.push_back(det(r, std::round(rng.uniform() * 20) / 20));
  }
  return dets;
}

}  // namespace

TEST(RNms, SingleAndEmpty) {
  EXPECT_TRUE(r_nms({}).empty());
  EXPECT_EQ(r_nms({det({0, 0, 4, 4, 0}, 0.3)}), std::vector<std::size_t>{0});
}

TEST(RNms, DuplicateKeepsHigherScore) {
  const RRect r{10, 10, 8, 4, 30};
  EXPECT_EQ(r_nms({det(r, 0.8), det(r, 0.9)}), std::vector<std::size_t>{1});
}

TEST(RNms, ChainKeepsEnds) {
  // A-B and B-C overlap with IoU 1/3; A-C are disjoint.
  const std::vector<ScoredDetection> dets{det({0, 0, 2, 2, 0}, 0.9), det({1, 0, 2, 2, 0}, 0.8),
                                          det({2, 0, 2, 2, 0}, 0.7)};
  auto iou = [&](std::size_t i, std::size_t j) { return rotated_iou(dets[i].quad, dets[j].quad); };
  EXPECT_NEAR(iou(0, 1), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(iou(0, 2), 0.0);
  const auto kept = r_nms(dets, 0.1);
  EXPECT_EQ(kept, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(kept, greedy_nms_oracle({0.9, 0.8, 0.7}, 0.1, iou));
}

TEST(RNms, ChainWithHalfOverlap) {
  // A = [0,2], B = [0,4], C = [2,4] along x: A-B and B-C have IoU 0.5, A-C share an edge.
  const std::vector<ScoredDetection> dets{det({1, 0, 2, 1, 0}, 0.9), det({2, 0, 4, 1, 0}, 0.8),
                                          det({3, 0, 2, 1, 0}, 0.7)};
  EXPECT_NEAR(rotated_iou(dets[0].quad, dets[1].quad), 0.5, 1e-12);
  EXPECT_NEAR(rotated_iou(dets[1].quad, dets[2].quad), 0.5, 1e-12);
  EXPECT_EQ(rotated_iou(dets[0].quad, dets[2].quad), 0.0);
  EXPECT_EQ(r_nms(dets, 0.1), (std::vector<std::size_t>{0, 2}));
}

TEST(RNms, MatchesGreedyOracle) {
  Rng rng(99);
  for (int set = 0; set < 200; ++set) {
    const auto dets = random_set(rng, 1 + rng.below(50));
    std::vector<double> scores;
    for (const auto& d : dets) scores.push_back(d.score);
    auto iou = [&](std::size_t i, std::size_t j) { return rotated_iou(dets[i].quad, dets[j].quad); };
    for (double t : {0.1, 0.3, 0.5}) {
      ASSERT_EQ(r_nms(dets, t), greedy_nms_oracle(scores, t, iou)) << "set " << set << " thresh " << t;
    }
  }
}

TEST(RNms, InvariantsOnRandomSets) {
  Rng rng(7);
  for (int set = 0; set < 100; ++set) {
    const auto dets = random_set(rng, 2 + rng.below(40));
    const auto kept = r_nms(dets);
    const auto top = std::max_element(dets.begin(), dets.end(), [](const auto& a, const auto& b) {
      return a.score < b.score;
    });
    EXPECT_EQ(kept.front(), static_cast<std::size_t>(top - dets.begin()));
    for (std::size_t a = 0; a < kept.size(); ++a) {
      for (std::size_t b = a + 1; b < kept.size(); ++b) {
        EXPECT_LE(rotated_iou(dets[kept[a]].quad, dets[kept[b]].quad), kDefaultRnmsThresh);
      }
    }
    std::vector<ScoredDetection> survivors;
    for (std::size_t i : kept) survivors.push_back(dets[i]);
    EXPECT_EQ(r_nms(survivors).size(), survivors.size());
  }
}

TEST(RNms, PerClassSeparatesClasses) {
  const RRect r{10, 10, 8, 4, 30};
  const std::vector<ScoredDetection> dets{det(r, 0.9, 1), det(r, 0.8, 2), det(r, 0.7, 1)};
  auto kept = r_nms_per_class(dets);
  std::sort(kept.begin(), kept.end());
  EXPECT_EQ(kept, (std::vector<std::size_t>{0, 1}));
}

TEST(RNms, DefaultThreshold) { EXPECT_EQ(kDefaultRnmsThresh, 0.1); }

TEST(SoftNms, DisjointUnchanged) {
  const std::vector<ScoredBox> boxes{{{0, 0, 2, 2}, 0, 0.9}, {{5, 5, 2, 2}, 0, 0.8}};
  const auto out = soft_nms(boxes);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].score, 0.9);
  EXPECT_EQ(out[1].score, 0.8);
}

TEST(SoftNms, IdenticalBoxIsDropped) {
  const std::vector<ScoredBox> boxes{{{0, 0, 2, 2}, 0, 0.9}, {{0, 0, 2, 2}, 0, 0.8}};
  const auto out = soft_nms(boxes);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].index, 0u);
}

TEST(SoftNms, HalfOverlapIsRescoredLinearly) {
  // [0,3]x[0,1] and [1,4]x[0,1]: overlap 2, union 4.
  const std::vector<ScoredBox> boxes{{{0, 0, 3, 1}, 0, 0.9}, {{1, 0, 3, 1}, 0, 0.8}};
  EXPECT_DOUBLE_EQ(hbb_iou(boxes[0].box, boxes[1].box), 0.5);
  const auto out = soft_nms(boxes);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_NEAR(out[1].score, 0.40, 1e-12);
}

TEST(SoftNms, GaussianDecay) {
  const std::vector<ScoredBox> boxes{{{0, 0, 3, 1}, 0, 0.9}, {{1, 0, 3, 1}, 0, 0.8}};
  SoftNmsOptions o;
  o.decay = SoftNmsDecay::gaussian;
  const auto out = soft_nms(boxes, o);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_NEAR(out[1].score, 0.8 * std::exp(-0.25 / 0.5), 1e-12);
}

TEST(SoftNms, ScoresNeverRiseAndOutputIsDescending) {
  Rng rng(21);
  for (int set = 0; set < 100; ++set) {
    std::vector<ScoredBox> boxes;
    for (std::size_t i = 0, n = 1 + rng.below(40); i < n; ++i) {
      boxes.push_back({{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(3, 25), rng.uniform(3, 25)}, 0, rng.uniform()});
    }
    for (SoftNmsDecay decay : {SoftNmsDecay::linear, SoftNmsDecay::gaussian}) {
      SoftNmsOptions o;
      o.decay = decay;
      const auto out = soft_nms(boxes, o);
      for (std::size_t i = 0; i < out.size(); ++i) {
        EXPECT_LE(out[i].score, boxes[out[i].index].score);
        EXPECT_GE(out[i].score, o.score_floor);
        if (i > 0) EXPECT_LE(out[i].score, out[i - 1].score);
      }
    }
  }
}

TEST(SoftNms, StableOnSeparatedSet) {
  // With no pair above the threshold, linear soft-NMS is a fixed point.
  Rng rng(31);
  std::vector<ScoredBox> boxes;
  while (boxes.size() < 30) {
    const ScoredBox b{{rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(3, 20), rng.uniform(3, 20)}, 0, rng.uniform(0.01, 1)};
    if (std::all_of(boxes.begin(), boxes.end(), [&](const ScoredBox& o) { return hbb_iou(o.box, b.box) <= kDefaultSoftNmsThresh; })) {
      boxes.push_back(b);
    }
  }
  const auto once = soft_nms(boxes);
  ASSERT_EQ(once.size(), boxes.size());
  std::vector<ScoredBox> rescored;
  for (const Rescored& r : once) {
    EXPECT_EQ(r.score, boxes[r.index].score);
    rescored.push_back({boxes[r.index].box, 0, r.score});
  }
  const auto twice = soft_nms(rescored);
  ASSERT_EQ(twice.size(), once.size());
  for (std::size_t i = 0; i < twice.size(); ++i) {
    EXPECT_EQ(twice[i].index, i);
    EXPECT_EQ(twice[i].score, once[i].score);
  }
}

TEST(SoftNms, DefaultConstants) {
  EXPECT_EQ(kDefaultSoftNmsThresh, 0.3);
  EXPECT_EQ(kDefaultSoftNmsFloor, 0.001);
}
