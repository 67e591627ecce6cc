#pragma once

// Anchor shape clustering, multi-orientation anchor generation over the
// P2..P6 pyramid levels, and IoU-based anchor labeling.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rboxkit/codec.hpp"
#include "rboxkit/geometry.hpp"

namespace rboxkit {

inline constexpr std::size_t kDefaultAnchorCount = 18;
inline constexpr std::array<double, 4> kAnchorOrientations{0.0, 45.0, 90.0, 135.0};
inline constexpr int kMinLevel = 2;
inline constexpr int kMaxLevel = 6;

/// Feature stride of pyramid level P`level` (4 px for P2 up to 64 px for P6).
int level_stride(int level);

struct ShapePrior {
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const ShapePrior&, const ShapePrior&) = default;
};

/// IoU of two shapes placed concentric and axis-aligned.
double shape_iou(const ShapePrior& a, const ShapePrior& b);

struct ClusterResult {
  std::vector<ShapePrior> priors;     // sorted by area, then w
  double cost = 0.0;                  // mean (1 - IoU) to the assigned prior
  std::vector<double> cost_history;   // seeding cost, then one entry per iteration
  std::size_t iterations = 0;
};

/// K-means++ over shapes with distance 1 - shape_iou. Centroids move to the
/// component-wise median of their members; a move that would raise the
/// cluster's cost is rejected, so cost never increases. Output depends on the
/// multiset of shapes and the seed, not on input order.
ClusterResult kmeans_iou(const std::vector<ShapePrior>& shapes, std::size_t k, std::uint64_t seed,
                         std::size_t max_iter = 300);

/// Plain-text prior file: "# rboxkit-priors v1" followed by "w h" lines.
void write_priors(std::ostream& out, const std::vector<ShapePrior>& priors);
std::vector<ShapePrior> read_priors(std::istream& in);

struct Anchor {
  RRect geometry;
  int level = kMinLevel;
  double orientation = 0.0;
};

/// Level each prior is assigned to: the one whose reference area
/// (8 * stride)^2 is nearest to the prior's area, ties to the lower level.
std::vector<int> assign_prior_levels(const std::vector<ShapePrior>& priors, const std::vector<int>& levels);

/// Anchors centered at every stride-spaced location of each level, one per
/// (prior assigned to the level) x orientation.
std::vector<Anchor> generate_anchors(double image_w, double image_h, const std::vector<ShapePrior>& priors,
                                     const std::vector<int>& levels = {2, 3, 4, 5, 6});

enum class LabelState { positive, negative, ignore };

struct AnchorLabel {
  LabelState state = LabelState::negative;
  std::optional<std::size_t> gt_index;       // positives only
  std::optional<RegressionTarget> target;    // positives only
  double max_iou = 0.0;
};

struct LabelOptions {
  double pos_thresh = 0.7;
  double neg_thresh = 0.3;
  /// When false the ground-truth corners are cyclically re-indexed to sit
  /// closest to the anchor corners before encoding.
  bool keep_gt_corner_order = false;
};

std::vector<AnchorLabel> label_anchors(const std::vector<Anchor>& anchors, const std::vector<Quad>& gts,
                                       const LabelOptions& options = {});

}  // namespace rboxkit
