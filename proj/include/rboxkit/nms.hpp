#pragma once

#include <vector>

#include "rboxkit/geometry.hpp"

namespace rboxkit {

inline constexpr double kDefaultRnmsThresh = 0.1;
inline constexpr double kDefaultSoftNmsThresh = 0.3;
inline constexpr double kDefaultSoftNmsFloor = 0.001;

struct ScoredDetection {
  Quad quad;
  int class_id = 0;
  double score = 0.0;
};

struct ScoredBox {
  AABB box;
  int class_id = 0;
  double score = 0.0;
};

/// Greedy rotated NMS over one class. Detections are visited by descending
/// score (ties by lower index); everything with rotated IoU above
/// `iou_thresh` against a kept detection is dropped. Returns kept indices in
/// visiting order.
std::vector<std::size_t> r_nms(const std::vector<ScoredDetection>& dets, double iou_thresh = kDefaultRnmsThresh);

/// r_nms applied independently to each class_id. Indices refer to `dets`.
std::vector<std::size_t> r_nms_per_class(const std::vector<ScoredDetection>& dets,
                                         double iou_thresh = kDefaultRnmsThresh);

enum class SoftNmsDecay { linear, gaussian };

struct SoftNmsOptions {
  double iou_thresh = kDefaultSoftNmsThresh;
  double score_floor = kDefaultSoftNmsFloor;
  SoftNmsDecay decay = SoftNmsDecay::linear;
  double sigma = 0.5;  // gaussian only
};

struct Rescored {
  std::size_t index = 0;
  double score = 0.0;
};

/// Soft-NMS over axis-aligned boxes of one class. Linear decay multiplies a
/// rival's score by (1 - iou) when iou > iou_thresh; gaussian decay by
/// exp(-iou^2 / sigma). Boxes whose score falls below `score_floor` are
/// dropped. Returns survivors in selection order.
std::vector<Rescored> soft_nms(const std::vector<ScoredBox>& dets, const SoftNmsOptions& options = {});

}  // namespace rboxkit
