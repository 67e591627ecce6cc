#pragma once

// PASCAL VOC / DOTA style detection metrics.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rboxkit/dota_io.hpp"
#include "rboxkit/geometry.hpp"

namespace rboxkit {

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

enum class ApMode { eleven_point, all_point };

/// Eleven-point: mean over r in {0, 0.1, ..., 1} of the best precision at
/// recall >= r. All-point: area under the monotone precision envelope.
/// Empty input gives 0.
double voc_ap(std::span<const PrPoint> pr, ApMode mode = ApMode::eleven_point);

/// The default AR threshold grid 0.50, 0.55, ..., 0.95.
std::vector<double> default_iou_grid();

struct RecallAtIou {
  double iou = 0.0;
  double recall = 0.0;
};

struct RecallCurve {
  double average_recall = 0.0;
  std::vector<RecallAtIou> curve;
};

using QuadIndex = std::map<std::string, std::vector<Quad>>;

/// Recall of `proposals` at each IoU threshold (one-to-one greedy matching by
/// descending IoU within each image) and its mean. Throws ValidationError
/// when there are no ground truths.
RecallCurve average_recall(const QuadIndex& proposals, const QuadIndex& gts,
                           const std::vector<double>& iou_grid = default_iou_grid());

struct ClassResult {
  double ap = 0.0;
  std::size_t num_gt = 0;   // non-difficult
  std::size_t num_det = 0;
  std::size_t true_positives = 0;
  std::vector<PrPoint> pr;
};

struct EvalResult {
  std::map<std::string, ClassResult> per_class;  // classes with at least one non-difficult gt
  double map = 0.0;
  double ar = 0.0;
  std::vector<RecallAtIou> recall_curve;
};

struct EvalOptions {
  double iou_thresh = 0.5;
  ApMode ap_mode = ApMode::eleven_point;
  std::vector<double> ar_grid = default_iou_grid();
  /// Extra category names accepted in detections beyond those present in the
  /// ground truth.
  std::vector<std::string> categories;
};

/// Per-class VOC matching. OBB detections are replaced by their minimum-area
/// rectangle and matched with rotated IoU; HBB detections are matched to the
/// ground-truth bounding boxes with axis-aligned IoU. Throws ValidationError
/// listing categories unknown to the ground truth, or on a task mismatch.
EvalResult evaluate(const std::vector<DetRecord>& dets, const GtIndex& gts, Task task,
                    const EvalOptions& options = {});

}  // namespace rboxkit
