#include "rboxkit/nms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rboxkit/error.hpp"

namespace rboxkit {
namespace {

std::vector<std::size_t> score_order(std::size_t n, auto score_of) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score_of(a) > score_of(b); });
  return order;
}

bool boxes_disjoint(const AABB& a, const AABB& b) {
  return a.xmax() < b.xmin || b.xmax() < a.xmin || a.ymax() < b.ymin || b.ymax() < a.ymin;
}

}  // namespace

std::vector<std::size_t> r_nms(const std::vector<ScoredDetection>& dets, double iou_thresh) {
  std::vector<Quad> quads;
  std::vector<AABB> boxes;
  quads.reserve(dets.size());
  boxes.reserve(dets.size());
  for (const ScoredDetection& d : dets) {
    if (!std::isfinite(d.score)) throw ValidationError("r_nms: non-finite score");
    quads.push_back(canonicalize(d.quad));
    boxes.push_back(bounding_box(quads.back()));
  }

  const auto order = score_order(dets.size(), [&](std::size_t i) { return dets[i].score; });
  std::vector<bool> suppressed(dets.size(), false);
  std::vector<std::size_t> kept;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (suppressed[i]) continue;
    kept.push_back(i);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (suppressed[j] || boxes_disjoint(boxes[i], boxes[j])) continue;
      if (rotated_iou(quads[i], quads[j]) > iou_thresh) suppressed[j] = true;
    }
  }
  return kept;
}

std::vector<std::size_t> r_nms_per_class(const std::vector<ScoredDetection>& dets, double iou_thresh) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dets.size(); ++i) by_class[dets[i].class_id].push_back(i);
  std::vector<std::size_t> kept;
  for (const auto& [cls, indices] : by_class) {
    std::vector<ScoredDetection> subset;
    subset.reserve(indices.size());
    for (std::size_t i : indices) subset.push_back(dets[i]);
    for (std::size_t local : r_nms(subset, iou_thresh)) kept.push_back(indices[local]);
  }
  return kept;
}

std::vector<Rescored> soft_nms(const std::vector<ScoredBox>& dets, const SoftNmsOptions& options) {
  if (options.decay == SoftNmsDecay::gaussian && !(options.sigma > 0.0)) {
    throw ValidationError("soft_nms: sigma must be positive");
  }
  std::vector<double> scores;
  scores.reserve(dets.size());
  for (const ScoredBox& d : dets) {
    if (!std::isfinite(d.score)) throw ValidationError("soft_nms: non-finite score");
    scores.push_back(d.score);
  }

  std::vector<std::size_t> pending(dets.size());
  std::iota(pending.begin(), pending.end(), std::size_t{0});
  std::erase_if(pending, [&](std::size_t i) { return scores[i] < options.score_floor; });

  std::vector<Rescored> out;
  while (!pending.empty()) {
    auto best_it = pending.begin();
    for (auto it = pending.begin(); it != pending.end(); ++it) {
      if (scores[*it] > scores[*best_it] || (scores[*it] == scores[*best_it] && *it < *best_it)) best_it = it;
    }
    const std::size_t best = *best_it;
    pending.erase(best_it);
    out.push_back({best, scores[best]});

    for (std::size_t j : pending) {
      const double iou = hbb_iou(dets[best].box, dets[j].box);
      if (options.decay == SoftNmsDecay::linear) {
        if (iou > options.iou_thresh) scores[j] *= 1.0 - iou;
      } else {
        scores[j] *= std::exp(-(iou * iou) / options.sigma);
      }
    }
    std::erase_if(pending, [&](std::size_t i) { return scores[i] < options.score_floor; });
  }
  return out;
}

}  // namespace rboxkit
