#include "rboxkit/eval.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

#include "rboxkit/error.hpp"

namespace rboxkit {
namespace {

struct GtEntry {
  Quad quad;
  AABB box;
  bool difficult = false;
  bool matched = false;
};

bool disjoint(const AABB& a, const AABB& b) {
  return a.xmax() < b.xmin || b.xmax() < a.xmin || a.ymax() < b.ymin || b.ymax() < a.ymin;
}

// Detection geometry as used for matching.
struct DetGeometry {
  Quad quad;
  AABB box;
};

DetGeometry det_geometry(const DetRecord& det, Task task) {
  if (task == Task::obb) {
    const Quad* q = std::get_if<Quad>(&det.geometry);
    if (!q) throw ValidationError("OBB evaluation requires quadrilateral detections (image " + det.image_id + ")");
    const Quad refined = rrect_to_quad(min_area_rect(*q));
    return {refined, bounding_box(refined)};
  }
  const AABB box = std::holds_alternative<AABB>(det.geometry) ? std::get<AABB>(det.geometry)
                                                               : bounding_box(std::get<Quad>(det.geometry));
  return {aabb_to_quad(box), box};
}

double overlap(const DetGeometry& det, const GtEntry& gt, Task task) {
  if (disjoint(det.box, gt.box)) return 0.0;
  if (task == Task::hbb) return hbb_iou(det.box, gt.box);
  return rotated_iou(det.quad, gt.quad);
}

}  // namespace

double voc_ap(std::span<const PrPoint> pr, ApMode mode) {
  if (pr.empty()) return 0.0;
  if (mode == ApMode::eleven_point) {
    double ap = 0.0;
    for (int i = 0; i <= 10; ++i) {
      const double t = i / 10.0;
      double best = 0.0;
      for (const PrPoint& p : pr) {
        if (p.recall >= t) best = std::max(best, p.precision);
      }
      ap += best;
    }
    return std::min(1.0, ap / 11.0);
  }
  std::vector<double> mrec{0.0}, mpre{0.0};
  for (const PrPoint& p : pr) {
    mrec.push_back(p.recall);
    mpre.push_back(p.precision);
  }
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i) {
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  }
  return ap;
}

std::vector<double> default_iou_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back((50 + 5 * i) / 100.0);
  return grid;
}

RecallCurve average_recall(const QuadIndex& proposals, const QuadIndex& gts, const std::vector<double>& iou_grid) {
  if (iou_grid.empty()) throw ValidationError("average_recall: empty IoU grid");
  std::size_t total = 0;
  for (const auto& [image, quads] : gts) total += quads.size();
  if (total == 0) throw ValidationError("average_recall: no ground truths");

  // IoU of the proposal each ground truth ends up matched to.
  std::vector<double> matched_iou;
  for (const auto& [image, gt_quads] : gts) {
    const auto it = proposals.find(image);
    if (it == proposals.end() || gt_quads.empty()) continue;
    const std::vector<Quad>& props = it->second;

    struct Pair {
      double iou;
      std::size_t prop, gt;
    };
    std::vector<Pair> pairs;
    std::vector<AABB> gt_boxes;
    for (const Quad& g : gt_quads) gt_boxes.push_back(bounding_box(g));
    for (std::size_t p = 0; p < props.size(); ++p) {
      const AABB pb = bounding_box(props[p]);
      for (std::size_t g = 0; g < gt_quads.size(); ++g) {
        if (disjoint(pb, gt_boxes[g])) continue;
        const double iou = rotated_iou(props[p], gt_quads[g]);
        if (iou > 0.0) pairs.push_back({iou, p, g});
      }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
    std::vector<bool> prop_used(props.size(), false), gt_used(gt_quads.size(), false);
    for (const Pair& pr : pairs) {
      if (prop_used[pr.prop] || gt_used[pr.gt]) continue;
      prop_used[pr.prop] = gt_used[pr.gt] = true;
      matched_iou.push_back(pr.iou);
    }
  }

  RecallCurve out;
  double sum = 0.0;
  for (double t : iou_grid) {
    const auto hits = std::count_if(matched_iou.begin(), matched_iou.end(), [t](double v) { return v >= t; });
    const double recall = static_cast<double>(hits) / static_cast<double>(total);
    out.curve.push_back({t, recall});
    sum += recall;
  }
  out.average_recall = sum / static_cast<double>(iou_grid.size());
  return out;
}

EvalResult evaluate(const std::vector<DetRecord>& dets, const GtIndex& gts, Task task, const EvalOptions& options) {
  std::set<std::string> vocabulary(options.categories.begin(), options.categories.end());
  for (const auto& [image, records] : gts) {
    for (const GtRecord& r : records) vocabulary.insert(r.category);
  }
  std::set<std::string> unknown;
  for (const DetRecord& d : dets) {
    if (!vocabulary.contains(d.category)) unknown.insert(d.category);
  }
  if (!unknown.empty()) {
    std::string names;
    for (const std::string& u : unknown) names += (names.empty() ? "" : ", ") + u;
    throw ValidationError("detections use categories absent from the ground truth: " + names);
  }

  std::vector<DetGeometry> det_geo;
  det_geo.reserve(dets.size());
  for (const DetRecord& d : dets) det_geo.push_back(det_geometry(d, task));

  EvalResult result;
  for (const std::string& category : vocabulary) {
    std::map<std::string, std::vector<GtEntry>> class_gts;
    std::size_t npos = 0;
    for (const auto& [image, records] : gts) {
      for (const GtRecord& r : records) {
        if (r.category != category) continue;
        const Quad gq = task == Task::obb ? r.quad : aabb_to_quad(bounding_box(r.quad));
        class_gts[image].push_back({gq, bounding_box(r.quad), r.difficult, false});
        if (!r.difficult) ++npos;
      }
    }
    if (npos == 0) continue;

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (dets[i].category == category) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    ClassResult cls;
    cls.num_gt = npos;
    cls.num_det = order.size();
    std::size_t tp = 0, fp = 0;
    for (std::size_t i : order) {
      auto it = class_gts.find(dets[i].image_id);
      double best = -std::numeric_limits<double>::infinity();
      GtEntry* best_gt = nullptr;
      if (it != class_gts.end()) {
        for (GtEntry& g : it->second) {
          const double iou = overlap(det_geo[i], g, task);
          if (iou > best) {
            best = iou;
            best_gt = &g;
          }
        }
      }
      if (best_gt && best >= options.iou_thresh) {
        if (best_gt->difficult) {
          // Neither a hit nor a miss.
        } else if (!best_gt->matched) {
          best_gt->matched = true;
          ++tp;
        } else {
          ++fp;
        }
      } else {
        ++fp;
      }
      const double denom = std::max<double>(static_cast<double>(tp + fp), std::numeric_limits<double>::epsilon());
      cls.pr.push_back({static_cast<double>(tp) / static_cast<double>(npos), static_cast<double>(tp) / denom});
    }
    cls.true_positives = tp;
    cls.ap = voc_ap(cls.pr, options.ap_mode);
    result.per_class.emplace(category, std::move(cls));
  }

  if (!result.per_class.empty()) {
    double sum = 0.0;
    for (const auto& [name, cls] : result.per_class) sum += cls.ap;
    result.map = sum / static_cast<double>(result.per_class.size());
  }

  QuadIndex proposals, gt_quads;
  std::size_t total_gt = 0;
  for (const auto& [image, records] : gts) {
    for (const GtRecord& r : records) {
      if (r.difficult) continue;
      gt_quads[image].push_back(task == Task::obb ? r.quad : aabb_to_quad(bounding_box(r.quad)));
      ++total_gt;
    }
  }
  for (std::size_t i = 0; i < dets.size(); ++i) proposals[dets[i].image_id].push_back(det_geo[i].quad);
  if (total_gt > 0) {
    const RecallCurve rc = average_recall(proposals, gt_quads, options.ar_grid);
    result.ar = rc.average_recall;
    result.recall_curve = rc.curve;
  }
  return result;
}

}  // namespace rboxkit
