#include "rboxkit/anchors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "rboxkit/error.hpp"
#include "rboxkit/rng.hpp"

namespace rboxkit {
namespace {

constexpr const char* kPriorsHeader = "# rboxkit-priors v1";
constexpr double kMonotoneSlack = 1e-12;

double shape_distance(const ShapePrior& a, const ShapePrior& b) { return 1.0 - shape_iou(a, b); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct Assignment {
  std::vector<std::size_t> cluster;
  std::vector<double> distance;
  double cost = 0.0;
};

Assignment assign(const std::vector<ShapePrior>& shapes, const std::vector<ShapePrior>& priors) {
  Assignment a;
  a.cluster.resize(shapes.size());
  a.distance.resize(shapes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < priors.size(); ++c) {
      const double d = shape_distance(shapes[i], priors[c]);
      if (d < best) {
        best = d;
        a.cluster[i] = c;
      }
    }
    a.distance[i] = best;
    total += best;
  }
  a.cost = total / static_cast<double>(shapes.size());
  return a;
}

std::vector<ShapePrior> seed_plus_plus(const std::vector<ShapePrior>& shapes, std::size_t k, Rng& rng) {
  std::vector<ShapePrior> priors{shapes[rng.below(shapes.size())]};
  std::vector<double> nearest(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) nearest[i] = shape_distance(shapes[i], priors[0]);

  while (priors.size() < k) {
    double total = 0.0;
    for (double d : nearest) total += d * d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = shapes.size() - 1;
      for (std::size_t i = 0; i < shapes.size(); ++i) {
        acc += nearest[i] * nearest[i];
        if (acc > r && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      // Every shape already coincides with a prior.
      pick = rng.below(shapes.size());
    }
    priors.push_back(shapes[pick]);
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      nearest[i] = std::min(nearest[i], shape_distance(shapes[i], priors.back()));
    }
  }
  return priors;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

int level_stride(int level) {
  if (level < kMinLevel || level > kMaxLevel) {
    throw ValidationError("pyramid level must be in [2, 6], got " + std::to_string(level));
  }
  return 1 << level;
}

double shape_iou(const ShapePrior& a, const ShapePrior& b) {
  const double inter = std::min(a.w, b.w) * std::min(a.h, b.h);
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

ClusterResult kmeans_iou(const std::vector<ShapePrior>& input, std::size_t k, std::uint64_t seed,
                         std::size_t max_iter) {
  if (k == 0) throw ValidationError("kmeans_iou: k must be at least 1");
  if (k > input.size()) {
    throw ValidationError("kmeans_iou: k = " + std::to_string(k) + " exceeds the " + std::to_string(input.size()) +
                          " available shapes");
  }
  for (const ShapePrior& s : input) {
    if (!(s.w > 0.0) || !(s.h > 0.0) || !std::isfinite(s.w) || !std::isfinite(s.h)) {
      throw ValidationError("kmeans_iou: shapes must have finite positive width and height");
    }
  }

  std::vector<ShapePrior> shapes = input;
  std::sort(shapes.begin(), shapes.end(),
            [](const ShapePrior& a, const ShapePrior& b) { return a.w != b.w ? a.w < b.w : a.h < b.h; });

  Rng rng(seed);
  std::vector<ShapePrior> priors = seed_plus_plus(shapes, k, rng);
  Assignment current = assign(shapes, priors);

  ClusterResult result;
  result.cost_history.push_back(current.cost);

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < shapes.size(); ++i) members[current.cluster[i]].push_back(i);

    bool moved = false;
    for (std::size_t c = 0; c < k; ++c) {
      if (members[c].empty()) {
        // Re-seed from the shape worst served by its current prior.
        const auto far = std::max_element(current.distance.begin(), current.distance.end());
        const ShapePrior replacement = shapes[static_cast<std::size_t>(far - current.distance.begin())];
        if (!(replacement == priors[c])) {
          priors[c] = replacement;
          moved = true;
        }
        continue;
      }
      std::vector<double> ws, hs;
      for (std::size_t i : members[c]) {
        ws.push_back(shapes[i].w);
        hs.push_back(shapes[i].h);
      }
      const ShapePrior candidate{median(ws), median(hs)};
      if (candidate == priors[c]) continue;
      double old_cost = 0.0, new_cost = 0.0;
      for (std::size_t i : members[c]) {
        old_cost += shape_distance(shapes[i], priors[c]);
        new_cost += shape_distance(shapes[i], candidate);
      }
      if (new_cost < old_cost) {
        priors[c] = candidate;
        moved = true;
      }
    }

    Assignment next = assign(shapes, priors);
    if (next.cost > current.cost + kMonotoneSlack) {
      throw std::logic_error("kmeans_iou: clustering cost increased between iterations");
    }
    const bool reassigned = next.cluster != current.cluster;
    current = std::move(next);
    result.cost_history.push_back(current.cost);
    result.iterations = iter + 1;
    if (!moved && !reassigned) break;
  }

  std::sort(priors.begin(), priors.end(), [](const ShapePrior& a, const ShapePrior& b) {
    const double aa = a.w * a.h, ab = b.w * b.h;
    if (aa != ab) return aa < ab;
    return a.w != b.w ? a.w < b.w : a.h < b.h;
  });
  result.priors = std::move(priors);
  result.cost = current.cost;
  return result;
}

void write_priors(std::ostream& out, const std::vector<ShapePrior>& priors) {
  out << kPriorsHeader << '\n';
  for (const ShapePrior& p : priors) out << format_double(p.w) << ' ' << format_double(p.h) << '\n';
}

std::vector<ShapePrior> read_priors(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line != kPriorsHeader) {
    throw ParseError(std::string("missing header '") + kPriorsHeader + "'", 1);
  }
  ++line_no;
  std::vector<ShapePrior> priors;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    ShapePrior p;
    std::string extra;
    if (!(fields >> p.w >> p.h) || (fields >> extra) || !(p.w > 0.0) || !(p.h > 0.0)) {
      throw ParseError("expected two positive numbers 'w h'", line_no);
    }
    priors.push_back(p);
  }
  return priors;
}

std::vector<int> assign_prior_levels(const std::vector<ShapePrior>& priors, const std::vector<int>& levels) {
  if (levels.empty()) throw ValidationError("at least one pyramid level is required");
  std::vector<int> sorted = levels;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("pyramid levels must be distinct");
  }
  std::vector<int> out;
  out.reserve(priors.size());
  for (const ShapePrior& p : priors) {
    const double area = p.w * p.h;
    int best = sorted.front();
    double best_gap = std::numeric_limits<double>::infinity();
    for (int level : sorted) {
      const double ref = 8.0 * level_stride(level);
      const double gap = std::abs(area - ref * ref);
      if (gap < best_gap) {
        best_gap = gap;
        best = level;
      }
    }
    out.push_back(best);
  }
  return out;
}

std::vector<Anchor> generate_anchors(double image_w, double image_h, const std::vector<ShapePrior>& priors,
                                     const std::vector<int>& levels) {
  if (!(image_w > 0.0) || !(image_h > 0.0)) throw ValidationError("image size must be positive");
  if (priors.empty()) throw ValidationError("at least one shape prior is required");
  const std::vector<int> prior_level = assign_prior_levels(priors, levels);

  std::vector<int> sorted = levels;
  std::sort(sorted.begin(), sorted.end());
  std::vector<Anchor> anchors;
  for (int level : sorted) {
    const double stride = level_stride(level);
    const auto nx = static_cast<std::size_t>(std::ceil(image_w / stride));
    const auto ny = static_cast<std::size_t>(std::ceil(image_h / stride));
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t p = 0; p < priors.size(); ++p) {
          if (prior_level[p] != level) continue;
          for (double orientation : kAnchorOrientations) {
            anchors.push_back(Anchor{RRect{(static_cast<double>(x) + 0.5) * stride,
                                           (static_cast<double>(y) + 0.5) * stride, priors[p].w, priors[p].h,
                                           orientation},
                                     level, orientation});
          }
        }
      }
    }
  }
  return anchors;
}

std::vector<AnchorLabel> label_anchors(const std::vector<Anchor>& anchors, const std::vector<Quad>& gts,
                                       const LabelOptions& options) {
  if (!(options.neg_thresh >= 0.0 && options.neg_thresh < options.pos_thresh && options.pos_thresh <= 1.0)) {
    throw ValidationError("label thresholds must satisfy 0 <= neg < pos <= 1");
  }
  std::vector<Quad> gt_quads;
  std::vector<AABB> gt_boxes;
  for (const Quad& g : gts) {
    gt_quads.push_back(canonicalize(g));
    gt_boxes.push_back(bounding_box(gt_quads.back()));
  }

  std::vector<AnchorLabel> labels(anchors.size());
  std::vector<std::size_t> argmax_gt(anchors.size(), 0);
  std::vector<double> gt_best_iou(gts.size(), 0.0);
  std::vector<std::size_t> gt_best_anchor(gts.size(), 0);
  std::vector<std::vector<std::pair<double, std::size_t>>> gt_overlaps(gts.size());
  std::vector<Quad> anchor_quads(anchors.size());

  for (std::size_t a = 0; a < anchors.size(); ++a) {
    anchor_quads[a] = rrect_to_quad(anchors[a].geometry);
    const AABB box = bounding_box(anchor_quads[a]);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const AABB& gb = gt_boxes[g];
      if (box.xmax() <= gb.xmin || gb.xmax() <= box.xmin || box.ymax() <= gb.ymin || gb.ymax() <= box.ymin) {
        continue;
      }
      const double iou = rotated_iou(anchor_quads[a], gt_quads[g]);
      if (iou > 0.0) gt_overlaps[g].push_back({iou, a});
      if (iou > labels[a].max_iou) {
        labels[a].max_iou = iou;
        argmax_gt[a] = g;
      }
      if (iou > gt_best_iou[g]) {
        gt_best_iou[g] = iou;
        gt_best_anchor[g] = a;
      }
    }
  }

  auto make_positive = [&](std::size_t a, std::size_t g) {
    Quad target = gt_quads[g];
    if (!options.keep_gt_corner_order) target = match_corner_order(anchor_quads[a], target);
    labels[a].state = LabelState::positive;
    labels[a].gt_index = g;
    labels[a].target = encode_obb(anchors[a].geometry, target);
  };

  for (std::size_t a = 0; a < anchors.size(); ++a) {
    if (labels[a].max_iou >= options.pos_thresh) {
      make_positive(a, argmax_gt[a]);
    } else if (labels[a].max_iou < options.neg_thresh) {
      labels[a].state = LabelState::negative;
    } else {
      labels[a].state = LabelState::ignore;
    }
  }
  std::vector<bool> covered(gts.size(), false);
  for (const AnchorLabel& l : labels) {
    if (l.gt_index) covered[*l.gt_index] = true;
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const std::size_t a = gt_best_anchor[g];
    if (gt_best_iou[g] > 0.0 && labels[a].state != LabelState::positive) {
      make_positive(a, g);
      covered[g] = true;
    }
  }
  // A ground truth whose best anchor went to another one takes its best free anchor.
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (covered[g]) continue;
    std::stable_sort(gt_overlaps[g].begin(), gt_overlaps[g].end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    for (const auto& [iou, a] : gt_overlaps[g]) {
      if (labels[a].state != LabelState::positive) {
        make_positive(a, g);
        break;
      }
    }
  }
  return labels;
}

}  // namespace rboxkit
