#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rboxkit/anchors.hpp"
#include "rboxkit/codec.hpp"
#include "rboxkit/dota_io.hpp"
#include "rboxkit/error.hpp"
#include "rboxkit/eval.hpp"
#include "rboxkit/geometry.hpp"
#include "rboxkit/grad_check.hpp"
#include "rboxkit/losses.hpp"
#include "rboxkit/nms.hpp"

namespace py = pybind11;
using namespace rboxkit;

namespace {

// Quads cross the boundary as 8 floats: x0, y0, x1, y1, x2, y2, x3, y3.
using Flat = std::array<double, 8>;
using RRectTuple = std::array<double, 5>;  // cx, cy, w, h, angle
using BoxTuple = std::array<double, 4>;    // xmin, ymin, w, h

Quad to_quad(const Flat& f) {
  Quad q;
  for (std::size_t i = 0; i < 4; ++i) q.corners[i] = {f[2 * i], f[2 * i + 1]};
  return q;
}

Flat from_quad(const Quad& q) {
  Flat f;
  for (std::size_t i = 0; i < 4; ++i) {
    f[2 * i] = q.corners[i].x;
    f[2 * i + 1] = q.corners[i].y;
  }
  return f;
}

RRect to_rrect(const RRectTuple& t) { return {t[0], t[1], t[2], t[3], t[4]}; }
RRectTuple from_rrect(const RRect& r) { return {r.cx, r.cy, r.w, r.h, r.angle}; }
AABB to_box(const BoxTuple& t) { return {t[0], t[1], t[2], t[3]}; }

std::vector<int> class_ids_or_zero(const std::optional<std::vector<int>>& ids, std::size_t n) {
  if (!ids) return std::vector<int>(n, 0);
  if (ids->size() != n) throw ValidationError("class_ids length does not match boxes");
  return *ids;
}

void check_scores(std::size_t boxes, std::size_t scores) {
  if (boxes != scores) throw ValidationError("scores length does not match boxes");
}

py::dict eval_to_dict(const EvalResult& r) {
  py::dict classes;
  for (const auto& [name, c] : r.per_class) {
    py::dict d;
    d["ap"] = c.ap;
    d["num_gt"] = c.num_gt;
    d["num_det"] = c.num_det;
    d["true_positives"] = c.true_positives;
    py::list pr;
    for (const PrPoint& p : c.pr) pr.append(py::make_tuple(p.recall, p.precision));
    d["pr"] = pr;
    classes[py::str(name)] = d;
  }
  py::list curve;
  for (const RecallAtIou& p : r.recall_curve) curve.append(py::make_tuple(p.iou, p.recall));
  py::dict out;
  out["map"] = r.map;
  out["ar"] = r.ar;
  out["classes"] = classes;
  out["recall_curve"] = curve;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Rotated box geometry, losses, anchors, NMS and DOTA-style evaluation.";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DegenerateError>(m, "DegenerateError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", validation.ptr());

  m.def("quad_area", [](const Flat& q) { return quad_area(to_quad(q)); }, py::arg("quad"));
  m.def("is_valid_quad", [](const Flat& q) { return is_valid_quad(to_quad(q)); }, py::arg("quad"));
  m.def("rotated_iou", [](const Flat& a, const Flat& b) { return rotated_iou(to_quad(a), to_quad(b)); },
        py::arg("a"), py::arg("b"));
  m.def("hbb_iou", [](const BoxTuple& a, const BoxTuple& b) { return hbb_iou(to_box(a), to_box(b)); },
        py::arg("a"), py::arg("b"));
  m.def("interior_angles", [](const Flat& q) { return interior_angles(to_quad(q)); }, py::arg("quad"));
  m.def("min_area_rect", [](const Flat& q) { return from_rrect(min_area_rect(to_quad(q))); }, py::arg("quad"));
  m.def("rrect_to_quad", [](const RRectTuple& r) { return from_quad(rrect_to_quad(to_rrect(r))); },
        py::arg("rrect"));

  m.def(
      "encode_obb",
      [](const RRectTuple& anchor, const Flat& target) {
        const RegressionTarget t = encode_obb(to_rrect(anchor), to_quad(target));
        Flat out;
        for (std::size_t i = 0; i < 4; ++i) {
          out[2 * i] = t.tx[i];
          out[2 * i + 1] = t.ty[i];
        }
        return out;
      },
      py::arg("anchor"), py::arg("target"));
  m.def(
      "decode_obb",
      [](const RRectTuple& anchor, const Flat& deltas) {
        RegressionTarget t;
        for (std::size_t i = 0; i < 4; ++i) {
          t.tx[i] = deltas[2 * i];
          t.ty[i] = deltas[2 * i + 1];
        }
        return from_quad(decode_obb(to_rrect(anchor), t));
      },
      py::arg("anchor"), py::arg("deltas"));
  m.def(
      "match_corner_order",
      [](const Flat& reference, const Flat& target) {
        return from_quad(match_corner_order(to_quad(reference), to_quad(target)));
      },
      py::arg("reference"), py::arg("target"));

  m.def(
      "angle_loss",
      [](const Flat& q, const std::string& kind) {
        const AngleLoss r = angle_loss(to_quad(q), angle_loss_kind_from_string(kind));
        return py::make_tuple(r.loss, r.grad);
      },
      py::arg("quad"), py::arg("kind") = "l2");
  m.def(
      "grad_check_suite",
      [](const std::string& names, std::size_t trials, std::uint64_t seed) {
        py::dict out;
        for (GradTarget t : parse_grad_targets(names)) {
          out[py::str(std::string(to_string(t)))] = run_grad_suite(t, trials, seed).max_rel_error;
        }
        return out;
      },
      py::arg("targets") = "all", py::arg("trials") = 100, py::arg("seed") = 0);

  m.def(
      "r_nms",
      [](const std::vector<Flat>& quads, const std::vector<double>& scores,
         const std::optional<std::vector<int>>& class_ids, double iou_thresh) {
        check_scores(quads.size(), scores.size());
        const std::vector<int> ids = class_ids_or_zero(class_ids, quads.size());
        std::vector<ScoredDetection> dets;
        for (std::size_t i = 0; i < quads.size(); ++i) dets.push_back({to_quad(quads[i]), ids[i], scores[i]});
        py::gil_scoped_release release;
        return r_nms_per_class(dets, iou_thresh);
      },
      py::arg("quads"), py::arg("scores"), py::arg("class_ids") = py::none(),
      py::arg("iou_thresh") = kDefaultRnmsThresh);
  m.def(
      "soft_nms",
      [](const std::vector<BoxTuple>& boxes, const std::vector<double>& scores,
         const std::optional<std::vector<int>>& class_ids, double iou_thresh, double score_floor,
         const std::string& decay, double sigma) {
        check_scores(boxes.size(), scores.size());
        const std::vector<int> ids = class_ids_or_zero(class_ids, boxes.size());
        std::vector<ScoredBox> dets;
        for (std::size_t i = 0; i < boxes.size(); ++i) dets.push_back({to_box(boxes[i]), ids[i], scores[i]});
        SoftNmsOptions o;
        o.iou_thresh = iou_thresh;
        o.score_floor = score_floor;
        o.sigma = sigma;
        if (decay == "linear") {
          o.decay = SoftNmsDecay::linear;
        } else if (decay == "gaussian") {
          o.decay = SoftNmsDecay::gaussian;
        } else {
          throw ValidationError("unknown decay '" + decay + "'");
        }
        std::vector<std::pair<std::size_t, double>> out;
        for (const Rescored& r : soft_nms(dets, o)) out.emplace_back(r.index, r.score);
        return out;
      },
      py::arg("boxes"), py::arg("scores"), py::arg("class_ids") = py::none(),
      py::arg("iou_thresh") = kDefaultSoftNmsThresh, py::arg("score_floor") = kDefaultSoftNmsFloor,
      py::arg("decay") = "linear", py::arg("sigma") = 0.5);

  m.def(
      "kmeans_iou",
      [](const std::vector<std::pair<double, double>>& shapes, std::size_t k, std::uint64_t seed,
         std::size_t max_iter) {
        std::vector<ShapePrior> in;
        for (const auto& [w, h] : shapes) in.push_back({w, h});
        const ClusterResult r = kmeans_iou(in, k, seed, max_iter);
        std::vector<std::pair<double, double>> priors;
        for (const ShapePrior& p : r.priors) priors.emplace_back(p.w, p.h);
        py::dict out;
        out["priors"] = priors;
        out["cost"] = r.cost;
        out["cost_history"] = r.cost_history;
        out["iterations"] = r.iterations;
        return out;
      },
      py::arg("shapes"), py::arg("k") = kDefaultAnchorCount, py::arg("seed") = 0, py::arg("max_iter") = 300);

  m.def(
      "voc_ap",
      [](const std::vector<double>& recall, const std::vector<double>& precision, bool all_point) {
        if (recall.size() != precision.size()) throw ValidationError("recall and precision lengths differ");
        std::vector<PrPoint> pr;
        for (std::size_t i = 0; i < recall.size(); ++i) pr.push_back({recall[i], precision[i]});
        return voc_ap(pr, all_point ? ApMode::all_point : ApMode::eleven_point);
      },
      py::arg("recall"), py::arg("precision"), py::arg("all_point") = false);
  m.def(
      "evaluate_dirs",
      [](const std::filesystem::path& det_dir, const std::filesystem::path& gt_dir, const std::string& task,
         double iou_thresh) {
        const Task t = task_from_string(task);
        EvalOptions o;
        o.iou_thresh = iou_thresh;
        EvalResult r;
        {
          py::gil_scoped_release release;
          r = evaluate(load_detection_dir(det_dir, t), load_annotation_dir(gt_dir), t, o);
        }
        return eval_to_dict(r);
      },
      py::arg("det_dir"), py::arg("gt_dir"), py::arg("task") = "obb", py::arg("iou_thresh") = 0.5);

  m.def(
      "parse_annotations",
      [](const std::string& text) {
        std::vector<py::tuple> out;
        for (const GtRecord& r : parse_annotations(std::string_view(text))) {
          out.push_back(py::make_tuple(from_quad(r.quad), r.category, r.difficult));
        }
        return out;
      },
      py::arg("text"));
}
