// rboxkit command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 check failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rboxkit/anchors.hpp"
#include "rboxkit/dota_io.hpp"
#include "rboxkit/error.hpp"
#include "rboxkit/eval.hpp"
#include "rboxkit/grad_check.hpp"
#include "rboxkit/nms.hpp"
#include "rboxkit/synth.hpp"

namespace fs = std::filesystem;
using namespace rboxkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitCheckFailed = 3;

std::string fixed6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

void emit(const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-") {
    std::cout << contents;
  } else {
    write_file_atomic(path, contents);
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return in;
}

// ---------------------------------------------------------------- iou

int cmd_iou(const std::string& path) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  std::string out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#') continue;
    std::istringstream fields(line);
    std::array<double, 16> v{};
    std::size_t n = 0;
    double x = 0.0;
    while (n < 16 && fields >> x) v[n++] = x;
    std::string extra;
    if (n != 16 || (fields >> extra) || !fields.eof()) {
      throw ParseError("expected 16 numbers (two quads)", line_no);
    }
    Quad a, b;
    for (std::size_t i = 0; i < 4; ++i) {
      a.corners[i] = {v[2 * i], v[2 * i + 1]};
      b.corners[i] = {v[8 + 2 * i], v[8 + 2 * i + 1]};
    }
    try {
      out += fixed6(rotated_iou(a, b)) + '\n';
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  std::cout << out;
  return kExitOk;
}

// ---------------------------------------------------------------- nms

struct NmsArgs {
  std::string input;
  std::string output;
  double iou_thresh = -1.0;
  bool soft = false;
  bool gaussian = false;
  double sigma = 0.5;
  double score_floor = kDefaultSoftNmsFloor;
};

int cmd_nms(const NmsArgs& args) {
  std::ifstream in = open_input(args.input);
  const std::string category = category_from_filename(args.input);

  std::vector<std::string> image_order;
  std::map<std::string, std::vector<DetRecord>> by_image;
  for_each_detection(in, category, [&](DetRecord&& d) {
    auto [it, inserted] = by_image.try_emplace(d.image_id);
    if (inserted) image_order.push_back(d.image_id);
    it->second.push_back(std::move(d));
  });

  std::string out;
  for (const std::string& image : image_order) {
    const std::vector<DetRecord>& dets = by_image[image];
    if (args.soft) {
      if (dets.front().task() != Task::hbb) throw ValidationError("Soft-NMS applies to HBB detection files only");
      std::vector<ScoredBox> boxes;
      for (const DetRecord& d : dets) boxes.push_back({std::get<AABB>(d.geometry), 0, d.score});
      SoftNmsOptions opt;
      opt.iou_thresh = args.iou_thresh >= 0.0 ? args.iou_thresh : kDefaultSoftNmsThresh;
      opt.score_floor = args.score_floor;
      opt.decay = args.gaussian ? SoftNmsDecay::gaussian : SoftNmsDecay::linear;
      opt.sigma = args.sigma;
      for (const Rescored& r : soft_nms(boxes, opt)) {
        DetRecord d = dets[r.index];
        d.score = r.score;
        out += format_detection(d) + '\n';
      }
    } else {
      std::vector<ScoredDetection> quads;
      for (const DetRecord& d : dets) {
        const Quad q = d.task() == Task::obb ? std::get<Quad>(d.geometry) : aabb_to_quad(std::get<AABB>(d.geometry));
        quads.push_back({q, 0, d.score});
      }
      const double thresh = args.iou_thresh >= 0.0 ? args.iou_thresh : kDefaultRnmsThresh;
      for (std::size_t i : r_nms(quads, thresh)) out += format_detection(dets[i]) + '\n';
    }
  }
  emit(args.output, out);
  return kExitOk;
}

// ---------------------------------------------------------------- cluster

struct ClusterArgs {
  std::string annotations;
  std::string output;
  std::size_t k = kDefaultAnchorCount;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
};

int cmd_cluster(const ClusterArgs& args) {
  const GtIndex gts = load_annotation_dir(args.annotations);
  std::vector<ShapePrior> shapes;
  for (const auto& [image, records] : gts) {
    for (const GtRecord& r : records) {
      const RRect rect = min_area_rect(r.quad);
      shapes.push_back({rect.w, rect.h});
    }
  }
  if (shapes.size() < args.k) {
    throw ValidationError("need at least k = " + std::to_string(args.k) + " ground-truth boxes, found " +
                          std::to_string(shapes.size()));
  }
  const ClusterResult result = kmeans_iou(shapes, args.k, args.seed, args.max_iter);
  std::ostringstream priors;
  write_priors(priors, result.priors);
  emit(args.output, priors.str());

  std::ostream& report = (args.output.empty() || args.output == "-") ? std::cerr : std::cout;
  report << "seed: " << args.seed << '\n'
         << "k: " << args.k << '\n'
         << "shapes: " << shapes.size() << '\n'
         << "iterations: " << result.iterations << '\n'
         << "cost: " << fixed6(result.cost) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string det_dir;
  std::string gt_dir;
  std::string task = "obb";
  double iou = 0.5;
  std::string ap_mode = "11pt";
  std::string output;
  std::string pr_output;
};

int cmd_evaluate(const EvaluateArgs& args) {
  const Task task = task_from_string(args.task);
  const GtIndex gts = load_annotation_dir(args.gt_dir);
  const std::vector<DetRecord> dets = load_detection_dir(args.det_dir, task);

  EvalOptions options;
  options.iou_thresh = args.iou;
  options.ap_mode = args.ap_mode == "all" ? ApMode::all_point : ApMode::eleven_point;
  const EvalResult result = evaluate(dets, gts, task, options);

  nlohmann::ordered_json report;
  report["task"] = to_string(task);
  report["iou_thresh"] = args.iou;
  report["ap_mode"] = args.ap_mode;
  report["num_images"] = gts.size();
  report["num_detections"] = dets.size();
  report["mAP"] = result.map;
  report["AR"] = result.ar;
  nlohmann::ordered_json classes = nlohmann::ordered_json::object();
  for (const auto& [name, cls] : result.per_class) {
    classes[name] = {{"AP", cls.ap}, {"num_gt", cls.num_gt}, {"num_det", cls.num_det}, {"tp", cls.true_positives}};
  }
  report["classes"] = classes;
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const RecallAtIou& r : result.recall_curve) curve.push_back({{"iou", r.iou}, {"recall", r.recall}});
  report["recall_curve"] = curve;
  emit(args.output, report.dump(2) + '\n');
  if (!args.output.empty() && args.output != "-") std::cout << "mAP: " << fixed6(result.map) << '\n';

  if (!args.pr_output.empty()) {
    std::string pr = "# category recall precision\n";
    for (const auto& [name, cls] : result.per_class) {
      for (const PrPoint& p : cls.pr) pr += name + ' ' + fixed6(p.recall) + ' ' + fixed6(p.precision) + '\n';
    }
    write_file_atomic(args.pr_output, pr);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::string loss = "all";
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double tolerance = 1e-5;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  const std::vector<GradTarget> targets = parse_grad_targets(args.loss);
  std::cout << "seed: " << args.seed << '\n';
  if (args.trials == 0) {
    std::cerr << "warning: --trials 0 checks nothing\n";
    return kExitOk;
  }
  bool pass = true;
  for (GradTarget t : targets) {
    const GradSuiteResult r = run_grad_suite(t, args.trials, args.seed);
    const bool ok = r.max_rel_error < args.tolerance;
    pass = pass && ok;
    std::cout << (ok ? "PASS " : "FAIL ") << to_string(t) << " trials=" << r.trials
              << " max_rel_error=" << std::scientific << std::setprecision(3) << r.max_rel_error
              << std::defaultfloat << '\n';
  }
  return pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t images = 1;
  std::size_t objects = 20;
  double image_size = 1024.0;
  std::vector<std::string> classes{"plane", "ship", "small-vehicle"};
  NoiseParams noise;
};

int cmd_synth(const SynthArgs& args) {
  SynthOptions options;
  options.seed = args.seed;
  options.n_objects = args.objects;
  options.image_size = args.image_size;
  options.classes = args.classes;
  options.noise = args.noise;
  const SynthCorpus corpus = synth_corpus(options, args.images);

  const fs::path root(args.out_dir);
  const fs::path ann_dir = root / "annotations";
  const fs::path det_dir = root / "detections";
  fs::create_directories(ann_dir);
  fs::create_directories(det_dir);

  for (const auto& [image, records] : corpus.gts) {
    write_file_atomic(ann_dir / (image + ".txt"),
                      "imagesource:rboxkit-synth\ngsd:null\n" + serialize_annotations(records));
  }
  std::map<std::string, std::string> obb_files, hbb_files;
  for (const std::string& cls : args.classes) {
    obb_files[cls];
    hbb_files[cls];
  }
  for (const DetRecord& d : corpus.dets) {
    obb_files[d.category] += format_detection(d) + '\n';
    DetRecord hbb = d;
    hbb.geometry = bounding_box(std::get<Quad>(d.geometry));
    hbb_files[d.category] += format_detection(hbb) + '\n';
  }
  for (const auto& [cls, text] : obb_files) write_file_atomic(det_dir / ("Task1_" + cls + ".txt"), text);
  for (const auto& [cls, text] : hbb_files) write_file_atomic(det_dir / ("Task2_" + cls + ".txt"), text);

  std::cout << "seed: " << args.seed << '\n'
            << "images: " << args.images << '\n'
            << "objects: " << args.images * args.objects << '\n'
            << "detections: " << corpus.dets.size() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotated-box detection toolkit: IoU, NMS, anchor clustering, DOTA evaluation"};
  app.require_subcommand(1);

  std::string iou_file;
  auto* iou = app.add_subcommand("iou", "Rotated IoU for each line of 16 numbers (two quads)");
  iou->add_option("pairs", iou_file, "File of quad pairs")->required();

  NmsArgs nms;
  auto* nms_cmd = app.add_subcommand("nms", "Rotated NMS (default) or Soft-NMS over one class's detection file");
  nms_cmd->add_option("detections", nms.input, "Detection file")->required();
  nms_cmd->add_option("-o,--output", nms.output, "Output file (default stdout)");
  nms_cmd->add_option("--iou-thresh", nms.iou_thresh, "IoU threshold (default 0.1, or 0.3 with --soft)");
  nms_cmd->add_flag("--soft", nms.soft, "Soft-NMS (HBB files)");
  nms_cmd->add_flag("--gaussian", nms.gaussian, "Gaussian Soft-NMS decay instead of linear");
  nms_cmd->add_option("--sigma", nms.sigma, "Gaussian decay sigma");
  nms_cmd->add_option("--score-floor", nms.score_floor, "Soft-NMS drop threshold");

  ClusterArgs cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "K-means++ IoU clustering of ground-truth box shapes");
  cluster_cmd->add_option("annotations", cluster.annotations, "Annotation directory")->required();
  cluster_cmd->add_option("-o,--output", cluster.output, "Priors file (default stdout)");
  cluster_cmd->add_option("--k", cluster.k, "Number of priors")->capture_default_str();
  cluster_cmd->add_option("--seed", cluster.seed, "RNG seed")->capture_default_str();
  cluster_cmd->add_option("--max-iter", cluster.max_iter, "Lloyd iteration cap")->capture_default_str();

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "DOTA-style mAP and AR");
  eval_cmd->add_option("--det", eval.det_dir, "Detection directory")->required();
  eval_cmd->add_option("--gt", eval.gt_dir, "Annotation directory")->required();
  eval_cmd->add_option("--task", eval.task, "hbb or obb")->check(CLI::IsMember({"hbb", "obb"}))->capture_default_str();
  eval_cmd->add_option("--iou", eval.iou, "Match IoU threshold")->capture_default_str();
  eval_cmd->add_option("--ap-mode", eval.ap_mode, "11pt or all")->check(CLI::IsMember({"11pt", "all"}))
      ->capture_default_str();
  eval_cmd->add_option("-o,--output", eval.output, "Report file (default stdout)");
  eval_cmd->add_option("--pr-out", eval.pr_output, "Write per-class PR curves here");

  GradcheckArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic loss gradients with central differences");
  grad_cmd->add_option("--loss", grad.loss, "all | smooth_l1 | rpn | roi | angle:<tangent_l1|smooth_l1|l2>")
      ->capture_default_str();
  grad_cmd->add_option("--trials", grad.trials, "Random points per loss")->capture_default_str();
  grad_cmd->add_option("--seed", grad.seed, "RNG seed")->capture_default_str();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic annotation + detection corpus");
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "RNG seed")->capture_default_str();
  synth_cmd->add_option("--images", synth.images, "Number of images")->capture_default_str();
  synth_cmd->add_option("--objects", synth.objects, "Objects per image")->capture_default_str();
  synth_cmd->add_option("--image-size", synth.image_size, "Square image side, pixels")->capture_default_str();
  synth_cmd->add_option("--classes", synth.classes, "Category names")->delimiter(',');
  synth_cmd->add_option("--jitter", synth.noise.corner_jitter, "Corner jitter std-dev, pixels");
  synth_cmd->add_option("--drop", synth.noise.drop_rate, "Probability of missing a ground truth");
  synth_cmd->add_option("--fp-rate", synth.noise.fp_rate, "Spurious detections per ground truth");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (iou->parsed()) return cmd_iou(iou_file);
    if (nms_cmd->parsed()) return cmd_nms(nms);
    if (cluster_cmd->parsed()) return cmd_cluster(cluster);
    if (eval_cmd->parsed()) return cmd_evaluate(eval);
    if (grad_cmd->parsed()) return cmd_gradcheck(grad);
    if (synth_cmd->parsed()) return cmd_synth(synth);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
