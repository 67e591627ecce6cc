#include "rboxkit/synth.hpp"

#include <algorithm>
#include <cstdio>

#include "rboxkit/error.hpp"
#include "rboxkit/rng.hpp"

namespace rboxkit {
namespace {

constexpr std::size_t kJitterRedraws = 16;

bool boxes_overlap(const AABB& a, const AABB& b) {
  return !(a.xmax() < b.xmin || b.xmax() < a.xmin || a.ymax() < b.ymin || b.ymax() < a.ymin);
}

// Rotated rectangle whose bounding box lies inside the image.
Quad random_rect(Rng& rng, const SynthOptions& o) {
  for (;;) {
    RRect r;
    r.w = rng.uniform(o.min_side, o.max_side);
    r.h = rng.uniform(o.min_side, o.max_side);
    r.angle = rng.uniform(0.0, 180.0);
    r.cx = rng.uniform(0.0, o.image_size);
    r.cy = rng.uniform(0.0, o.image_size);
    const Quad q = rrect_to_quad(r);
    const AABB b = bounding_box(q);
    if (b.xmin >= 0.0 && b.ymin >= 0.0 && b.xmax() <= o.image_size && b.ymax() <= o.image_size) return q;
  }
}

Quad jitter(Rng& rng, const Quad& q, double sigma) {
  if (sigma <= 0.0) return q;
  for (std::size_t attempt = 0; attempt < kJitterRedraws; ++attempt) {
    Quad out = q;
    for (Point2& p : out.corners) {
      p.x += sigma * rng.normal();
      p.y += sigma * rng.normal();
    }
    if (is_valid_quad(out)) return out;
  }
  return q;
}

}  // namespace

SynthScene synth_scene(const SynthOptions& o) {
  if (o.classes.empty()) throw ValidationError("synth_scene: at least one class is required");
  if (!(o.min_side > 0.0) || o.max_side < o.min_side || o.image_size < o.max_side * 1.5) {
    throw ValidationError("synth_scene: inconsistent object or image size");
  }
  const NoiseParams& n = o.noise;
  if (n.drop_rate < 0.0 || n.drop_rate > 1.0 || n.fp_rate < 0.0 || n.corner_jitter < 0.0) {
    throw ValidationError("synth_scene: noise parameters out of range");
  }

  Rng rng(o.seed);
  SynthScene scene;
  std::vector<AABB> placed;
  for (std::size_t i = 0; i < o.n_objects; ++i) {
    bool ok = false;
    for (std::size_t attempt = 0; attempt < o.max_attempts && !ok; ++attempt) {
      const Quad q = random_rect(rng, o);
      const AABB box = bounding_box(q);
      ok = true;
      for (std::size_t k = 0; k < placed.size() && ok; ++k) {
        if (boxes_overlap(box, placed[k]) && rotated_iou(q, scene.gts[k].quad) > 0.0) ok = false;
      }
      if (ok) {
        const std::string& cls = o.classes[rng.below(o.classes.size())];
        scene.gts.push_back({q, cls, false});
        placed.push_back(box);
      }
    }
    if (!ok) {
      throw Error("synth_scene: could not place object " + std::to_string(i + 1) + " of " +
                  std::to_string(o.n_objects) + " after " + std::to_string(o.max_attempts) + " attempts");
    }
  }

  for (const GtRecord& g : scene.gts) {
    if (!rng.bernoulli(n.drop_rate)) {
      DetRecord det;
      det.image_id = o.image_id;
      det.category = g.category;
      det.score = 0.5 + 0.5 * rng.uniform();
      det.geometry = jitter(rng, g.quad, n.corner_jitter);
      scene.dets.push_back(std::move(det));
    }
    if (rng.bernoulli(n.fp_rate)) {
      DetRecord fp;
      fp.image_id = o.image_id;
      fp.category = o.classes[rng.below(o.classes.size())];
      fp.score = 0.5 * rng.uniform();
      fp.geometry = random_rect(rng, o);
      scene.dets.push_back(std::move(fp));
    }
  }
  return scene;
}

SynthCorpus synth_corpus(const SynthOptions& options, std::size_t images) {
  SynthCorpus corpus;
  for (std::size_t i = 0; i < images; ++i) {
    SynthOptions o = options;
    char id[32];
    std::snprintf(id, sizeof(id), "img%04zu", i);
    o.image_id = id;
    o.seed = Rng(options.seed ^ (0xD1B54A32D192ED03ULL * (i + 1))).next_u64();
    SynthScene scene = synth_scene(o);
    corpus.gts[o.image_id] = std::move(scene.gts);
    for (DetRecord& d : scene.dets) corpus.dets.push_back(std::move(d));
  }
  return corpus;
}

}  // namespace rboxkit
