#pragma once

// Seeded synthetic scenes: non-overlapping rotated rectangles as ground
// truth plus detections derived from them by a simple noise model.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rboxkit/dota_io.hpp"

namespace rboxkit {

struct NoiseParams {
  double corner_jitter = 0.0;  // std-dev of per-corner offsets, pixels
  double drop_rate = 0.0;      // probability a ground truth gets no detection
  double fp_rate = 0.0;        // expected spurious detections per ground truth
};

struct SynthOptions {
  std::uint64_t seed = 0;
  std::size_t n_objects = 10;
  double image_size = 1024.0;
  std::vector<std::string> classes{"plane", "ship", "small-vehicle"};
  NoiseParams noise;
  double min_side = 12.0;
  double max_side = 96.0;
  std::size_t max_attempts = 2000;  // per object
  std::string image_id = "img0000";
};

struct SynthScene {
  std::vector<GtRecord> gts;
  std::vector<DetRecord> dets;  // OBB detections
};

/// Throws Error when the objects cannot be packed within max_attempts draws.
SynthScene synth_scene(const SynthOptions& options);

struct SynthCorpus {
  GtIndex gts;
  std::vector<DetRecord> dets;
};

/// `images` scenes named img0000, img0001, ...; scene i uses a seed derived
/// from (options.seed, i).
SynthCorpus synth_corpus(const SynthOptions& options, std::size_t images);

}  // namespace rboxkit
