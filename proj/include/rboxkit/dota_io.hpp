#pragma once

// DOTA-convention text formats.
//
// Annotation file (one per image): optional "key:value" metadata lines, then
//   x1 y1 x2 y2 x3 y3 x4 y4 category difficult
// Detection file (one per class):
//   image_id score x1 y1 x2 y2 x3 y3 x4 y4     (OBB)
//   image_id score xmin ymin xmax ymax         (HBB)
// Coordinates are written with 6 significant digits, scores with 6 decimals.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rboxkit/geometry.hpp"

namespace rboxkit {

enum class Task { hbb, obb };

std::string_view to_string(Task task);
Task task_from_string(std::string_view name);

struct GtRecord {
  Quad quad;
  std::string category;
  bool difficult = false;

  friend bool operator==(const GtRecord&, const GtRecord&) = default;
};

struct DetRecord {
  std::string image_id;
  std::string category;
  double score = 0.0;
  std::variant<Quad, AABB> geometry;

  Task task() const { return std::holds_alternative<Quad>(geometry) ? Task::obb : Task::hbb; }

  friend bool operator==(const DetRecord&, const DetRecord&) = default;
};

/// Ground truth grouped by image id.
using GtIndex = std::map<std::string, std::vector<GtRecord>>;

std::string format_coord(double v);
std::string format_score(double v);

/// Throws ParseError carrying the offending 1-based line number.
std::vector<GtRecord> parse_annotations(std::string_view text);
std::vector<GtRecord> parse_annotations(std::istream& in);
std::string serialize_annotations(const std::vector<GtRecord>& records);

/// Calls `sink` for each row of a detection file without buffering the file.
/// Mixing OBB and HBB rows in one file is a ParseError.
void for_each_detection(std::istream& in, const std::string& category,
                        const std::function<void(DetRecord&&)>& sink);
std::vector<DetRecord> parse_detections(std::string_view text, const std::string& category);
std::string format_detection(const DetRecord& det);

/// Category named by a detection file: "Task1_plane.txt" and "plane.txt" both
/// give "plane".
std::string category_from_filename(const std::filesystem::path& path);

/// Every "*.txt" in `dir`, keyed by file stem (the image id).
GtIndex load_annotation_dir(const std::filesystem::path& dir);

/// Detection files in `dir` for `task`. Files prefixed "Task1_" hold OBB and
/// "Task2_" HBB results; unprefixed files are read whatever their task.
std::vector<DetRecord> load_detection_dir(const std::filesystem::path& dir, Task task);

/// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace rboxkit
