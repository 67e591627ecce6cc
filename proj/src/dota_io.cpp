#include "rboxkit/dota_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>

#include "rboxkit/error.hpp"

namespace rboxkit {
namespace {

namespace fs = std::filesystem;

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

std::optional<double> to_double(std::string_view token) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

double field(std::string_view token, std::string_view what, std::size_t line_no) {
  if (auto v = to_double(token)) return *v;
  throw ParseError("non-numeric " + std::string(what) + " '" + std::string(token) + "'", line_no);
}

bool is_blank(std::string_view line) { return line.find_first_not_of(" \t\r\n") == std::string_view::npos; }

Quad read_quad(std::span<const std::string_view> tokens, std::size_t line_no) {
  Quad q;
  for (std::size_t i = 0; i < 4; ++i) {
    q.corners[i] = {field(tokens[2 * i], "coordinate", line_no), field(tokens[2 * i + 1], "coordinate", line_no)};
  }
  if (!is_valid_quad(q)) throw ParseError("quad must be convex with non-zero area", line_no);
  return q;
}

std::optional<GtRecord> parse_annotation_line(std::string_view line, std::size_t line_no) {
  if (is_blank(line)) return std::nullopt;
  const auto tokens = split_ws(line);
  // Metadata such as "imagesource:GoogleEarth" or "gsd:0.146".
  if (tokens.size() <= 2 && line.find(':') != std::string_view::npos) return std::nullopt;
  if (tokens.size() != 10) {
    throw ParseError("expected 10 fields (8 coordinates, category, difficult), got " +
                         std::to_string(tokens.size()),
                     line_no);
  }
  GtRecord rec;
  rec.quad = read_quad(std::span(tokens).first(8), line_no);
  rec.category = std::string(tokens[8]);
  if (tokens[9] == "0") {
    rec.difficult = false;
  } else if (tokens[9] == "1") {
    rec.difficult = true;
  } else {
    throw ParseError("difficult flag must be 0 or 1, got '" + std::string(tokens[9]) + "'", line_no);
  }
  return rec;
}

}  // namespace

std::string_view to_string(Task task) { return task == Task::obb ? "obb" : "hbb"; }

Task task_from_string(std::string_view name) {
  if (name == "obb" || name == "OBB") return Task::obb;
  if (name == "hbb" || name == "HBB") return Task::hbb;
  throw ValidationError("task must be 'hbb' or 'obb', got '" + std::string(name) + "'");
}

std::string format_coord(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

std::string format_score(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 6);
  return std::string(buf, res.ptr);
}

std::vector<GtRecord> parse_annotations(std::string_view text) {
  std::vector<GtRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    ++line_no;
    if (auto rec = parse_annotation_line(text.substr(pos, end - pos), line_no)) out.push_back(std::move(*rec));
    if (end == text.size()) break;
    pos = end + 1;
  }
  return out;
}

std::vector<GtRecord> parse_annotations(std::istream& in) {
  std::vector<GtRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto rec = parse_annotation_line(line, line_no)) out.push_back(std::move(*rec));
  }
  return out;
}

std::string serialize_annotations(const std::vector<GtRecord>& records) {
  std::string out;
  for (const GtRecord& r : records) {
    for (const Point2& p : r.quad.corners) {
      out += format_coord(p.x);
      out += ' ';
      out += format_coord(p.y);
      out += ' ';
    }
    out += r.category;
    out += r.difficult ? " 1\n" : " 0\n";
  }
  return out;
}

void for_each_detection(std::istream& in, const std::string& category,
                        const std::function<void(DetRecord&&)>& sink) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> width;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto tokens = split_ws(line);
    if (tokens.size() != 10 && tokens.size() != 6) {
      throw ParseError("expected 10 (OBB) or 6 (HBB) fields, got " + std::to_string(tokens.size()), line_no);
    }
    if (width && *width != tokens.size()) throw ParseError("file mixes OBB and HBB rows", line_no);
    width = tokens.size();

    DetRecord det;
    det.image_id = std::string(tokens[0]);
    det.category = category;
    det.score = field(tokens[1], "score", line_no);
    if (det.score < 0.0 || det.score > 1.0) throw ParseError("score must lie in [0, 1]", line_no);
    if (tokens.size() == 10) {
      det.geometry = read_quad(std::span(tokens).subspan(2, 8), line_no);
    } else {
      const double xmin = field(tokens[2], "coordinate", line_no);
      const double ymin = field(tokens[3], "coordinate", line_no);
      const double xmax = field(tokens[4], "coordinate", line_no);
      const double ymax = field(tokens[5], "coordinate", line_no);
      if (xmax < xmin || ymax < ymin) throw ParseError("box has xmax < xmin or ymax < ymin", line_no);
      det.geometry = AABB{xmin, ymin, xmax - xmin, ymax - ymin};
    }
    sink(std::move(det));
  }
}

std::vector<DetRecord> parse_detections(std::string_view text, const std::string& category) {
  std::istringstream in{std::string(text)};
  std::vector<DetRecord> out;
  for_each_detection(in, category, [&](DetRecord&& d) { out.push_back(std::move(d)); });
  return out;
}

std::string format_detection(const DetRecord& det) {
  std::string out = det.image_id + ' ' + format_score(det.score);
  if (const Quad* q = std::get_if<Quad>(&det.geometry)) {
    for (const Point2& p : q->corners) out += ' ' + format_coord(p.x) + ' ' + format_coord(p.y);
  } else {
    const AABB& b = std::get<AABB>(det.geometry);
    out += ' ' + format_coord(b.xmin) + ' ' + format_coord(b.ymin) + ' ' + format_coord(b.xmax()) + ' ' +
           format_coord(b.ymax());
  }
  return out;
}

std::string category_from_filename(const fs::path& path) {
  std::string stem = path.stem().string();
  for (std::string_view prefix : {"Task1_", "Task2_"}) {
    if (stem.starts_with(prefix)) return stem.substr(prefix.size());
  }
  return stem;
}

GtIndex load_annotation_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("annotation directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  GtIndex index;
  for (const fs::path& f : files) {
    std::ifstream in(f);
    if (!in) throw Error("cannot read " + f.string());
    try {
      index[f.stem().string()] = parse_annotations(in);
    } catch (const ParseError& e) {
      throw ParseError::in_file(f.filename().string(), e);
    }
  }
  return index;
}

std::vector<DetRecord> load_detection_dir(const fs::path& dir, Task task) {
  if (!fs::is_directory(dir)) throw Error("detection directory not found: " + dir.string());
  const std::string_view skip_prefix = task == Task::obb ? "Task2_" : "Task1_";
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    if (entry.path().stem().string().starts_with(skip_prefix)) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<DetRecord> out;
  for (const fs::path& f : files) {
    std::ifstream in(f);
    if (!in) throw Error("cannot read " + f.string());
    try {
      for_each_detection(in, category_from_filename(f), [&](DetRecord&& d) { out.push_back(std::move(d)); });
    } catch (const ParseError& e) {
      throw ParseError::in_file(f.filename().string(), e);
    }
  }
  return out;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace rboxkit
