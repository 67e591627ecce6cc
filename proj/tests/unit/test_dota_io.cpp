#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "rboxkit/dota_io.hpp"
#include "rboxkit/error.hpp"

using namespace rboxkit;
namespace fs = std::filesystem;

namespace {

// Records whose coordinates survive 6-significant-digit printing unchanged.
std::vector<GtRecord> generated_corpus(std::size_t n, std::uint64_t seed) {
  static const char* kClasses[] = {"plane", "ship", "storage-tank", "small-vehicle", "harbor"};
  Rng rng(seed);
  std::vector<GtRecord> out;
  while (out.size() < n) {
    Quad q = rrect_to_quad(rboxkit::testing::random_rrect(rng));
    for (Point2& p : q.corners) {
      p.x = std::round((p.x + 200.0) * 10.0) / 10.0;
      p.y = std::round((p.y + 200.0) * 10.0) / 10.0;
    }
    if (!is_valid_quad(q)) continue;
    out.push_back({q, kClasses[rng.below(5)], rng.bernoulli(0.1)});
  }
  return out;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("rboxkit_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

template <typename Fn>
std::size_t parse_error_line(Fn fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line " + std::to_string(e.line())), std::string::npos) << e.what();
    return e.line();
  }
  ADD_FAILURE() << "expected ParseError";
  return 0;
}

}  // namespace

TEST(Annotations, SingleLine) {
  const auto recs = parse_annotations("0 0 10 0 10 5 0 5 plane 0\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].category, "plane");
  EXPECT_FALSE(recs[0].difficult);
  EXPECT_EQ(recs[0].quad.corners[2], (Point2{10, 5}));
}

TEST(Annotations, MetadataAndBlankLinesAreSkipped) {
  EXPECT_TRUE(parse_annotations("imagesource:GoogleEarth\ngsd:0.146\n\n").empty());
  const auto recs = parse_annotations("imagesource:GoogleEarth\r\ngsd:null\r\n1 1 4 1 4 3 1 3 ship 1\r\n");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_TRUE(recs[0].difficult);
}

TEST(Annotations, StreamAndStringAgree) {
  const std::string text = serialize_annotations(generated_corpus(50, 3));
  std::istringstream in(text);
  EXPECT_EQ(parse_annotations(in), parse_annotations(text));
}

TEST(Annotations, DiagnosticsCarryLineNumbers) {
  EXPECT_EQ(parse_error_line([] { parse_annotations("gsd:1\n0 0 1 0 1 1 0 1 a 0\n0 0 1 0 1 1 0 a 0\n"); }), 3u);
  EXPECT_EQ(parse_error_line([] { parse_annotations("0 0 1 0 1 1 0 1 a 2\n"); }), 1u);
  EXPECT_EQ(parse_error_line([] { parse_annotations("\n\n0 0 4 0 1 1 0 4 a 0\n"); }), 3u);  // non-convex
  EXPECT_EQ(parse_error_line([] { parse_annotations("0 0 1 0 1 1 0 1 a\n"); }), 1u);
}

TEST(Annotations, RoundTripIsFieldExact) {
  const auto corpus = generated_corpus(10000, 11);
  const std::string text = serialize_annotations(corpus);
  const auto first = parse_annotations(text);
  EXPECT_EQ(first, corpus);
  const auto second = parse_annotations(serialize_annotations(first));
  EXPECT_EQ(second, first);
  EXPECT_EQ(serialize_annotations(second), text);
}

TEST(Formatting, CoordinatesAndScores) {
  EXPECT_EQ(format_coord(12.0), "12");
  EXPECT_EQ(format_coord(123.4567), "123.457");
  EXPECT_EQ(format_coord(-0.5), "-0.5");
  EXPECT_EQ(format_score(0.5), "0.500000");
  EXPECT_EQ(format_score(1.0 / 3.0), "0.333333");
}

TEST(Detections, ObbAndHbbRows) {
  const auto obb = parse_detections("P0001 0.9 0 0 4 0 4 2 0 2\nP0002 0.250000 1 1 3 1 3 3 1 3\n", "plane");
  ASSERT_EQ(obb.size(), 2u);
  EXPECT_EQ(obb[0].task(), Task::obb);
  EXPECT_EQ(obb[0].category, "plane");
  EXPECT_EQ(obb[1].image_id, "P0002");

  const auto hbb = parse_detections("P0001 0.9 10 20 30 60\n", "ship");
  ASSERT_EQ(hbb.size(), 1u);
  EXPECT_EQ(hbb[0].task(), Task::hbb);
  EXPECT_EQ(std::get<AABB>(hbb[0].geometry), (AABB{10, 20, 20, 40}));
}

TEST(Detections, FormatParseRoundTrip) {
  DetRecord d{"img7", "plane", 0.123456, rrect_to_quad({50, 50, 20, 10, 0})};
  const auto back = parse_detections(format_detection(d) + "\n", "plane");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], d);

  DetRecord h{"img8", "ship", 0.5, AABB{1, 2, 3, 4}};
  EXPECT_EQ(format_detection(h), "img8 0.500000 1 2 4 6");
  EXPECT_EQ(parse_detections(format_detection(h), "ship")[0], h);
}

TEST(Detections, MixedRowsAndBadFieldsReportLines) {
  EXPECT_EQ(parse_error_line([] { parse_detections("a 0.9 0 0 1 1\nb 0.8 0 0 4 0 4 2 0 2\n", "x"); }), 2u);
  EXPECT_EQ(parse_error_line([] { parse_detections("a 0.9 0 0 1 1\n\na zero 0 0 1 1\n", "x"); }), 3u);
  EXPECT_EQ(parse_error_line([] { parse_detections("a 1.5 0 0 1 1\n", "x"); }), 1u);
  EXPECT_EQ(parse_error_line([] { parse_detections("a 0.5 0 0 1\n", "x"); }), 1u);
  EXPECT_EQ(parse_error_line([] { parse_detections("a 0.5 5 0 1 1\n", "x"); }), 1u);
}

TEST(Detections, StreamingVisitsEveryRow) {
  std::istringstream in("a 0.9 0 0 1 1\nb 0.8 0 0 2 2\nc 0.7 0 0 3 3\n");
  std::vector<std::string> ids;
  for_each_detection(in, "x", [&](DetRecord&& d) { ids.push_back(d.image_id); });
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Files, CategoryFromFilename) {
  EXPECT_EQ(category_from_filename("dets/Task1_plane.txt"), "plane");
  EXPECT_EQ(category_from_filename("Task2_small-vehicle.txt"), "small-vehicle");
  EXPECT_EQ(category_from_filename("ship.txt"), "ship");
  EXPECT_EQ(task_from_string("obb"), Task::obb);
  EXPECT_THROW(task_from_string("rbb"), ValidationError);
}

TEST(Files, DirectoryLoadingAndFileContext) {
  TempDir tmp;
  fs::create_directories(tmp.path() / "ann");
  fs::create_directories(tmp.path() / "det");
  write(tmp.path() / "ann" / "img1.txt", "gsd:0.1\n0 0 4 0 4 2 0 2 plane 0\n");
  write(tmp.path() / "ann" / "img2.txt", "");
  write(tmp.path() / "ann" / "notes.md", "ignored");
  write(tmp.path() / "det" / "Task1_plane.txt", "img1 0.9 0 0 4 0 4 2 0 2\n");
  write(tmp.path() / "det" / "Task2_plane.txt", "img1 0.9 0 0 4 2\n");

  const GtIndex gts = load_annotation_dir(tmp.path() / "ann");
  ASSERT_EQ(gts.size(), 2u);
  EXPECT_EQ(gts.at("img1").size(), 1u);
  EXPECT_TRUE(gts.at("img2").empty());

  const auto obb = load_detection_dir(tmp.path() / "det", Task::obb);
  ASSERT_EQ(obb.size(), 1u);
  EXPECT_EQ(obb[0].task(), Task::obb);
  const auto hbb = load_detection_dir(tmp.path() / "det", Task::hbb);
  ASSERT_EQ(hbb.size(), 1u);
  EXPECT_EQ(hbb[0].task(), Task::hbb);

  write(tmp.path() / "ann" / "img3.txt", "0 0 4 0 4 2 0 2 plane 0\n0 0 4 0 oops 2 0 2 plane 0\n");
  try {
    load_annotation_dir(tmp.path() / "ann");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("img3.txt"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_annotation_dir(tmp.path() / "missing"), Error);
}

TEST(Files, AtomicWriteReplacesContents) {
  TempDir tmp;
  const fs::path p = tmp.path() / "out.txt";
  write_file_atomic(p, "first");
  write_file_atomic(p, "second");
  std::ifstream in(p);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(s, "second");
  EXPECT_FALSE(fs::exists(tmp.path() / "out.txt.tmp"));
}
