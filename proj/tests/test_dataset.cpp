#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "dataset/dataset.hpp"

using namespace tal;
using namespace tal::dataset;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  auto p = fs::temp_directory_path() / ("tal_test_" + name);
  fs::remove(p);
  return p;
}

VideoRecord simple_video(int t, int d, double fps = 16.0, int unit_length = 16) {
  VideoRecord v;
  v.video_id = "vid";
  v.fps = fps;
  v.unit_length = unit_length;
  v.features = Matrix(t, d);
  return v;
}

}  // namespace

TEST_CASE("parse round-trips a one-video file") {
  auto path = temp_file("roundtrip.jsonl");
  {
    std::ofstream out(path);
    out << R"({"video_id":"a","fps":16.0,"unit_length":16,)"
        << R"("features":[[0.5,1.25],[2.0,3.0],[4.5,-1.0],[0.0,0.125]],)"
        << R"("annotations":[{"label":0,"t_start":0.5,"t_end":2.5}]})" << "\n";
  }
  auto records = parse_dataset(path);
  REQUIRE(records.size() == 1);
  CHECK(records[0].video_id == "a");
  CHECK(records[0].num_units() == 4);
  CHECK(records[0].feature_dim() == 2);
  CHECK(records[0].features(0, 1) == 1.25);
  CHECK(records[0].annotations.size() == 1);

  auto out_path = temp_file("roundtrip_out.jsonl");
  serialize_dataset(records, out_path);
  auto again = parse_dataset(out_path);
  CHECK(again == records);
}

TEST_CASE("parse of an empty file yields an empty list") {
  auto path = temp_file("empty.jsonl");
  std::ofstream(path).close();
  CHECK(parse_dataset(path).empty());
}

TEST_CASE("parse reports malformed lines with their line number") {
  auto path = temp_file("malformed.jsonl");
  {
    std::ofstream out(path);
    out << R"({"video_id":"a","fps":16.0,"unit_length":16,"features":[[1.0]],"annotations":[]})"
        << "\n";
    out << "{nope\n";
  }
  CHECK_THROWS_WITH_AS(parse_dataset(path), doctest::Contains(":2:"), ParseError);
}

TEST_CASE("annotation past the video duration is a schema error") {
  auto path = temp_file("overrun.jsonl");
  {
    std::ofstream out(path);
    // 2 units at 16 frames / 16 fps = 2 s of video, annotation ends at 3 s
    out << R"({"video_id":"a","fps":16.0,"unit_length":16,"features":[[1.0],[1.0]],)"
        << R"("annotations":[{"label":0,"t_start":0.5,"t_end":3.0}]})" << "\n";
  }
  CHECK_THROWS_AS(parse_dataset(path), SchemaError);
}

TEST_CASE("inconsistent feature dimension is rejected") {
  auto path = temp_file("baddim.jsonl");
  {
    std::ofstream out(path);
    out << R"({"video_id":"a","fps":16.0,"unit_length":16,"features":[[1.0,2.0],[1.0]],)"
        << R"("annotations":[]})" << "\n";
  }
  CHECK_THROWS_AS(parse_dataset(path), Error);
}

TEST_CASE("synthetic generation is deterministic per seed") {
  SynthConfig cfg;
  cfg.num_videos = 5;
  cfg.seed = 7;
  auto a = synth_generate(cfg);
  auto b = synth_generate(cfg);
  CHECK(a == b);

  // byte-identical when serialized
  auto pa = temp_file("synth_a.jsonl");
  auto pb = temp_file("synth_b.jsonl");
  serialize_dataset(a, pa);
  serialize_dataset(b, pb);
  std::ifstream fa(pa), fb(pb);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());

  cfg.seed = 8;
  CHECK_FALSE(synth_generate(cfg) == a);
}

TEST_CASE("zero noise puts fully covered units exactly at the class mean") {
  SynthConfig cfg;
  cfg.num_videos = 4;
  cfg.noise_sigma = 0.0;
  cfg.class_mean_separation = 1.0;
  cfg.seed = 3;
  for (const auto& v : synth_generate(cfg)) {
    for (const auto& a : v.annotations) {
      const Vec mu = class_mean(a.label, cfg.num_classes, cfg.feature_dim, 1.0);
      for (int u = 0; u < v.num_units(); ++u) {
        const double lo = u * v.unit_duration();
        const double hi = (u + 1) * v.unit_duration();
        if (lo >= a.t_start && hi <= a.t_end) {
          for (int d = 0; d < cfg.feature_dim; ++d) CHECK(v.features(u, d) == mu[d]);
        }
      }
    }
  }
}

TEST_CASE("generator postconditions hold on a 20-video corpus") {
  SynthConfig cfg;
  cfg.num_videos = 20;
  cfg.min_units = 80;
  cfg.max_units = 120;
  cfg.num_classes = 2;
  cfg.seed = 11;
  auto records = synth_generate(cfg);
  REQUIRE(records.size() == 20);
  for (const auto& v : records) {
    CHECK(v.num_units() >= 80);
    CHECK(v.num_units() <= 120);
    REQUIRE(v.annotations.size() >= 1);
    CHECK_NOTHROW(v.validate());
    // non-overlap, pairwise
    for (size_t i = 0; i < v.annotations.size(); ++i) {
      for (size_t j = i + 1; j < v.annotations.size(); ++j) {
        const auto& a = v.annotations[i];
        const auto& b = v.annotations[j];
        CHECK((a.t_end <= b.t_start || b.t_end <= a.t_start));
      }
    }
  }
}

TEST_CASE("unit target assignment follows the worked example") {
  auto v = simple_video(5, 1);
  v.annotations = {{0, 1.0, 3.0}};  // unit duration exactly 1 s
  auto t = assign_unit_targets(v, 0.0);
  CHECK(t.start == std::vector<uint8_t>{0, 1, 0, 0, 0});
  CHECK(t.end == std::vector<uint8_t>{0, 0, 1, 0, 0});
  CHECK(t.action == std::vector<uint8_t>{0, 1, 1, 0, 0});
}

TEST_CASE("no annotations gives all-zero targets") {
  auto v = simple_video(4, 2);
  auto t = assign_unit_targets(v, 0.5);
  CHECK(t.start == std::vector<uint8_t>(4, 0));
  CHECK(t.end == std::vector<uint8_t>(4, 0));
  CHECK(t.action == std::vector<uint8_t>(4, 0));
}

TEST_CASE("boundary-aligned start labels exactly one unit at zero expansion") {
  auto v = simple_video(4, 1);
  v.annotations = {{0, 2.0, 3.5}};
  auto t = assign_unit_targets(v, 0.0);
  int count = 0;
  for (auto s : t.start) count += s;
  CHECK(count == 1);
  CHECK(t.start[2] == 1);
}

TEST_CASE("start-positive set grows monotonically with the expansion ratio") {
  auto rng = make_rng(99, "targets-prop");
  std::uniform_real_distribution<double> time_dist(0.1, 7.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto v = simple_video(8, 1);
    double a = time_dist(rng), b = time_dist(rng);
    if (a > b) std::swap(a, b);
    if (a == b) b += 0.25;
    v.annotations = {{0, a, b}};
    const double r1 = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double r2 = r1 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto t1 = assign_unit_targets(v, r1);
    auto t2 = assign_unit_targets(v, r2);
    for (int u = 0; u < 8; ++u) {
      if (t1.start[u]) CHECK(t2.start[u]);
      if (t1.end[u]) CHECK(t2.end[u]);
    }
  }
}

TEST_CASE("at least one start-positive unit per annotation") {
  auto v = simple_video(10, 1);
  v.annotations = {{0, 0.25, 2.0}, {1, 4.5, 6.25}};
  auto t = assign_unit_targets(v, 0.0);
  int count = 0;
  for (auto s : t.start) count += s;
  CHECK(count >= 2);
}

TEST_CASE("window sampling covers the three length regimes") {
  auto rng = make_rng(5, "window");
  auto v = simple_video(100, 3);
  for (int u = 0; u < 100; ++u) v.features(u, 0) = u;
  auto targets = assign_unit_targets(v, 0.0);

  SUBCASE("exact fit returns the full sequence") {
    auto w = window_sample(v, targets, 100, rng);
    CHECK(w.valid_len == 100);
    CHECK(w.offset == 0);
    CHECK(w.features(99, 0) == 99.0);
  }

  SUBCASE("longer videos give a reproducible uniform slice") {
    auto v2 = simple_video(150, 1);
    for (int u = 0; u < 150; ++u) v2.features(u, 0) = u;
    auto t2 = assign_unit_targets(v2, 0.0);
    auto rng1 = make_rng(42, "w");
    auto rng2 = make_rng(42, "w");
    auto w1 = window_sample(v2, t2, 100, rng1);
    auto w2 = window_sample(v2, t2, 100, rng2);
    CHECK(w1.offset == w2.offset);
    CHECK(w1.offset >= 0);
    CHECK(w1.offset <= 50);
    CHECK(w1.features(0, 0) == static_cast<double>(w1.offset));
  }

  SUBCASE("short videos are padded and flagged") {
    auto v3 = simple_video(40, 2);
    auto t3 = assign_unit_targets(v3, 0.0);
    auto w = window_sample(v3, t3, 100, rng);
    CHECK(w.valid_len == 40);
    CHECK(w.features.rows() == 100);
    for (int u = 40; u < 100; ++u) {
      CHECK(w.features(u, 0) == 0.0);
      CHECK(w.targets.start[u] == 0);
    }
  }
}
