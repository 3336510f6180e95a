#include "dataset/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace tal::dataset {

using nlohmann::json;

void VideoRecord::validate() const {
  if (fps <= 0.0) throw SchemaError("video " + video_id + ": fps must be positive");
  if (unit_length <= 0)
    throw SchemaError("video " + video_id + ": unit_length must be positive");
  const double dur = duration();
  for (const auto& a : annotations) {
    if (!(a.t_start < a.t_end))
      throw SchemaError("video " + video_id + ": annotation with t_start >= t_end");
    if (a.t_start < 0.0)
      throw SchemaError("video " + video_id + ": annotation with negative t_start");
    if (a.label < 0) throw SchemaError("video " + video_id + ": negative label");
    if (a.t_end > dur + 1e-9)
      throw SchemaError("video " + video_id + ": annotation t_end exceeds duration");
  }
}

Vec class_mean(int label, int num_classes, int feature_dim, double separation) {
  // Distinct orthogonal-ish means: class c raises every dim congruent to c.
  Vec mu(feature_dim, 0.0);
  for (int d = 0; d < feature_dim; ++d) {
    if (num_classes > 0 && d % num_classes == label % num_classes) mu[d] = separation;
  }
  return mu;
}

std::vector<VideoRecord> parse_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file " + path.string());

  std::vector<VideoRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": malformed record: " + e.what());
    }
    VideoRecord rec;
    try {
      rec.video_id = j.at("video_id").get<std::string>();
      rec.fps = j.at("fps").get<double>();
      rec.unit_length = j.at("unit_length").get<int>();
      const auto& feats = j.at("features");
      const int t = static_cast<int>(feats.size());
      const int d = t > 0 ? static_cast<int>(feats.at(0).size()) : 0;
      rec.features = Matrix(t, d);
      for (int r = 0; r < t; ++r) {
        const auto& row = feats.at(r);
        if (static_cast<int>(row.size()) != d)
          throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                            ": inconsistent feature dimension in video " + rec.video_id);
        for (int c = 0; c < d; ++c) rec.features(r, c) = row.at(c).get<double>();
      }
      for (const auto& ja : j.at("annotations")) {
        ActionInstance a;
        a.label = ja.at("label").get<int>();
        a.t_start = ja.at("t_start").get<double>();
        a.t_end = ja.at("t_end").get<double>();
        rec.annotations.push_back(a);
      }
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": malformed record: " + e.what());
    }
    rec.validate();
    records.push_back(std::move(rec));
  }
  return records;
}

void serialize_dataset(const std::vector<VideoRecord>& records,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file " + path.string());
  for (const auto& rec : records) {
    json feats = json::array();
    for (int r = 0; r < rec.num_units(); ++r) {
      json row = json::array();
      for (int c = 0; c < rec.feature_dim(); ++c) row.push_back(rec.features(r, c));
      feats.push_back(std::move(row));
    }
    json anns = json::array();
    for (const auto& a : rec.annotations) {
      anns.push_back({{"label", a.label}, {"t_start", a.t_start}, {"t_end", a.t_end}});
    }
    json j = {{"video_id", rec.video_id},
              {"fps", rec.fps},
              {"unit_length", rec.unit_length},
              {"features", std::move(feats)},
              {"annotations", std::move(anns)}};
    out << j.dump() << "\n";
  }
}

namespace {

struct PlantedAction {
  int label;
  int first_unit;  // units [first_unit, last_unit] carry the action
  int last_unit;
  double t_start;
  double t_end;
};

// Picks non-overlapping unit spans by rejection; deterministic given rng.
std::vector<PlantedAction> plant_actions(const SynthConfig& cfg, int num_units,
                                         std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count_dist(cfg.min_actions, cfg.max_actions);
  const int want = count_dist(rng);

  std::vector<PlantedAction> placed;
  std::uniform_int_distribution<int> len_dist(cfg.min_action_units, cfg.max_action_units);
  const int max_attempts = 1000;
  for (int i = 0; i < want; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < max_attempts && !ok; ++attempt) {
      const int len = len_dist(rng);
      if (len > num_units) continue;
      std::uniform_int_distribution<int> pos_dist(0, num_units - len);
      const int first = pos_dist(rng);
      const int last = first + len - 1;
      ok = std::ranges::all_of(placed, [&](const PlantedAction& p) {
        return last < p.first_unit || first > p.last_unit;
      });
      if (ok) {
        PlantedAction p;
        p.first_unit = first;
        p.last_unit = last;
        std::uniform_int_distribution<int> label_dist(0, cfg.num_classes - 1);
        p.label = label_dist(rng);
        placed.push_back(p);
      }
    }
    if (!ok)
      throw GenerationError("could not place " + std::to_string(want) +
                            " non-overlapping actions in " + std::to_string(num_units) +
                            " units");
  }
  std::ranges::sort(placed, {}, &PlantedAction::first_unit);
  return placed;
}

}  // namespace

std::vector<VideoRecord> synth_generate(const SynthConfig& cfg) {
  if (cfg.num_videos < 0 || cfg.num_classes < 1 || cfg.feature_dim < 1)
    throw ConfigError("synth: degenerate sizes");
  if (cfg.min_units < 1 || cfg.max_units < cfg.min_units)
    throw ConfigError("synth: bad unit range");
  if (cfg.min_actions < 0 || cfg.max_actions < cfg.min_actions)
    throw ConfigError("synth: bad action count range");
  if (cfg.min_action_units < 2 || cfg.max_action_units < cfg.min_action_units)
    throw ConfigError("synth: action spans need at least 2 units");

  auto rng = make_rng(cfg.seed, "synth");
  std::normal_distribution<double> noise(0.0, 1.0);
  const double ul = cfg.unit_length;

  std::vector<VideoRecord> records;
  records.reserve(cfg.num_videos);
  for (int v = 0; v < cfg.num_videos; ++v) {
    VideoRecord rec;
    rec.video_id = cfg.id_prefix + std::to_string(v);
    rec.fps = cfg.fps;
    rec.unit_length = cfg.unit_length;

    std::uniform_int_distribution<int> units_dist(cfg.min_units, cfg.max_units);
    const int t = units_dist(rng);
    rec.features = Matrix(t, cfg.feature_dim);

    auto planted = plant_actions(cfg, t, rng);

    // Sub-unit boundary frames. Centered mode pins both boundaries to the
    // unit middle so the middle-frame transform is exact; off-center mode
    // draws them uniformly from the boundary unit's frames.
    for (auto& p : planted) {
      double start_frame = ul / 2.0;
      double end_frame = ul / 2.0;
      if (cfg.boundary_offset_mode == BoundaryOffsetMode::kOffCenter) {
        std::uniform_int_distribution<int> frame_dist(0, cfg.unit_length - 1);
        start_frame = frame_dist(rng);
        end_frame = frame_dist(rng);
      }
      p.t_start = (p.first_unit * ul + start_frame) / cfg.fps;
      p.t_end = (p.last_unit * ul + end_frame) / cfg.fps;
      rec.annotations.push_back({p.label, p.t_start, p.t_end});
    }

    // Feature rows: coverage-weighted class mean plus iid noise. Fully
    // covered units get exactly mu_c at zero noise; boundary units scale
    // with the covered fraction, which is the sub-unit signal interpolation
    // later recovers.
    for (int u = 0; u < t; ++u) {
      const double u_lo = u * ul / cfg.fps;
      const double u_hi = (u + 1) * ul / cfg.fps;
      double frac = 0.0;
      int label = -1;
      for (const auto& p : planted) {
        const double overlap =
            std::max(0.0, std::min(u_hi, p.t_end) - std::max(u_lo, p.t_start));
        if (overlap > 0.0) {
          frac = overlap / (u_hi - u_lo);
          label = p.label;
          break;  // planted actions never overlap
        }
      }
      auto row = rec.features.row(u);
      if (label >= 0) {
        Vec mu = class_mean(label, cfg.num_classes, cfg.feature_dim, cfg.class_mean_separation);
        for (int d = 0; d < cfg.feature_dim; ++d) row[d] = frac * mu[d];
      }
      if (cfg.noise_sigma > 0.0) {
        for (int d = 0; d < cfg.feature_dim; ++d) row[d] += cfg.noise_sigma * noise(rng);
      }
    }

    rec.validate();
    records.push_back(std::move(rec));
  }
  return records;
}

UnitTargets assign_unit_targets(const VideoRecord& video, double expansion_ratio) {
  if (expansion_ratio < 0.0) throw ConfigError("expansion_ratio must be >= 0");
  const int t = video.num_units();
  UnitTargets targets;
  targets.start.assign(t, 0);
  targets.end.assign(t, 0);
  targets.action.assign(t, 0);

  const double ud = video.unit_duration();
  const double widen = expansion_ratio * ud;
  for (const auto& a : video.annotations) {
    for (int u = 0; u < t; ++u) {
      const double lo = u * ud;
      const double hi = (u + 1) * ud;
      // Start times live on a right-open timeline: the widened interval
      // [t_s-w, t_s+w] hits unit spans [lo, hi). End times mirror this with
      // (lo, hi], so an end exactly on an edge belongs to the earlier unit.
      if (a.t_start - widen < hi && a.t_start + widen >= lo) targets.start[u] = 1;
      if (a.t_end - widen <= hi && a.t_end + widen > lo) targets.end[u] = 1;
      const double overlap = std::max(0.0, std::min(hi, a.t_end) - std::max(lo, a.t_start));
      if (overlap / ud > 0.5) targets.action[u] = 1;
    }
  }
  return targets;
}

WindowSample window_sample(const VideoRecord& video, const UnitTargets& targets,
                           int window, std::mt19937_64& rng) {
  if (window < 1) throw ConfigError("window must be >= 1");
  const int t = video.num_units();
  const int d = video.feature_dim();

  WindowSample out;
  out.features = Matrix(window, d);
  out.targets.start.assign(window, 0);
  out.targets.end.assign(window, 0);
  out.targets.action.assign(window, 0);

  int offset = 0;
  if (t > window) {
    std::uniform_int_distribution<int> dist(0, t - window);
    offset = dist(rng);
  }
  out.offset = offset;
  out.valid_len = std::min(t, window);
  for (int u = 0; u < out.valid_len; ++u) {
    const int src = offset + u;
    auto dst = out.features.row(u);
    auto s = video.features.row(src);
    std::copy(s.begin(), s.end(), dst.begin());
    out.targets.start[u] = targets.start[src];
    out.targets.end[u] = targets.end[src];
    out.targets.action[u] = targets.action[src];
  }
  return out;
}

}  // namespace tal::dataset
