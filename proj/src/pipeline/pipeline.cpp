#include "pipeline/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"
#include "dataset/dataset.hpp"
#include "network/train.hpp"
#include "proposal/proposal.hpp"
#include "ranking/ranking.hpp"

namespace tal::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";

std::string variant_tag(const PipelineConfig& cfg) {
  return cfg.proposal.mode + "_" + cfg.ranker.variant;
}

json load_manifest(const fs::path& ws) {
  std::ifstream in(ws / kManifest);
  if (!in) return json::object();
  json j;
  try {
    in >> j;
  } catch (const json::exception&) {
    return json::object();
  }
  return j;
}

void save_manifest(const fs::path& ws, const json& j) {
  std::ofstream out(ws / kManifest);
  out << j.dump(2) << "\n";
}

dataset::SynthConfig synth_config(const PipelineConfig& cfg, bool train) {
  dataset::SynthConfig sc;
  const auto& d = cfg.dataset;
  sc.num_videos = train ? d.num_train_videos : d.num_test_videos;
  sc.num_classes = d.num_classes;
  sc.feature_dim = d.feature_dim;
  sc.min_units = d.min_units;
  sc.max_units = d.max_units;
  sc.fps = d.fps;
  sc.unit_length = d.unit_length;
  sc.min_actions = d.min_actions;
  sc.max_actions = d.max_actions;
  sc.min_action_units = d.min_action_units;
  sc.max_action_units = d.max_action_units;
  sc.class_mean_separation = d.class_mean_separation;
  sc.noise_sigma = d.noise_sigma;
  sc.boundary_offset_mode = d.boundary_offset_mode == "centered"
                                ? dataset::BoundaryOffsetMode::kCentered
                                : dataset::BoundaryOffsetMode::kOffCenter;
  sc.seed = train ? cfg.seed : fnv1a("test-split", cfg.seed);
  sc.id_prefix = train ? "train_v" : "test_v";
  return sc;
}

network::TrainConfig prob_train_config(const PipelineConfig& cfg) {
  network::TrainConfig tc;
  tc.hidden_size = cfg.network.hidden_size;
  tc.num_layers = cfg.network.num_layers;
  tc.k_steps = cfg.network.k_steps;
  tc.epochs = cfg.training.epochs;
  tc.batch_size = cfg.training.batch_size;
  tc.window = cfg.training.window;
  tc.learning_rate = cfg.training.learning_rate;
  tc.decay_factor = cfg.training.decay_factor;
  tc.decay_epoch = cfg.training.decay_epoch;
  tc.l2_lambda = cfg.network.l2_lambda;
  tc.beta = cfg.network.beta;
  tc.dropout = cfg.network.dropout;
  tc.expansion_ratio = cfg.dataset.expansion_ratio;
  tc.seed = cfg.seed;
  return tc;
}

struct VideoSummary {
  proposal::UnitProbSummary summary;
  proposal::VideoMeta meta;
};

void write_summaries(const std::map<std::string, VideoSummary>& summaries,
                     const fs::path& path, const std::vector<std::string>& order) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write summaries " + path.string());
  for (const auto& id : order) {
    const auto& vs = summaries.at(id);
    json j = {{"video_id", id},
              {"fps", vs.meta.fps},
              {"unit_length", vs.meta.unit_length},
              {"avg_start", vs.summary.avg_start},
              {"avg_end", vs.summary.avg_end},
              {"avg_action", vs.summary.avg_action}};
    out << j.dump() << "\n";
  }
}

std::map<std::string, VideoSummary> read_summaries(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("summaries not found: " + path.string());
  std::map<std::string, VideoSummary> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      VideoSummary vs;
      vs.meta.fps = j.at("fps").get<double>();
      vs.meta.unit_length = j.at("unit_length").get<int>();
      vs.summary.avg_start = j.at("avg_start").get<Vec>();
      vs.summary.avg_end = j.at("avg_end").get<Vec>();
      vs.summary.avg_action = j.at("avg_action").get<Vec>();
      out[j.at("video_id").get<std::string>()] = std::move(vs);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// Dominant ground-truth label; ties go to the smaller label.
int dominant_label(const std::vector<dataset::ActionInstance>& annotations) {
  std::map<int, int> counts;
  for (const auto& a : annotations) ++counts[a.label];
  int best = -1, best_count = 0;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

}  // namespace

Pipeline::Pipeline(fs::path config_path, fs::path workspace)
    : config_path_(std::move(config_path)), workspace_(std::move(workspace)) {
  if (workspace_.empty()) throw ConfigError("workspace directory is required");
}

const std::vector<std::string>& Pipeline::stage_names() {
  static const std::vector<std::string> names = {"synth",      "train-prob", "propose",
                                                 "train-rank", "rank",       "eval"};
  return names;
}

PipelineConfig Pipeline::load_effective_config() const {
  if (config_path_.empty()) throw ConfigError("a config file is required for this command");
  PipelineConfig cfg = load_config_file(config_path_);
  if (seed_override_) cfg.seed = *seed_override_;
  return cfg;
}

void Pipeline::require_artifact(const std::string& name, const std::string& expected_hash,
                                const std::string& producer_stage) const {
  if (!fs::exists(workspace_ / name))
    throw MissingArtifactError("missing artifact '" + name + "'; run '" + producer_stage +
                               "' first");
  if (force_) return;
  const json manifest = load_manifest(workspace_);
  if (manifest.contains(name) && manifest.at(name).get<std::string>() != expected_hash)
    throw ConfigError("artifact '" + name +
                      "' was produced with a different configuration; rerun '" +
                      producer_stage + "' or pass --force");
}

void Pipeline::record_artifact(const std::string& name, const std::string& hash) const {
  json manifest = load_manifest(workspace_);
  manifest[name] = hash;
  save_manifest(workspace_, manifest);
}

struct Pipeline::Context {
  PipelineConfig cfg;
  ConfigHashes hashes;
  std::string tag;  // <mode>_<variant>
};

void Pipeline::run(const std::string& stage) {
  Context ctx{load_effective_config(), {}, ""};
  ctx.hashes = config_hashes(ctx.cfg);
  ctx.tag = variant_tag(ctx.cfg);
  fs::create_directories(workspace_);

  if (stage == "synth") return run_synth(ctx);
  if (stage == "train-prob") return run_train_prob(ctx);
  if (stage == "propose") return run_propose(ctx);
  if (stage == "train-rank") return run_train_rank(ctx);
  if (stage == "rank") return run_rank(ctx);
  if (stage == "eval") return run_eval(ctx);
  if (stage == "all") {
    run_synth(ctx);
    run_train_prob(ctx);
    run_propose(ctx);
    run_train_rank(ctx);
    run_rank(ctx);
    run_eval(ctx);
    return;
  }
  throw ConfigError("unknown stage '" + stage + "'");
}

void Pipeline::run_synth(Context& ctx) {
  const auto train = dataset::synth_generate(synth_config(ctx.cfg, true));
  const auto test = dataset::synth_generate(synth_config(ctx.cfg, false));
  dataset::serialize_dataset(train, workspace_ / "dataset_train.jsonl");
  dataset::serialize_dataset(test, workspace_ / "dataset_test.jsonl");
  record_artifact("dataset_train.jsonl", ctx.hashes.dataset);
  record_artifact("dataset_test.jsonl", ctx.hashes.dataset);
}

void Pipeline::run_train_prob(Context& ctx) {
  require_artifact("dataset_train.jsonl", ctx.hashes.dataset, "synth");
  const auto videos = dataset::parse_dataset(workspace_ / "dataset_train.jsonl");
  const auto result = network::train_probability_model(videos, prob_train_config(ctx.cfg));

  network::ModelHyperparams hp;
  hp.input_dim = videos.front().feature_dim();
  hp.hidden_size = ctx.cfg.network.hidden_size;
  hp.num_layers = ctx.cfg.network.num_layers;
  hp.k_steps = ctx.cfg.network.k_steps;
  network::save_model(result.params, hp, workspace_ / "prob_model.json");

  json log = {{"epoch_loss", result.epoch_loss}};
  std::ofstream out(workspace_ / "train_log.json");
  out << log.dump(2) << "\n";
  record_artifact("prob_model.json", ctx.hashes.prob_model);
  record_artifact("train_log.json", ctx.hashes.prob_model);
}

void Pipeline::run_propose(Context& ctx) {
  require_artifact("dataset_train.jsonl", ctx.hashes.dataset, "synth");
  require_artifact("dataset_test.jsonl", ctx.hashes.dataset, "synth");
  require_artifact("prob_model.json", ctx.hashes.prob_model, "train-prob");
  auto [params, hp] = network::load_model(workspace_ / "prob_model.json");

  proposal::ProposalConfig pc;
  pc.vote_count = ctx.cfg.proposal.vote_count;
  pc.vote_threshold = ctx.cfg.proposal.vote_threshold;
  pc.max_duration_units = ctx.cfg.proposal.max_duration_units;
  pc.mode = ctx.cfg.boundary_mode();

  auto rng = make_rng(ctx.cfg.seed, "inference");
  for (const char* split : {"train", "test"}) {
    const auto videos =
        dataset::parse_dataset(workspace_ / ("dataset_" + std::string(split) + ".jsonl"));
    std::vector<proposal::DumpRow> rows;
    std::map<std::string, VideoSummary> summaries;
    std::vector<std::string> order;
    for (const auto& v : videos) {
      auto [grid, cache] = network::model_forward(v.features, params, 0.0, false, rng);
      proposal::VideoMeta meta{v.unit_length, v.fps};
      auto props = proposal::generate_proposals(grid, meta, pc);
      for (auto& p : props) rows.push_back({v.video_id, p});
      summaries[v.video_id] = {proposal::summarize_grid(grid), meta};
      order.push_back(v.video_id);
    }
    const std::string dump_name =
        "proposals_" + std::string(split) + "_" + ctx.cfg.proposal.mode + ".tsv";
    proposal::write_proposal_dump(rows, workspace_ / dump_name);
    const std::string summ_name = "summaries_" + std::string(split) + ".jsonl";
    write_summaries(summaries, workspace_ / summ_name, order);
    record_artifact(dump_name, ctx.hashes.proposals);
    record_artifact(summ_name, ctx.hashes.prob_model);
  }
}

void Pipeline::run_train_rank(Context& ctx) {
  const std::string dump_name = "proposals_train_" + ctx.cfg.proposal.mode + ".tsv";
  require_artifact(dump_name, ctx.hashes.proposals, "propose");
  require_artifact("summaries_train.jsonl", ctx.hashes.prob_model, "propose");
  require_artifact("dataset_train.jsonl", ctx.hashes.dataset, "synth");

  const auto rows = proposal::read_proposal_dump(workspace_ / dump_name);
  const auto summaries = read_summaries(workspace_ / "summaries_train.jsonl");
  const auto videos = dataset::parse_dataset(workspace_ / "dataset_train.jsonl");

  double max_len = 0.0;
  for (const auto& v : videos) max_len = std::max(max_len, v.duration());

  const auto variant = ctx.cfg.ranker_variant();
  std::map<std::string, int> index_of;
  std::vector<std::vector<ranking::LabeledProposal>> lists(videos.size());
  for (int i = 0; i < static_cast<int>(videos.size()); ++i) index_of[videos[i].video_id] = i;
  for (const auto& row : rows) {
    auto it = index_of.find(row.video_id);
    if (it == index_of.end())
      throw Error("proposal dump references unknown video id '" + row.video_id + "'");
    const auto& vs = summaries.at(row.video_id);
    ranking::LabeledProposal lp;
    lp.features = ranking::build_features(row.p, vs.summary, vs.meta, variant, max_len);
    lp.label = ranking::overlap_label(row.p, videos[it->second].annotations);
    lists[it->second].push_back(std::move(lp));
  }

  ranking::RankerTrainConfig rc;
  rc.variant = variant;
  rc.hidden = ctx.cfg.ranker.hidden_size;
  rc.smooth_l1_delta = ctx.cfg.ranker.smooth_l1_delta;
  rc.epochs = ctx.cfg.training.ranker_epochs;
  rc.batch_size = ctx.cfg.training.ranker_batch_size;
  rc.learning_rate = ctx.cfg.training.ranker_learning_rate;
  rc.decay_factor = ctx.cfg.training.ranker_decay_factor;
  rc.decay_epoch = ctx.cfg.training.ranker_decay_epoch;
  rc.seed = ctx.cfg.seed;

  ranking::RankerCheckpoint ckpt;
  ckpt.params = ranking::train_ranker(lists, rc);
  ckpt.variant = variant;
  ckpt.max_video_length = max_len;
  const std::string ckpt_name = "ranker_" + ctx.tag + ".json";
  ranking::save_ranker(ckpt, workspace_ / ckpt_name);
  record_artifact(ckpt_name, ctx.hashes.ranker);
}

void Pipeline::run_rank(Context& ctx) {
  const std::string dump_name = "proposals_test_" + ctx.cfg.proposal.mode + ".tsv";
  const std::string ckpt_name = "ranker_" + ctx.tag + ".json";
  require_artifact(dump_name, ctx.hashes.proposals, "propose");
  require_artifact("summaries_test.jsonl", ctx.hashes.prob_model, "propose");
  require_artifact(ckpt_name, ctx.hashes.ranker, "train-rank");

  const auto rows = proposal::read_proposal_dump(workspace_ / dump_name);
  const auto summaries = read_summaries(workspace_ / "summaries_test.jsonl");
  const auto ckpt = ranking::load_ranker(workspace_ / ckpt_name);

  // Group rows per video, preserving dump order of videos.
  std::vector<std::string> order;
  std::map<std::string, std::vector<proposal::Proposal>> grouped;
  for (const auto& row : rows) {
    if (!grouped.contains(row.video_id)) order.push_back(row.video_id);
    grouped[row.video_id].push_back(row.p);
  }

  std::vector<proposal::DumpRow> out_rows;
  for (const auto& id : order) {
    auto it = summaries.find(id);
    if (it == summaries.end())
      throw Error("proposal dump references video id '" + id + "' absent from summaries");
    auto& props = grouped[id];
    for (auto& p : props) {
      const auto features =
          ranking::build_features(p, it->second.summary, it->second.meta, ckpt.variant,
                                  ckpt.max_video_length);
      p.phi = ranking::ranker_forward(ckpt.params, features).phi;
      p.final_score = ranking::final_score(p, p.phi);
    }
    const auto kept = ranking::nms(props, ctx.cfg.nms.iou_threshold);
    for (const auto& p : kept) out_rows.push_back({id, p});
  }
  const std::string ranked_name = "ranked_test_" + ctx.tag + ".tsv";
  proposal::write_proposal_dump(out_rows, workspace_ / ranked_name);
  record_artifact(ranked_name, ctx.hashes.ranked);
}

void Pipeline::run_eval(Context& ctx) {
  const std::string ranked_name = "ranked_test_" + ctx.tag + ".tsv";
  require_artifact(ranked_name, ctx.hashes.ranked, "rank");
  require_artifact("dataset_test.jsonl", ctx.hashes.dataset, "synth");

  const auto rows = proposal::read_proposal_dump(workspace_ / ranked_name);
  const auto videos = dataset::parse_dataset(workspace_ / "dataset_test.jsonl");

  std::map<std::string, int> index_of;
  for (int i = 0; i < static_cast<int>(videos.size()); ++i) index_of[videos[i].video_id] = i;
  for (const auto& row : rows) {
    if (!index_of.contains(row.video_id))
      throw Error("evaluation: dump video id '" + row.video_id +
                  "' is not present in the dataset");
  }

  std::map<std::string, int> label_override;
  if (!ctx.cfg.metrics.labels_file.empty()) {
    std::ifstream in(ctx.cfg.metrics.labels_file);
    if (!in)
      throw ConfigError("cannot open labels file " + ctx.cfg.metrics.labels_file);
    json j;
    try {
      in >> j;
      for (auto it = j.begin(); it != j.end(); ++it)
        label_override[it.key()] = it.value().get<int>();
    } catch (const json::exception& e) {
      throw ConfigError("labels file: " + std::string(e.what()));
    }
  }

  std::vector<metrics::EvalVideo> eval_videos(videos.size());
  for (int i = 0; i < static_cast<int>(videos.size()); ++i) {
    auto& ev = eval_videos[i];
    ev.video_id = videos[i].video_id;
    for (const auto& a : videos[i].annotations)
      ev.ground_truth.push_back({{a.t_start, a.t_end}, a.label});
  }
  for (const auto& row : rows) {
    auto& ev = eval_videos[index_of.at(row.video_id)];
    ev.proposals.push_back({row.p.t_start, row.p.t_end});
    ev.scores.push_back(row.p.final_score);
  }
  for (int i = 0; i < static_cast<int>(videos.size()); ++i) {
    auto& ev = eval_videos[i];
    // proposals arrive sorted per video; keep a defensive stable re-sort
    std::vector<int> idx(ev.proposals.size());
    for (size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
    std::ranges::stable_sort(idx, [&](int a, int b) { return ev.scores[a] > ev.scores[b]; });
    metrics::EvalVideo sorted = ev;
    for (size_t k = 0; k < idx.size(); ++k) {
      sorted.proposals[k] = ev.proposals[idx[k]];
      sorted.scores[k] = ev.scores[idx[k]];
    }
    int label = -1;
    if (auto it = label_override.find(ev.video_id); it != label_override.end())
      label = it->second;
    else
      label = dominant_label(videos[i].annotations);
    sorted.labels.assign(sorted.proposals.size(), label);
    eval_videos[i] = std::move(sorted);
  }

  const auto report = metrics::evaluate(eval_videos, ctx.cfg.metrics_config());
  const std::string base = "eval_" + ctx.tag;
  write_eval_tsv(report, workspace_ / (base + ".tsv"));
  write_eval_txt(report, ctx.tag, workspace_ / (base + ".txt"));
  write_ar_curve_svg(report, workspace_ / ("ar_curve_" + ctx.tag + ".svg"));
  record_artifact(base + ".tsv", ctx.hashes.eval);
  record_artifact(base + ".txt", ctx.hashes.eval);
  record_artifact("ar_curve_" + ctx.tag + ".svg", ctx.hashes.eval);
}

void write_eval_tsv(const metrics::EvalReport& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write eval report " + path.string());
  out << "#table\tar_at_an\n";
  out << "an";
  for (const auto& [an, v] : report.ar_at_an) out << '\t' << an;
  out << "\nrecall";
  for (const auto& [an, v] : report.ar_at_an) out << '\t' << format_fixed(v, 6);
  out << "\n";
  out << "#table\trecall_at_an100\n";
  out << "tiou";
  for (const auto& [t, v] : report.recall_at_100) out << '\t' << format_fixed(t, 2);
  out << "\nrecall";
  for (const auto& [t, v] : report.recall_at_100) out << '\t' << format_fixed(v, 6);
  out << "\n";
  if (!report.map_at_iou.empty()) {
    out << "#table\tmap\n";
    out << "iou";
    for (const auto& [t, v] : report.map_at_iou) out << '\t' << format_fixed(t, 2);
    out << "\nmap";
    for (const auto& [t, v] : report.map_at_iou) out << '\t' << format_fixed(v, 6);
    out << "\n";
    out << "#table\tper_class_ap\n";
    out << "iou\tclass\tap\n";
    for (const auto& [iou, table] : report.per_class_ap)
      for (const auto& [cls, ap] : table)
        out << format_fixed(iou, 2) << '\t' << cls << '\t' << format_fixed(ap, 6) << "\n";
  }
}

void write_eval_txt(const metrics::EvalReport& report, const std::string& tag,
                    const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write eval report " + path.string());
  out << "evaluation report (" << tag << ")\n\n";
  out << "AR@AN\n";
  char buf[64];
  for (const auto& [an, v] : report.ar_at_an) {
    std::snprintf(buf, sizeof(buf), "  @%-4d %8.4f\n", an, v);
    out << buf;
  }
  out << "\nR@AN=100-tIoU\n";
  for (const auto& [t, v] : report.recall_at_100) {
    std::snprintf(buf, sizeof(buf), "  %.2f  %8.4f\n", t, v);
    out << buf;
  }
  if (!report.map_at_iou.empty()) {
    out << "\nmAP@IoU\n";
    for (const auto& [t, v] : report.map_at_iou) {
      std::snprintf(buf, sizeof(buf), "  %.2f  %8.4f\n", t, v);
      out << buf;
    }
  }
}

void write_ar_curve_svg(const metrics::EvalReport& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write svg " + path.string());
  const int w = 480, h = 320, margin = 40;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n";
  out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  out << "<line x1=\"40\" y1=\"280\" x2=\"440\" y2=\"280\" stroke=\"black\"/>\n";
  out << "<line x1=\"40\" y1=\"280\" x2=\"40\" y2=\"40\" stroke=\"black\"/>\n";
  if (!report.ar_at_an.empty()) {
    const double max_an = static_cast<double>(report.ar_at_an.rbegin()->first);
    out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (const auto& [an, v] : report.ar_at_an) {
      const double x = margin + (w - 2.0 * margin) * an / max_an;
      const double y = (h - margin) - (h - 2.0 * margin) * v;
      out << format_fixed(x, 1) << ',' << format_fixed(y, 1) << ' ';
    }
    out << "\"/>\n";
    for (const auto& [an, v] : report.ar_at_an) {
      const double x = margin + (w - 2.0 * margin) * an / max_an;
      out << "<text x=\"" << format_fixed(x, 1)
          << "\" y=\"300\" font-size=\"10\" text-anchor=\"middle\">" << an << "</text>\n";
    }
  }
  out << "<text x=\"240\" y=\"20\" font-size=\"12\" text-anchor=\"middle\">average recall vs "
         "proposal budget</text>\n";
  out << "</svg>\n";
}

EvalTables read_eval_tsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("eval report not found: " + path.string());
  EvalTables tables;
  std::string line;
  std::string current;
  std::vector<double> header;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.starts_with("#table\t")) {
      current = line.substr(7);
      header.clear();
      continue;
    }
    const auto fields = split(line, '\t');
    auto parse = [&](std::string_view sv) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
      if (ec != std::errc{}) throw ParseError(path.string() + ": bad number in eval table");
      (void)p;
      return v;
    };
    if (fields[0] == "an" || fields[0] == "tiou" || fields[0] == "iou") {
      if (current == "per_class_ap") continue;  // row-oriented table, skipped here
      header.clear();
      for (size_t i = 1; i < fields.size(); ++i) header.push_back(parse(fields[i]));
      continue;
    }
    if (fields[0] == "recall" || fields[0] == "map") {
      for (size_t i = 1; i < fields.size(); ++i) {
        const double v = parse(fields[i]);
        if (current == "ar_at_an")
          tables.ar_at_an.emplace_back(static_cast<int>(header[i - 1]), v);
        else if (current == "recall_at_an100")
          tables.recall_at_100.emplace_back(header[i - 1], v);
        else if (current == "map")
          tables.map_at_iou.emplace_back(header[i - 1], v);
      }
    }
  }
  return tables;
}

std::string Pipeline::report() const {
  std::vector<std::pair<std::string, EvalTables>> runs;
  if (fs::exists(workspace_)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(workspace_)) {
      const auto name = entry.path().filename().string();
      if (name.starts_with("eval_") && name.ends_with(".tsv")) files.push_back(entry.path());
    }
    std::ranges::sort(files);
    for (const auto& f : files) {
      auto tag = f.filename().string();
      tag = tag.substr(5, tag.size() - 9);  // strip eval_ and .tsv
      runs.emplace_back(tag, read_eval_tsv(f));
    }
  }
  if (runs.empty())
    throw MissingArtifactError("no eval reports in workspace; run 'eval' first");

  std::ostringstream out;
  char buf[64];
  const int name_w = 28;
  auto table = [&](const std::string& title, auto extract, auto label) {
    out << title << "\n";
    bool header_done = false;
    for (const auto& [tag, tables] : runs) {
      const auto& rows = extract(tables);
      if (!header_done) {
        out << std::string(name_w, ' ');
        for (const auto& r : rows) {
          std::snprintf(buf, sizeof(buf), "%10s", label(r).c_str());
          out << buf;
        }
        out << "\n";
        header_done = true;
      }
      std::snprintf(buf, sizeof(buf), "%-*s", name_w, tag.c_str());
      out << buf;
      for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%10.4f", r.second);
        out << buf;
      }
      out << "\n";
    }
    out << "\n";
  };
  table(
      "AR@AN", [](const EvalTables& t) -> const auto& { return t.ar_at_an; },
      [](const auto& r) { return "@" + std::to_string(r.first); });
  table(
      "R@AN=100-tIoU", [](const EvalTables& t) -> const auto& { return t.recall_at_100; },
      [](const auto& r) { return format_fixed(r.first, 2); });
  table(
      "mAP@IoU", [](const EvalTables& t) -> const auto& { return t.map_at_iou; },
      [](const auto& r) { return format_fixed(r.first, 2); });
  return out.str();
}

}  // namespace tal::pipeline
