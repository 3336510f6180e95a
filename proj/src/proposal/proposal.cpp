#include "proposal/proposal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "core/error.hpp"
#include "core/text.hpp"

namespace tal::proposal {

UnitProbSummary summarize_grid(const network::ProbabilityGrid& grid) {
  const int t_len = grid.steps();
  const int k = grid.k_steps();
  UnitProbSummary s;
  s.avg_start.assign(t_len, 0.0);
  s.avg_end.assign(t_len, 0.0);
  s.avg_action.assign(t_len, 0.0);
  for (int u = 0; u < t_len; ++u) {
    double sum_s = 0.0, sum_e = 0.0, sum_a = 0.0;
    int count = 0;
    for (int kk = 0; kk < k && u + kk < t_len; ++kk) {
      sum_s += grid.start(u + kk, kk);
      sum_e += grid.end(u + kk, kk);
      sum_a += grid.action(u + kk, kk);
      ++count;
    }
    s.avg_start[u] = sum_s / count;  // k = 0 always valid, count >= 1
    s.avg_end[u] = sum_e / count;
    s.avg_action[u] = sum_a / count;
  }
  return s;
}

namespace {

// Voting: at least V of the unit's valid estimates above the threshold.
// Peak picking: strictly greater than both neighbours (sequence ends
// compare against the single existing neighbour). Candidates are the union.
std::vector<int> candidates_for_channel(const Matrix& grid_channel, const Vec& avg,
                                        int vote_count, double vote_threshold) {
  const int t_len = grid_channel.rows();
  const int k = grid_channel.cols();
  std::vector<int> out;
  for (int u = 0; u < t_len; ++u) {
    int votes = 0;
    for (int kk = 0; kk < k && u + kk < t_len; ++kk) {
      if (grid_channel(u + kk, kk) > vote_threshold) ++votes;
    }
    const bool voted = votes >= vote_count;
    const bool left_ok = u == 0 || avg[u] > avg[u - 1];
    const bool right_ok = u == t_len - 1 || avg[u] > avg[u + 1];
    const bool peak = left_ok && right_ok && t_len > 1;
    if (voted || peak) out.push_back(u);
  }
  return out;
}

}  // namespace

CandidateUnits detect_candidates(const network::ProbabilityGrid& grid,
                                 const UnitProbSummary& summary, int vote_count,
                                 double vote_threshold) {
  if (vote_count < 1) throw ConfigError("vote count must be >= 1");
  if (vote_threshold <= 0.0 || vote_threshold >= 1.0)
    throw ConfigError("vote threshold must be in (0,1)");
  CandidateUnits c;
  c.start_units = candidates_for_channel(grid.start, summary.avg_start, vote_count,
                                         vote_threshold);
  c.end_units = candidates_for_channel(grid.end, summary.avg_end, vote_count,
                                       vote_threshold);
  return c;
}

std::vector<std::pair<int, int>> pair_candidates(const std::vector<int>& start_units,
                                                 const std::vector<int>& end_units,
                                                 int max_duration_units) {
  std::vector<std::pair<int, int>> pairs;
  for (int s : start_units) {
    for (int e : end_units) {
      if (e < s) continue;
      if (max_duration_units > 0 && e - s + 1 > max_duration_units) continue;
      pairs.emplace_back(s, e);
    }
  }
  std::ranges::sort(pairs);
  return pairs;
}

double unit_to_time_middle(int unit, int unit_length, double fps) {
  if (fps <= 0.0) throw ConfigError("fps must be positive");
  return (unit * unit_length + unit_length / 2.0) / fps;
}

double interp_at(const Vec& signal, double frame_pos, int unit_length) {
  const int t_len = static_cast<int>(signal.size());
  auto anchor_value = [&](int v) { return signal[std::clamp(v, 0, t_len - 1)]; };
  const double half = unit_length / 2.0;
  // anchor j sits at j*unit_length + half
  const int j = static_cast<int>(std::floor((frame_pos - half) / unit_length));
  const double left_pos = j * unit_length + half;
  const double w = (frame_pos - left_pos) / unit_length;
  return (1.0 - w) * anchor_value(j) + w * anchor_value(j + 1);
}

double interpolate_keyframe(const Vec& signal, int unit, int unit_length) {
  const int t_len = static_cast<int>(signal.size());
  if (unit < 0 || unit >= t_len) throw ConfigError("keyframe unit out of range");
  const double half = unit_length / 2.0;
  auto anchor_value = [&](int v) { return signal[std::clamp(v, 0, t_len - 1)]; };
  auto anchor_pos = [&](int v) { return v * unit_length + half; };
  const double unit_lo = static_cast<double>(unit) * unit_length;
  const double unit_hi = unit_lo + unit_length;

  // Sub-anchor apex: for each anchor bracket overlapping this unit, extend
  // the line through the two anchors left of the bracket and the line
  // through the two anchors right of it; a crossing above both bracket
  // anchors and inside the unit is the reconstructed peak.
  double best_pos = -1.0;
  double best_height = -1.0;
  for (int lo : {unit - 1, unit}) {
    const int hi = lo + 1;
    const double m1 = (anchor_value(lo) - anchor_value(lo - 1)) / unit_length;
    const double m2 = (anchor_value(hi + 1) - anchor_value(hi)) / unit_length;
    if (!(m1 > m2)) continue;
    // y = anchor_value(lo) + m1 (x - pos(lo)) and symmetric for the right line
    const double c1 = anchor_value(lo) - m1 * anchor_pos(lo);
    const double c2 = anchor_value(hi) - m2 * anchor_pos(hi);
    const double x = (c2 - c1) / (m1 - m2);
    const double y = m1 * x + c1;
    if (x < anchor_pos(lo) - 1e-9 || x > anchor_pos(hi) + 1e-9) continue;
    if (x < unit_lo || x >= unit_hi) continue;
    if (y < std::max(anchor_value(lo), anchor_value(hi)) - 1e-12) continue;
    if (y > best_height) {
      best_height = y;
      best_pos = x;
    }
  }
  if (best_pos >= 0.0) return best_pos - unit_lo;

  // Fall back to the per-frame argmax of the interpolant, ties resolved
  // towards the middle frame, then the lower index.
  int best_frame = 0;
  double best_value = -1.0;
  for (int f = 0; f < unit_length; ++f) {
    const double v = interp_at(signal, unit_lo + f, unit_length);
    bool better = v > best_value + 1e-12;
    if (!better && std::abs(v - best_value) <= 1e-12) {
      const double d_new = std::abs(f - half);
      const double d_best = std::abs(best_frame - half);
      better = d_new < d_best - 1e-12;
    }
    if (better) {
      best_value = v;
      best_frame = f;
    }
  }
  return static_cast<double>(best_frame);
}

std::pair<double, double> refine_boundaries(std::pair<int, int> pair,
                                            const UnitProbSummary& summary,
                                            const VideoMeta& meta, BoundaryMode mode) {
  const auto [ui, uj] = pair;
  if (ui > uj) throw ConfigError("refine_boundaries: start unit after end unit");
  if (mode == BoundaryMode::kMiddle) {
    return {unit_to_time_middle(ui, meta.unit_length, meta.fps),
            unit_to_time_middle(uj, meta.unit_length, meta.fps)};
  }
  const double start_key = interpolate_keyframe(summary.avg_start, ui, meta.unit_length);
  const double end_key = interpolate_keyframe(summary.avg_end, uj, meta.unit_length);
  return {(ui * meta.unit_length + start_key) / meta.fps,
          (uj * meta.unit_length + end_key) / meta.fps};
}

std::vector<Proposal> generate_proposals(const network::ProbabilityGrid& grid,
                                         const VideoMeta& meta, const ProposalConfig& cfg) {
  const auto summary = summarize_grid(grid);
  const auto cands = detect_candidates(grid, summary, cfg.vote_count, cfg.vote_threshold);
  const auto pairs = pair_candidates(cands.start_units, cands.end_units,
                                     cfg.max_duration_units);
  std::vector<Proposal> out;
  out.reserve(pairs.size());
  for (const auto& pr : pairs) {
    auto [ts, te] = refine_boundaries(pr, summary, meta, cfg.mode);
    if (!(ts < te)) continue;  // collapsed, only possible when ui == uj
    Proposal p;
    p.start_unit = pr.first;
    p.end_unit = pr.second;
    p.t_start = ts;
    p.t_end = te;
    p.p_start_avg = summary.avg_start[pr.first];
    p.p_end_avg = summary.avg_end[pr.second];
    p.phi = 1.0;
    p.final_score = p.p_start_avg * p.p_end_avg * p.phi;
    out.push_back(p);
  }
  return out;
}

void write_proposal_dump(const std::vector<DumpRow>& rows,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write proposal dump " + path.string());
  out << "#video_id\tt_start\tt_end\tstart_unit\tend_unit\tp_start_avg\tp_end_avg\tphi\t"
         "final_score\n";
  for (const auto& row : rows) {
    const auto& p = row.p;
    out << row.video_id << '\t' << format_fixed(p.t_start, 6) << '\t'
        << format_fixed(p.t_end, 6) << '\t' << p.start_unit << '\t' << p.end_unit << '\t'
        << format_fixed(p.p_start_avg, 6) << '\t' << format_fixed(p.p_end_avg, 6) << '\t'
        << format_fixed(p.phi, 6) << '\t' << format_fixed(p.final_score, 6) << '\n';
  }
}

std::vector<DumpRow> read_proposal_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("proposal dump not found: " + path.string());
  std::vector<DumpRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 9)
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected 9 tab-separated fields");
    auto num = [&](int i) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), v);
      if (ec != std::errc{} || p != fields[i].data() + fields[i].size())
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number in field " +
                         std::to_string(i));
      return v;
    };
    DumpRow row;
    row.video_id = std::string(fields[0]);
    row.p.t_start = num(1);
    row.p.t_end = num(2);
    row.p.start_unit = static_cast<int>(num(3));
    row.p.end_unit = static_cast<int>(num(4));
    row.p.p_start_avg = num(5);
    row.p.p_end_avg = num(6);
    row.p.phi = num(7);
    row.p.final_score = num(8);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace tal::proposal
