#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "core/matrix.hpp"
#include "network/model.hpp"

namespace tal::proposal {

// Per-unit averages over the K grid estimates that refer to each unit.
struct UnitProbSummary {
  Vec avg_start, avg_end, avg_action;

  int num_units() const { return static_cast<int>(avg_start.size()); }
};

struct Proposal {
  int start_unit = 0;
  int end_unit = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  double p_start_avg = 0.0;
  double p_end_avg = 0.0;
  double phi = 1.0;          // ranker score, 1 until a ranker runs
  double final_score = 0.0;  // p_start_avg * p_end_avg * phi
  int label = -1;            // optional class id, -1 = unset
};

enum class BoundaryMode { kMiddle, kInterpolated };

struct ProposalConfig {
  int vote_count = 1;          // V
  double vote_threshold = 0.3;
  int max_duration_units = 0;  // 0 = unlimited
  BoundaryMode mode = BoundaryMode::kInterpolated;
};

struct VideoMeta {
  int unit_length = 16;
  double fps = 16.0;
};

UnitProbSummary summarize_grid(const network::ProbabilityGrid& grid);

struct CandidateUnits {
  std::vector<int> start_units;  // ascending
  std::vector<int> end_units;
};

CandidateUnits detect_candidates(const network::ProbabilityGrid& grid,
                                 const UnitProbSummary& summary, int vote_count,
                                 double vote_threshold);

std::vector<std::pair<int, int>> pair_candidates(const std::vector<int>& start_units,
                                                 const std::vector<int>& end_units,
                                                 int max_duration_units);

double unit_to_time_middle(int unit, int unit_length, double fps);

// Piecewise-linear value of a per-unit signal at a global frame position;
// anchors sit at unit middles (u*unit_length + unit_length/2), ends clamped.
double interp_at(const Vec& signal, double frame_pos, int unit_length);

// Refined keyframe position within unit u, in [0, unit_length). Returns the
// frame maximising the interpolated signal (ties: towards the middle frame,
// then the lower index); when the two anchor-to-anchor lines around a local
// peak cross inside the unit, the crossing recovers the sub-anchor apex and
// is returned instead (exact for sampled triangular peaks).
double interpolate_keyframe(const Vec& signal, int unit, int unit_length);

std::pair<double, double> refine_boundaries(std::pair<int, int> pair,
                                            const UnitProbSummary& summary,
                                            const VideoMeta& meta, BoundaryMode mode);

std::vector<Proposal> generate_proposals(const network::ProbabilityGrid& grid,
                                         const VideoMeta& meta, const ProposalConfig& cfg);

// CLI dump: one row per proposal, tab separated, 6-decimal fixed reals.
struct DumpRow {
  std::string video_id;
  Proposal p;
};

void write_proposal_dump(const std::vector<DumpRow>& rows, const std::filesystem::path& path);
std::vector<DumpRow> read_proposal_dump(const std::filesystem::path& path);

}  // namespace tal::proposal
