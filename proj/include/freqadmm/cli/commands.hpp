#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "freqadmm/anomaly/metrics.hpp"
#include "freqadmm/cli/config.hpp"
#include "freqadmm/core/admm.hpp"
#include "freqadmm/net/session.hpp"

namespace freqadmm::cli {

// Every command writes into cfg.output (created if needed) and prints a
// human-readable summary to `out`. Artifacts carry no timestamps, so a
// re-run over the simulated transport reproduces them byte for byte.

struct AllocationRow {
  std::string method;  // admm, average, proportional
  std::vector<double> x;
  double utility = 0.0;
  std::optional<double> reference;  // from cfg.reference_utilities
};

struct AllocationReport {
  AdmmResult admm;
  std::vector<AllocationRow> rows;
};

// Files: manifest.json, allocation.csv.
AllocationReport cmd_allocate(const RunConfig& cfg, std::ostream& out);

// Files: manifest.json, stages.csv, estimates.csv, trace_zv.csv,
// series_usage.csv. Throws std::runtime_error if the session stalls.
net::SessionReport cmd_simulate(const RunConfig& cfg, std::ostream& out);

struct CampaignCell {
  std::string run;
  std::string split;  // train, validation, test, or "all" when pooled
  double threshold = 0.0;
  anomaly::Metrics metrics;
  // Every alarm set at this threshold contains the one at the next higher
  // threshold, row by row.
  bool monotone = true;
};

struct CampaignReport {
  std::vector<CampaignCell> cells;   // run x split x threshold
  std::vector<CampaignCell> pooled;  // run x threshold, splits summed
  [[nodiscard]] const CampaignCell* find_pooled(const std::string& run, double threshold) const;
};

inline constexpr const char* kSplits[] = {"train", "validation", "test"};

// Scenario seed of one (run, split) pair; the transport jitter seed is
// derived from it as well.
std::uint64_t campaign_seed(std::uint64_t seed, std::size_t run, std::size_t split);

// Files: manifest.json, traces/<run>_<split>.csv, alarms/<run>_<split>.csv,
// events.csv, accuracy.csv. Runs (run, split) jobs concurrently over the
// simulated transport; output order never depends on scheduling.
CampaignReport cmd_campaign(const RunConfig& cfg, std::ostream& out);

struct ScoreRequest {
  std::filesystem::path trace;
  std::optional<std::filesystem::path> predictions;
  std::vector<double> thresholds{0.01, 0.05, 0.10, 0.15, 0.30, 0.50};
  std::filesystem::path output = "out";
};

struct ScoreEntry {
  std::string source;  // "rule" or "predictions"
  std::optional<double> threshold;
  std::optional<anomaly::Metrics> row;  // per-row granularity
  anomaly::Metrics window;              // 10-row windows, stride 5
};

/// Predictions file:
///
///   #predictions granularity=window classes=2
///   0,0
///   1,1
///
/// granularity is row or window; window=10 and stride=5 may be given and
/// must match. Indices must run 0, 1, ... without gaps.
struct Predictions {
  bool windowed = true;
  std::size_t classes = 2;
  std::vector<int> labels;
};
Predictions read_predictions(std::istream& is);

// Without a predictions file the rule detector runs at each threshold.
// Files: score.json.
std::vector<ScoreEntry> cmd_score(const ScoreRequest& req, std::ostream& out);

}  // namespace freqadmm::cli
