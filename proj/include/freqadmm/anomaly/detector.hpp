#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "freqadmm/anomaly/metrics.hpp"
#include "freqadmm/core/trace.hpp"

namespace freqadmm::anomaly {

inline constexpr double kDefaultThresholds[] = {0.01, 0.05, 0.10, 0.15, 0.30, 0.50};

// Operator knowledge handed to the detector: an anomaly was remedied, or the
// gateway itself changed the capacities. Either way the normal z moves.
enum class NoticeKind { Remedied, Systemic };

struct Notice {
  std::size_t row = 0;  // takes effect before this row is observed
  NoticeKind kind = NoticeKind::Remedied;
  friend bool operator==(const Notice&, const Notice&) = default;
};

// Remedied at every perturbed-to-normal boundary; Systemic where a label-0
// phase starts.
std::vector<Notice> notices_from_trace(const IterationTrace& trace);

struct DetectorConfig {
  double threshold = 0.01;          // fraction of the normal z
  std::size_t baseline_rows = 20;   // rows averaged into the normal z
  double stationary_tol = 1e-4;     // max 2-norm z step inside that window

  // Throws ContractViolation unless threshold > 0, baseline_rows > 0 and
  // stationary_tol > 0.
  void validate() const;
};

struct DetectorVerdict {
  std::int64_t iteration = 0;
  std::vector<bool> alarms;       // per device; all false without a baseline
  std::vector<double> deviation;  // |z - z_normal| / max(z_normal, gamma)
  int predicted = 0;              // 1 when any device alarms
  double threshold = 0.0;
  bool baselined = false;
};

/// Threshold rule on the consensus stream. Device i alarms when
///   |z_i - z_normal_i| > threshold * max(z_normal_i, gamma_i).
/// z_normal is the mean of the first run of baseline_rows consecutive rows
/// whose z steps stay within stationary_tol. rebaseline() drops it and the
/// detector stays silent until it has a new one.
class RuleDetector {
 public:
  RuleDetector(std::vector<double> gamma, DetectorConfig cfg);

  DetectorVerdict observe(const TraceRow& row);
  void rebaseline();
  // Fixes z_normal directly, bypassing acquisition.
  void set_baseline(std::vector<double> z_normal);
  [[nodiscard]] const std::optional<std::vector<double>>& baseline() const { return normal_; }
  [[nodiscard]] const DetectorConfig& config() const { return cfg_; }

 private:
  std::vector<double> gamma_;
  DetectorConfig cfg_;
  std::optional<std::vector<double>> normal_;
  std::vector<std::vector<double>> run_;  // current stationary run
};

std::vector<DetectorVerdict> rule_detect(const IterationTrace& trace, const DetectorConfig& cfg,
                                         std::span<const Notice> notices);
// Notices derived from the trace's phases.
std::vector<DetectorVerdict> rule_detect(const IterationTrace& trace, const DetectorConfig& cfg);
// Fixed normal z for the whole stream, no re-baselining.
std::vector<DetectorVerdict> rule_detect(std::span<const TraceRow> rows,
                                         const std::vector<double>& z_normal,
                                         const std::vector<double>& gamma, double threshold);

std::vector<int> predictions(std::span<const DetectorVerdict> verdicts);
std::vector<int> truth_labels(const IterationTrace& trace);

// Two-class score of a verdict stream against the trace labels.
Metrics score(std::span<const DetectorVerdict> verdicts, const IterationTrace& trace);

struct AlarmRecord {
  std::int64_t iteration = 0;
  std::size_t device = 0;  // one-based
  double threshold = 0.0;
  double deviation = 0.0;
};

std::vector<AlarmRecord> alarm_log(std::span<const DetectorVerdict> verdicts);
// CSV with header iteration,device,threshold,deviation.
void write_alarm_log(std::span<const AlarmRecord> alarms, std::ostream& os);

}  // namespace freqadmm::anomaly
