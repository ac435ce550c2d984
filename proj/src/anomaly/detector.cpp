#include "freqadmm/anomaly/detector.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "freqadmm/anomaly/trace_io.hpp"
#include "freqadmm/core/errors.hpp"

namespace freqadmm::anomaly {

std::vector<Notice> notices_from_trace(const IterationTrace& trace) {
  std::vector<Notice> out;
  const auto& rows = trace.rows;
  for (std::size_t t = 1; t < rows.size(); ++t) {
    if (rows[t - 1].phase == Phase::Anomalous && rows[t].phase == Phase::Normal) {
      out.push_back({t, NoticeKind::Remedied});
    } else if (rows[t].phase == Phase::Anomalous && rows[t].label == 0 &&
               (rows[t - 1].phase == Phase::Normal || rows[t - 1].label != 0)) {
      out.push_back({t, NoticeKind::Systemic});
    }
  }
  return out;
}

void DetectorConfig::validate() const {
  if (!(threshold > 0.0) || baseline_rows == 0 || !(stationary_tol > 0.0)) {
    throw ContractViolation("detector: threshold, baseline rows and tolerance must be positive");
  }
}

RuleDetector::RuleDetector(std::vector<double> gamma, DetectorConfig cfg)
    : gamma_(std::move(gamma)), cfg_(cfg) {
  cfg_.validate();
}

void RuleDetector::rebaseline() {
  normal_.reset();
  run_.clear();
}

void RuleDetector::set_baseline(std::vector<double> z_normal) {
  if (z_normal.size() != gamma_.size()) throw ContractViolation("detector: baseline size");
  normal_ = std::move(z_normal);
  run_.clear();
}

DetectorVerdict RuleDetector::observe(const TraceRow& row) {
  const std::size_t n = gamma_.size();
  if (row.z.size() != n) throw ContractViolation("detector: row has the wrong device count");
  DetectorVerdict v;
  v.iteration = row.iteration;
  v.threshold = cfg_.threshold;
  v.alarms.assign(n, false);

  if (!normal_) {
    if (!run_.empty()) {
      double step = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        step += (row.z[i] - run_.back()[i]) * (row.z[i] - run_.back()[i]);
      }
      if (std::sqrt(step) > cfg_.stationary_tol) run_.clear();
    }
    run_.push_back(row.z);
    if (run_.size() < cfg_.baseline_rows) return v;
    std::vector<double> mean(n, 0.0);
    for (const auto& z : run_) {
      for (std::size_t i = 0; i < n; ++i) mean[i] += z[i];
    }
    for (auto& m : mean) m /= static_cast<double>(run_.size());
    normal_ = std::move(mean);
    run_.clear();
  }

  v.baselined = true;
  v.deviation.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ref = std::max((*normal_)[i], gamma_[i]);
    const double gap = std::abs(row.z[i] - (*normal_)[i]);
    v.deviation[i] = ref > 0.0 ? gap / ref : gap;
    v.alarms[i] = gap > cfg_.threshold * ref;
    if (v.alarms[i]) v.predicted = 1;
  }
  return v;
}

std::vector<DetectorVerdict> rule_detect(const IterationTrace& trace, const DetectorConfig& cfg,
                                         std::span<const Notice> notices) {
  RuleDetector det(trace.budget.gamma, cfg);
  std::vector<DetectorVerdict> out;
  out.reserve(trace.rows.size());
  std::size_t k = 0;
  for (std::size_t t = 0; t < trace.rows.size(); ++t) {
    bool reset = false;
    while (k < notices.size() && notices[k].row <= t) {
      reset |= notices[k].row == t;
      ++k;
    }
    if (reset) det.rebaseline();
    out.push_back(det.observe(trace.rows[t]));
  }
  return out;
}

std::vector<DetectorVerdict> rule_detect(const IterationTrace& trace, const DetectorConfig& cfg) {
  const auto notices = notices_from_trace(trace);
  return rule_detect(trace, cfg, notices);
}

std::vector<DetectorVerdict> rule_detect(std::span<const TraceRow> rows,
                                         const std::vector<double>& z_normal,
                                         const std::vector<double>& gamma, double threshold) {
  DetectorConfig cfg;
  cfg.threshold = threshold;
  RuleDetector det(gamma, cfg);
  det.set_baseline(z_normal);
  std::vector<DetectorVerdict> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(det.observe(r));
  return out;
}

std::vector<int> predictions(std::span<const DetectorVerdict> verdicts) {
  std::vector<int> out;
  out.reserve(verdicts.size());
  for (const auto& v : verdicts) out.push_back(v.predicted);
  return out;
}

std::vector<int> truth_labels(const IterationTrace& trace) {
  std::vector<int> out;
  out.reserve(trace.rows.size());
  for (const auto& r : trace.rows) out.push_back(r.label);
  return out;
}

Metrics score(std::span<const DetectorVerdict> verdicts, const IterationTrace& trace) {
  const auto p = predictions(verdicts);
  const auto t = truth_labels(trace);
  return score(p, t, 2);
}

std::vector<AlarmRecord> alarm_log(std::span<const DetectorVerdict> verdicts) {
  std::vector<AlarmRecord> out;
  for (const auto& v : verdicts) {
    for (std::size_t i = 0; i < v.alarms.size(); ++i) {
      if (v.alarms[i]) out.push_back({v.iteration, i + 1, v.threshold, v.deviation[i]});
    }
  }
  return out;
}

void write_alarm_log(std::span<const AlarmRecord> alarms, std::ostream& os) {
  os << "iteration,device,threshold,deviation\n";
  for (const auto& a : alarms) {
    os << a.iteration << ',' << a.device << ',' << format_real(a.threshold) << ','
       << format_real(a.deviation) << '\n';
  }
}

}  // namespace freqadmm::anomaly
