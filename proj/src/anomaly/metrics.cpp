#include "freqadmm/anomaly/metrics.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "json.hpp"

#include "freqadmm/core/errors.hpp"

namespace freqadmm::anomaly {

std::size_t Confusion::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? std::numeric_limits<double>::quiet_NaN()
                  : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics metrics_from(const Confusion& c) {
  Metrics m{c};
  std::size_t hit = 0, tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t t = 0; t < c.classes; ++t) {
    for (std::size_t p = 0; p < c.classes; ++p) {
      const std::size_t k = c.at(t, p);
      if (t == p) hit += k;
      if (t != 0 && p != 0) tp += k;
      if (t == 0 && p != 0) fp += k;
      if (t == 0 && p == 0) tn += k;
      if (t != 0 && p == 0) fn += k;
    }
  }
  m.accuracy = ratio(hit, c.total());
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.specificity = ratio(tn, tn + fp);
  return m;
}

Metrics score(std::span<const int> predicted, std::span<const int> truth, std::size_t classes) {
  if (predicted.size() != truth.size()) {
    throw ContractViolation("score: " + std::to_string(predicted.size()) + " predictions for " +
                            std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw ContractViolation("score: empty stream");
  if (classes < 2) throw ContractViolation("score: need at least two classes");
  Confusion c(classes);
  auto cls = [&](int label) {
    if (label < 0) throw ContractViolation("score: negative label");
    if (classes == 2) return label != 0 ? std::size_t{1} : std::size_t{0};
    if (static_cast<std::size_t>(label) >= classes) {
      throw ContractViolation("score: label " + std::to_string(label) + " outside the classes");
    }
    return static_cast<std::size_t>(label);
  };
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++c.counts[cls(truth[i]) * classes + cls(predicted[i])];
  }
  return metrics_from(c);
}

std::vector<int> window_majority(std::span<const int> labels, std::size_t window,
                                 std::size_t stride) {
  if (window == 0 || stride == 0) throw ContractViolation("window_majority: zero window or stride");
  std::vector<int> out;
  for (std::size_t start = 0; start + window <= labels.size(); start += stride) {
    std::map<int, std::size_t> tally;
    for (std::size_t i = start; i < start + window; ++i) ++tally[labels[i]];
    int best = tally.begin()->first;
    for (const auto& [label, n] : tally) {
      if (n > tally[best]) best = label;
    }
    out.push_back(best);
  }
  return out;
}

Metrics score_windowed(std::span<const int> predicted, std::span<const int> truth,
                       std::size_t classes, std::size_t window, std::size_t stride) {
  if (predicted.size() != truth.size()) {
    throw ContractViolation("score_windowed: length mismatch");
  }
  if (classes == 2) {
    // Two-class windows vote on the collapsed labels.
    auto collapse = [](std::span<const int> in) {
      std::vector<int> out(in.size());
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] != 0;
      return out;
    };
    const auto p = collapse(predicted);
    const auto t = collapse(truth);
    return score(window_majority(p, window, stride), window_majority(t, window, stride), 2);
  }
  const auto p = window_majority(predicted, window, stride);
  const auto t = window_majority(truth, window, stride);
  return score(p, t, classes);
}

std::string to_json(const Metrics& m) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json j;
  j["classes"] = m.confusion.classes;
  j["support"] = m.confusion.total();
  j["accuracy"] = num(m.accuracy);
  j["precision"] = num(m.precision);
  j["recall"] = num(m.recall);
  j["specificity"] = num(m.specificity);
  auto rows = nlohmann::json::array();
  for (std::size_t t = 0; t < m.confusion.classes; ++t) {
    auto row = nlohmann::json::array();
    for (std::size_t p = 0; p < m.confusion.classes; ++p) row.push_back(m.confusion.at(t, p));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  return j.dump();
}

}  // namespace freqadmm::anomaly
