#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "freqadmm/anomaly/manipulation.hpp"
#include "freqadmm/anomaly/plant.hpp"
#include "freqadmm/core/trace.hpp"

namespace freqadmm::anomaly {

struct PhaseRange {
  std::size_t min = 0;
  std::size_t max = 0;  // inclusive
  friend bool operator==(const PhaseRange&, const PhaseRange&) = default;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::size_t length = 3600;           // recorded rows
  std::vector<int> labels{1, 2, 3};    // drawn uniformly per perturbed phase
  std::size_t target = 0;              // manipulated device, zero-based
  PhaseRange normal{100, 120};
  PhaseRange anomalous{50, 70};
  FactorRanges ranges;
  // The plant first runs unrecorded until z has moved by at most
  // warmup_tol (2-norm) for warmup_rounds consecutive rounds.
  std::size_t warmup_rounds = 20;
  double warmup_tol = 1e-6;
  std::size_t max_warmup = 20000;

  // Throws ContractViolation on an empty or inverted range, an unknown
  // label, or a length shorter than one full normal/perturbed cycle.
  void validate(std::size_t n_devices) const;
};

struct PhaseRecord {
  std::size_t begin = 0;  // first row
  std::size_t end = 0;    // one past the last row
  Phase phase = Phase::Normal;
  int label = 0;
  std::optional<ManipulationSpec> spec;
};

struct ScenarioEvent {
  std::size_t row = 0;
  std::string kind;  // injected, remedied, redraw
  std::string detail;
};

struct Scenario {
  IterationTrace trace;
  std::vector<PhaseRecord> phases;
  std::vector<ScenarioEvent> events;
  std::size_t warmup = 0;  // rounds discarded before the first row
};

// Uniform draws built from raw 64-bit engine output, so a seed gives the
// same sequence with every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double unit();                              // [0, 1)
  double uniform(double lo, double hi);       // [lo, hi)
  std::size_t index(std::size_t n);           // [0, n)
  std::size_t between(std::size_t lo, std::size_t hi);  // [lo, hi]

 private:
  std::mt19937_64 engine_;
};

// Independent stream for a (seed, tag) pair.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

// Draws a spec for `label` within the ranges. Label 1 draws its
// replacement from the starred members of catalog::replacement_set().
ManipulationSpec draw_spec(Rng& rng, int label, std::size_t target, const FactorRanges& ranges);

/// Drives `plant` through alternating normal and perturbed phases and
/// records one row per round. Phase lengths are uniform in their ranges; the
/// last phase is cut at `length`. Each perturbed phase injects a drawn spec
/// on top of the baseline problem and the following normal phase restores
/// the baseline. A label-1 draw whose replacement cannot reach a feasible
/// value (DomainError) and a systemic draw that empties the feasible set are
/// redrawn and logged. Rows are numbered from 0.
Scenario generate_scenario(Plant& plant, const ScenarioConfig& cfg);

struct WarmupRule {
  std::size_t rounds = 20;
  double tol = 1e-6;
  std::size_t max_rounds = 20000;
};

/// Warm-up, then `before` normal rows, then `spec` injected for `after`
/// rows. Rows are numbered from 0, so the first manipulated row is `before`.
IterationTrace single_manipulation(Plant& plant, const ManipulationSpec& spec, std::size_t before,
                                   std::size_t after, const WarmupRule& warmup = {});

}  // namespace freqadmm::anomaly
