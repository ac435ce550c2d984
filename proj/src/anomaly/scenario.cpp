#include "freqadmm/anomaly/scenario.hpp"

#include <cmath>

#include "freqadmm/core/catalog.hpp"
#include "freqadmm/core/errors.hpp"

namespace freqadmm::anomaly {

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ContractViolation("Rng::index: empty range");
  return std::min(n - 1, static_cast<std::size_t>(unit() * static_cast<double>(n)));
}

std::size_t Rng::between(std::size_t lo, std::size_t hi) {
  if (hi < lo) throw ContractViolation("Rng::between: inverted range");
  return lo + index(hi - lo + 1);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void ScenarioConfig::validate(std::size_t n_devices) const {
  auto bad = [](const std::string& what) { throw ContractViolation("scenario: " + what); };
  if (normal.min == 0 || normal.max < normal.min) bad("normal phase range is empty");
  if (anomalous.min == 0 || anomalous.max < anomalous.min) bad("perturbed phase range is empty");
  for (int l : labels) {
    if (l < kSystemic || l > kInputOnly) bad("unknown label " + std::to_string(l));
  }
  if (target >= n_devices) bad("target device out of range");
  if (length < normal.max + anomalous.max) bad("length shorter than one full cycle");
  if (warmup_rounds == 0 || !(warmup_tol > 0.0)) bad("warm-up needs rounds and a tolerance");
}

ManipulationSpec draw_spec(Rng& rng, int label, std::size_t target, const FactorRanges& r) {
  ManipulationSpec s;
  s.label = label;
  switch (label) {
    case kSystemic:
      s.mwf_factor = rng.uniform(-r.mwf, r.mwf);
      s.storage_factor = rng.uniform(-r.storage, r.storage);
      break;
    case kFunctionAndInput: {
      static const auto set = catalog::replacement_set();
      s.target = target;
      // Member 0 is the unmanipulated form; replacements are the others.
      s.new_function = set[1 + rng.index(set.size() - 1)];
      s.input_factor = rng.uniform(-r.input, r.input);
      break;
    }
    case kDataSize:
      s.target = target;
      s.size_factor = rng.uniform(-r.size, r.size);
      break;
    case kInputOnly:
      s.target = target;
      s.input_factor = rng.uniform(-r.input, r.input);
      break;
    default:
      throw ContractViolation("draw_spec: unknown label " + std::to_string(label));
  }
  return s;
}

namespace {

constexpr int kMaxRedraws = 1000;

double step_norm(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Consumes rounds until z has been still for `rounds` consecutive rounds.
class Warmup {
 public:
  explicit Warmup(const WarmupRule& rule) : rule_(rule) {}

  // True once warm; the row that completes the warm-up is not recorded.
  bool done() const { return done_; }
  void feed(const TraceRow& row) {
    ++seen_;
    stable_ = !prev_.empty() && step_norm(row.z, prev_) <= rule_.tol ? stable_ + 1 : 0;
    prev_ = row.z;
    if (stable_ >= rule_.rounds) {
      done_ = true;
    } else if (seen_ >= rule_.max_rounds) {
      throw PlantFailure("no stationary consensus after " + std::to_string(seen_) + " rounds");
    }
  }
  std::size_t seen() const { return seen_; }

 private:
  WarmupRule rule_;
  std::vector<double> prev_;
  std::size_t stable_ = 0;
  std::size_t seen_ = 0;
  bool done_ = false;
};

}  // namespace

IterationTrace single_manipulation(Plant& plant, const ManipulationSpec& spec, std::size_t before,
                                   std::size_t after, const WarmupRule& rule) {
  if (before == 0 || after == 0) {
    throw ContractViolation("single_manipulation: need rows before and after the injection");
  }
  const Problem baseline = plant.problem();
  const Problem manipulated = inject(spec, baseline);
  IterationTrace trace;
  trace.devices = baseline.functions.size();
  trace.budget = baseline.budget;
  Warmup warm(rule);
  plant.run([&](const TraceRow& row) {
    if (!warm.done()) {
      warm.feed(row);
      return true;
    }
    TraceRow r = row;
    r.iteration = static_cast<std::int64_t>(trace.rows.size());
    if (trace.rows.size() >= before) {
      r.phase = Phase::Anomalous;
      r.label = spec.label;
    }
    trace.rows.push_back(std::move(r));
    if (trace.rows.size() == before) plant.apply(manipulated);
    return trace.rows.size() < before + after;
  });
  return trace;
}

Scenario generate_scenario(Plant& plant, const ScenarioConfig& cfg) {
  const Problem baseline = plant.problem();
  cfg.validate(baseline.functions.size());

  Scenario out;
  out.trace.devices = baseline.functions.size();
  out.trace.budget = baseline.budget;
  out.trace.rows.reserve(cfg.length);

  Rng rng(cfg.seed);
  PhaseRecord current{0, rng.between(cfg.normal.min, cfg.normal.max), Phase::Normal, 0, {}};
  if (cfg.labels.empty()) current.end = cfg.length;

  // Picks the phase that starts at row `begin` and moves the plant to it.
  auto next_phase = [&](std::size_t begin) {
    PhaseRecord p;
    p.begin = begin;
    if (current.phase == Phase::Anomalous) {
      p.end = begin + rng.between(cfg.normal.min, cfg.normal.max);
      plant.apply(baseline);
      out.events.push_back({begin, "remedied", label_name(current.label)});
    } else {
      p.phase = Phase::Anomalous;
      p.label = cfg.labels[rng.index(cfg.labels.size())];
      for (int attempt = 0;; ++attempt) {
        ManipulationSpec spec = draw_spec(rng, p.label, cfg.target, cfg.ranges);
        try {
          plant.apply(inject(spec, baseline, cfg.ranges));
          p.spec = std::move(spec);
          break;
        } catch (const DomainError& e) {
          out.events.push_back({begin, "redraw", e.what()});
        } catch (const BudgetError& e) {
          out.events.push_back({begin, "redraw", e.what()});
        }
        if (attempt + 1 >= kMaxRedraws) {
          throw ContractViolation("scenario: no admissible draw for label " +
                                  std::to_string(p.label));
        }
      }
      p.end = begin + rng.between(cfg.anomalous.min, cfg.anomalous.max);
      out.events.push_back({begin, "injected", describe(*p.spec)});
    }
    p.end = std::min(p.end, cfg.length);
    out.phases.push_back(current);
    current = std::move(p);
  };

  Warmup warm({cfg.warmup_rounds, cfg.warmup_tol, cfg.max_warmup});
  plant.run([&](const TraceRow& row) {
    if (!warm.done()) {
      warm.feed(row);
      out.warmup = warm.seen();
      return true;
    }
    TraceRow r = row;
    r.iteration = static_cast<std::int64_t>(out.trace.rows.size());
    r.phase = current.phase;
    r.label = current.label;
    out.trace.rows.push_back(std::move(r));
    const std::size_t next = out.trace.rows.size();
    if (next >= cfg.length) return false;
    if (next == current.end) next_phase(next);
    return true;
  });
  out.phases.push_back(current);
  return out;
}

}  // namespace freqadmm::anomaly
