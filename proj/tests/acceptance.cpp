// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "freqadmm/anomaly/detector.hpp"
#include "freqadmm/anomaly/manipulation.hpp"
#include "freqadmm/anomaly/plant.hpp"
#include "freqadmm/anomaly/scenario.hpp"
#include "freqadmm/cli/commands.hpp"
#include "freqadmm/core/admm.hpp"
#include "freqadmm/core/catalog.hpp"
#include "freqadmm/core/projection.hpp"
#include "freqadmm/kkt/oracle.hpp"
#include "freqadmm/net/session.hpp"
#include "support/oracles.hpp"

using namespace freqadmm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string vec(const std::vector<double>& v, int digits = 4) {
  std::string out = "(";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i], digits);
  return out + ")";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path config(const std::string& name) {
  return fs::path(FREQADMM_CONFIG_DIR) / (name + ".json");
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("freqadmm_acceptance_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Outcome sufficient_optimum() {
  auto f = catalog::allocation_utilities();
  f.resize(2);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = admm_solve(f, catalog::allocation_budget(2));
  const double secs = seconds_since(t0);
  const bool ok = r.converged && std::abs(r.z[0] - 1.0) <= 1e-3 && std::abs(r.z[1] - 4.0) <= 1e-3 &&
                  r.iterations < 2000 && secs < 1.0;
  return {ok, "z=" + vec(r.z) + " iterations=" + std::to_string(r.iterations) + " time=" +
                  num(secs, 4) + "s"};
}

Outcome insufficient_optimum() {
  const auto f = catalog::allocation_utilities();
  const auto b = catalog::allocation_budget(3);
  const auto r = admm_solve(f, b);
  const std::vector<double> want{1.0, 8.0 / 3.0, 1.0};
  bool ok = r.converged;
  for (std::size_t i = 0; i < 3; ++i) ok = ok && std::abs(r.z[i] - want[i]) <= 1e-3;
  const auto cert = kkt::check_kkt(r.z, f, b, 1e-3);
  const bool g2 = cert.situation == kkt::Situation::G2Active ||
                  cert.situation == kkt::Situation::BothActive;
  return {ok && g2, "z=" + vec(r.z) + " situation=" + kkt::situation_name(cert.situation) +
                        " sum a z=" + num(b.total_storage(r.z)) + " d=" + num(b.d, 0)};
}

Outcome utility_table() {
  cli::RunConfig cfg = cli::load_config(config("allocation_insufficient"));
  cfg.output = scratch("allocate");
  std::ostringstream out;
  const auto rep = cli::cmd_allocate(cfg, out);
  const double admm = rep.rows.at(0).utility;
  const double average = rep.rows.at(1).utility;
  const double prop = rep.rows.at(2).utility;
  const bool footnoted = out.str().find("[1] average: reference total 1190.35") != std::string::npos;
  const bool ok = std::abs(admm - 1381.22) <= 0.01 && std::abs(prop - 1086.00) <= 0.01 &&
                  std::abs(average - 1189.93) <= 0.01 && footnoted;
  return {ok, "admm=" + num(admm, 2) + " proportional=" + num(prop, 2) + " average=" + num(average, 2) +
                  (footnoted ? " (footnoted against 1190.35)" : " (footnote missing)")};
}

Outcome mid_session_join() {
  const cli::RunConfig cfg = cli::load_config(config("simulate_join"));
  net::SessionPlan plan;
  plan.c = cfg.c;
  plan.d = cfg.d;
  for (const auto& d : cfg.devices) plan.devices.push_back({d.id, d.utility, d.a, d.gamma});
  for (const auto& d : cfg.joiners) plan.joiners.push_back({d.id, d.utility, d.a, d.gamma});
  plan.window = cfg.dfwf_window;
  const auto rep = net::run_session(plan);
  if (!rep.completed || rep.stages.size() != 2) return {false, "session did not complete both stages"};
  const auto& before = rep.stages[0].z;
  const auto& after = rep.stages[1].z;
  double peak = 0.0, last = 0.0;
  for (const auto& u : rep.usage) {
    peak = std::max(peak, u.storage);
    if (u.stage == 1) last = u.storage;
  }
  const bool ok = std::abs(before[1] - 4.0) <= 1e-3 && std::abs(after[1] - 8.0 / 3.0) <= 1e-3 &&
                  std::abs(before[0] - 1.0) <= 1e-3 && std::abs(after[0] - 1.0) <= 1e-3 &&
                  std::abs(last - cfg.d) <= 0.005 * cfg.d && peak <= 1.005 * cfg.d;
  return {ok, "device 2 " + num(before[1]) + " -> " + num(after[1]) + ", device 1 " + num(before[0]) +
                  " -> " + num(after[0]) + ", steady storage " + num(last) + ", peak " + num(peak) +
                  " (d=" + num(cfg.d, 0) + ")"};
}

Outcome dfwf_estimation() {
  const cli::RunConfig cfg = cli::load_config(config("simulate_delay"));
  net::SessionPlan plan;
  plan.c = cfg.c;
  plan.d = cfg.d;
  for (const auto& d : cfg.devices) plan.devices.push_back({d.id, d.utility, d.a, d.gamma});
  plan.window = cfg.dfwf_window;

  const auto clean = net::run_session(plan);
  double worst = 0.0;
  for (std::size_t i = 0; i < clean.stages.at(0).estimates.size(); ++i) {
    const auto& e = clean.stages[0].estimates[i];
    worst = std::max(worst, std::abs(e.estimated_hz / clean.stages[0].z[i] - 1.0));
  }
  plan.transport = cfg.transport;
  const auto delayed = net::run_session(plan);
  const auto& e = delayed.stages.at(0).estimates;
  const bool ok = worst <= 1e-3 && e.size() == 2 && std::abs(e[0].estimated_hz - 0.9984) <= 0.002 &&
                  std::abs(e[1].estimated_hz - 3.9318) <= 0.002;
  return {ok, "zero-delay worst relative error " + num(worst, 6) + "; delayed estimates (" +
                  num(e.at(0).estimated_hz) + ", " + num(e.at(1).estimated_hz) + ")"};
}

Outcome projection_equivalence() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + trial % 6;
    const auto inst = testsupport::random_instance(rng, n);
    std::vector<double> v(n);
    for (auto& x : v) x = 15.0 * (2.0 * u(rng) - 0.5);
    const auto z = project_onto_feasible(v, inst.budget);
    const auto ref = kkt::dykstra_project(v, inst.budget, 1e-9);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(z[i] - ref[i]));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 10.0,
          "1000 instances, max deviation " + sci(worst) + ", " + num(secs, 2) + "s"};
}

Outcome marginal_laws() {
  std::mt19937_64 rng(123);
  int checked = 0, violations = 0;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto inst = testsupport::random_instance(rng, 2 + t % 3);
    const auto ref = kkt::reference_solve(inst.functions, inst.budget);
    if (ref.disagreement) continue;
    const auto cert = kkt::check_kkt(ref.x, inst.functions, inst.budget, 1e-8);
    // Both couplings active is degenerate; so is fewer than two coordinates
    // above their lower bound, where there is nothing to compare.
    if (cert.situation != kkt::Situation::G1Active && cert.situation != kkt::Situation::G2Active) {
      continue;
    }
    std::vector<double> marg;
    for (std::size_t i = 0; i < ref.x.size(); ++i) {
      if (std::find(cert.active_lower_bounds.begin(), cert.active_lower_bounds.end(), i) !=
          cert.active_lower_bounds.end()) {
        continue;
      }
      const double h = eval_derivative(inst.functions[i], ref.x[i]);
      marg.push_back(cert.situation == kkt::Situation::G2Active ? h / inst.budget.a[i] : h);
    }
    if (marg.size() < 2) continue;
    ++checked;
    for (double m : marg) {
      worst = std::max(worst, std::abs(m - marg.front()));
      if (std::abs(m - marg.front()) > 1e-4) ++violations;
    }
  }
  return {checked > 0 && violations == 0,
          std::to_string(checked) + " non-degenerate instances, max marginal spread " + sci(worst)};
}

Outcome manipulation_demo() {
  const anomaly::Problem base{catalog::anomaly_utilities(), catalog::anomaly_budget()};
  anomaly::ManipulationSpec spec;
  spec.label = anomaly::kInputOnly;
  spec.target = 0;
  spec.input_factor = -2.0;
  const auto after = anomaly::inject(spec, base);
  const auto r0 = kkt::reference_solve(base.functions, base.budget);
  const auto r1 = kkt::reference_solve(after.functions, after.budget);
  const double expected[] = {94.0, -35.0, -12.0};
  bool ok = r1.x[0] > r0.x[0] && r1.x[1] < r0.x[1] && r1.x[2] < r0.x[2];
  std::vector<double> pct(3);
  for (std::size_t i = 0; i < 3; ++i) {
    pct[i] = 100.0 * (r1.x[i] / r0.x[i] - 1.0);
    ok = ok && std::abs(pct[i] - expected[i]) <= 10.0;
  }

  auto plant = anomaly::make_engine_plant(base);
  const auto trace = anomaly::single_manipulation(*plant, spec, 100, 150);
  auto fired = [&](double threshold) {
    const auto v = anomaly::rule_detect(trace.rows, r0.x, trace.budget.gamma, threshold);
    std::vector<bool> any(3, false);
    for (std::size_t t = 0; t < v.size(); ++t) {
      if (t < 100 && v[t].predicted) ok = false;
      for (std::size_t i = 0; i < 3; ++i) any[i] = any[i] || v[t].alarms[i];
    }
    return any;
  };
  const bool at10 = fired(0.10) == std::vector<bool>{true, true, true};
  const bool at50 = fired(0.50) == std::vector<bool>{true, false, false};
  const auto& z = trace.rows.back().z;
  ok = ok && at10 && at50 && z[0] > r0.x[0] && z[1] < r0.x[1] && z[2] < r0.x[2];
  return {ok, "oracle " + vec(r0.x) + " -> " + vec(r1.x) + ", change " + vec(pct, 1) +
                  "%; alarms at 10% on all devices: " + (at10 ? "yes" : "no") +
                  ", at 50% on device 1 only: " + (at50 ? "yes" : "no")};
}

cli::CampaignReport default_campaign(const fs::path& out_dir) {
  cli::RunConfig cfg = cli::load_config(config("campaign"));
  cfg.output = out_dir;
  std::ostringstream sink;
  return cli::cmd_campaign(cfg, sink);
}

Outcome rule_sweep() {
  const auto rep = default_campaign(scratch("sweep"));
  const auto* l1 = rep.find_pooled("function_and_input", 0.01);
  const auto* l2 = rep.find_pooled("data_size", 0.01);
  if (!l1 || !l2) return {false, "campaign runs missing"};
  bool monotone = true;
  for (const auto& c : rep.cells) monotone = monotone && c.monotone;
  const double a1 = l1->metrics.accuracy;
  const double a2 = l2->metrics.accuracy;
  const bool ok = a1 >= 0.95 && a2 < a1 - 0.15 && monotone;
  return {ok, "accuracy at 1%: label-1 " + num(a1) + " (>= 0.95 " + (a1 >= 0.95 ? "ok" : "no") +
                  "), label-2 " + num(a2) + " (< label-1 - 0.15 " + (a2 < a1 - 0.15 ? "ok" : "no") +
                  "), threshold monotonicity on " + std::to_string(rep.cells.size()) + " streams " +
                  (monotone ? "ok" : "violated")};
}

Outcome determinism() {
  const fs::path a = scratch("determinism_a");
  const fs::path b = scratch("determinism_b");
  default_campaign(a);
  default_campaign(b);
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(entry.path(), a);
    if (!fs::exists(b / rel) || slurp(entry.path()) != slurp(b / rel)) ++differing;
  }
  std::size_t files_b = 0;
  for (const auto& entry : fs::recursive_directory_iterator(b)) files_b += entry.is_regular_file();
  return {files > 0 && differing == 0 && files == files_b,
          std::to_string(files) + " artifacts compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
  report("sufficient-resource optimum", sufficient_optimum);
  report("insufficient-resource optimum", insufficient_optimum);
  report("utility table", utility_table);
  report("mid-session join", mid_session_join);
  report("frequency estimation", dfwf_estimation);
  report("projection oracle equivalence", projection_equivalence);
  report("marginal laws", marginal_laws);
  report("manipulation demo", manipulation_demo);
  report("rule-based sweep", rule_sweep);
  report("campaign determinism", determinism);
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
