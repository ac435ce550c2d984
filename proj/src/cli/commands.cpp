#include "freqadmm/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

#include "freqadmm/anomaly/detector.hpp"
#include "freqadmm/anomaly/plant.hpp"
#include "freqadmm/anomaly/scenario.hpp"
#include "freqadmm/anomaly/trace_io.hpp"
#include "freqadmm/core/errors.hpp"

namespace freqadmm::cli {

using anomaly::format_real;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << text;
  os.close();
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

void write_manifest(const RunConfig& cfg, const std::string& command, std::vector<std::string> files) {
  std::sort(files.begin(), files.end());
  json j;
  j["command"] = command;
  j["scenario"] = cfg.scenario;
  j["config"] = json::parse(dump_config(cfg));
  j["config"].erase("output");  // so two output directories compare equal
  j["files"] = files;
  write_file(cfg.output / "manifest.json", j.dump(2) + "\n");
}

ResourceBudget budget_of(const RunConfig& cfg, bool with_joiners) {
  ResourceBudget b{cfg.c, cfg.d, {}, {}};
  for (const auto* list : {&cfg.devices, &cfg.joiners}) {
    if (list == &cfg.joiners && !with_joiners) break;
    for (const auto& d : *list) {
      b.a.push_back(d.a);
      b.gamma.push_back(d.gamma);
    }
  }
  return b;
}

std::vector<net::DeviceSpec> specs(const std::vector<DeviceConfig>& ds) {
  std::vector<net::DeviceSpec> out;
  for (const auto& d : ds) out.push_back({d.id, d.utility, d.a, d.gamma});
  return out;
}

}  // namespace

AllocationReport cmd_allocate(const RunConfig& cfg, std::ostream& out) {
  std::vector<DeviceConfig> all = cfg.devices;
  all.insert(all.end(), cfg.joiners.begin(), cfg.joiners.end());
  const auto funcs = utilities(all);
  const ResourceBudget b = budget_of(cfg, true);
  const std::size_t n = all.size();

  AllocationReport rep;
  rep.admm = admm_solve(funcs, b, cfg.solver);
  if (!rep.admm.converged) {
    throw std::runtime_error("ADMM did not converge in " + std::to_string(rep.admm.iterations) +
                             " iterations");
  }
  double sum_a = 0.0;
  for (double a : b.a) sum_a += a;
  std::vector<double> average(n, cfg.c / static_cast<double>(n));
  std::vector<double> proportional(n);
  for (std::size_t i = 0; i < n; ++i) proportional[i] = b.a[i] * cfg.c / sum_a;

  for (auto [name, x] : {std::pair<std::string, std::vector<double>>{"admm", rep.admm.z},
                         {"average", average},
                         {"proportional", proportional}}) {
    AllocationRow row{name, x, total_utility(funcs, x), {}};
    if (auto it = cfg.reference_utilities.find(name); it != cfg.reference_utilities.end()) {
      row.reference = it->second;
    }
    rep.rows.push_back(std::move(row));
  }

  std::ostringstream csv;
  csv << "method";
  for (const auto& d : all) csv << ",x" << d.id;
  csv << ",utility\n";
  out << "scenario " << cfg.scenario << ": " << n << " devices, c=" << format_real(cfg.c)
      << " d=" << format_real(cfg.d) << ", ADMM converged in " << rep.admm.iterations
      << " iterations\n\n";
  out << std::left << std::setw(14) << "method";
  for (const auto& d : all) out << std::right << std::setw(10) << ("x" + std::to_string(d.id));
  out << std::setw(12) << "utility" << "\n";

  std::vector<std::string> notes;
  for (const auto& row : rep.rows) {
    csv << row.method;
    out << std::left << std::setw(14) << row.method << std::right;
    for (double x : row.x) {
      csv << "," << format_real(x);
      out << std::setw(10) << fixed(x, 4);
    }
    csv << "," << format_real(row.utility) << "\n";
    out << std::setw(12) << fixed(row.utility, 2);
    if (row.reference && std::abs(*row.reference - row.utility) >= 0.005) {
      notes.push_back(row.method + ": reference total " + fixed(*row.reference, 2) +
                      ", computed " + fixed(row.utility, 2) + " (difference " +
                      fixed(row.utility - *row.reference, 2) + ")");
      out << " [" << notes.size() << "]";
    }
    out << "\n";
  }
  if (!notes.empty()) out << "\n";
  for (std::size_t i = 0; i < notes.size(); ++i) out << "[" << i + 1 << "] " << notes[i] << "\n";

  write_file(cfg.output / "allocation.csv", csv.str());
  write_manifest(cfg, "allocate", {"allocation.csv", "manifest.json"});
  return rep;
}

net::SessionReport cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  net::SessionPlan plan;
  plan.c = cfg.c;
  plan.d = cfg.d;
  plan.devices = specs(cfg.devices);
  plan.joiners = specs(cfg.joiners);
  plan.solver = cfg.solver;
  plan.window = cfg.dfwf_window;
  plan.transport = cfg.transport;
  net::SessionReport rep = net::run_session(plan);

  std::ostringstream stages, estimates, trace, usage;
  stages << "stage,device,z\n";
  estimates << "stage,device,window_packets,estimated_hz,consensus_hz,delay_ms\n";
  out << "scenario " << cfg.scenario << ": " << rep.stages.size() << " stage(s), transport "
      << net::mode_name(cfg.transport.mode) << "\n\n";
  out << std::left << std::setw(7) << "stage" << std::right << std::setw(8) << "device"
      << std::setw(12) << "z" << std::setw(14) << "estimate" << std::setw(12) << "delay_ms"
      << "\n";
  for (std::size_t s = 0; s < rep.stages.size(); ++s) {
    const auto& st = rep.stages[s];
    for (std::size_t i = 0; i < st.devices.size(); ++i) {
      const double z = i < st.z.size() ? st.z[i] : NAN;
      stages << s << "," << st.devices[i] << "," << format_real(z) << "\n";
      const auto e = std::find_if(st.estimates.begin(), st.estimates.end(),
                                  [&](const auto& e) { return e.device_id == st.devices[i]; });
      out << std::left << std::setw(7) << s << std::right << std::setw(8) << st.devices[i]
          << std::setw(12) << fixed(z, 4);
      if (e != st.estimates.end()) {
        estimates << s << "," << e->device_id << "," << e->window_packets << ","
                  << format_real(e->estimated_hz) << "," << format_real(z) << ","
                  << format_real(e->delay_ms) << "\n";
        out << std::setw(14) << fixed(e->estimated_hz, 4) << std::setw(12) << fixed(e->delay_ms, 3);
      }
      out << "\n";
    }
  }
  trace << "iteration,device,z,v\n";
  for (const auto& row : rep.trace) {
    for (std::size_t i = 0; i < row.z.size(); ++i) {
      trace << row.iteration << "," << i + 1 << "," << format_real(row.z[i]) << ","
            << format_real(i < row.v.size() ? row.v[i] : NAN) << "\n";
    }
  }
  usage << "time,stage,frequency,storage,c,d\n";
  for (const auto& u : rep.usage) {
    usage << format_real(u.time) << "," << u.stage << "," << format_real(u.frequency) << ","
          << format_real(u.storage) << "," << format_real(u.c) << "," << format_real(u.d) << "\n";
  }
  write_file(cfg.output / "stages.csv", stages.str());
  write_file(cfg.output / "estimates.csv", estimates.str());
  write_file(cfg.output / "trace_zv.csv", trace.str());
  write_file(cfg.output / "series_usage.csv", usage.str());
  write_manifest(cfg, "simulate",
                 {"estimates.csv", "manifest.json", "series_usage.csv", "stages.csv", "trace_zv.csv"});
  if (!rep.completed) throw std::runtime_error("session did not complete; partial artifacts written");
  return rep;
}

const CampaignCell* CampaignReport::find_pooled(const std::string& run, double threshold) const {
  for (const auto& c : pooled) {
    if (c.run == run && c.threshold == threshold) return &c;
  }
  return nullptr;
}

std::uint64_t campaign_seed(std::uint64_t seed, std::size_t run, std::size_t split) {
  return anomaly::derive_seed(anomaly::derive_seed(seed, run), split);
}

namespace {

struct JobResult {
  anomaly::Scenario scenario;
  std::string alarms;
  std::vector<CampaignCell> cells;
};

JobResult run_job(const RunConfig& cfg, std::size_t run, std::size_t split, std::size_t length) {
  const auto& cp = cfg.campaign;
  const std::uint64_t seed = campaign_seed(cp.seed, run, split);
  anomaly::Problem problem{utilities(cfg.devices), budget_of(cfg, false)};
  net::TransportProfile transport = cfg.transport;
  transport.seed = anomaly::derive_seed(seed, 0);
  auto plant = anomaly::make_protocol_plant(problem, transport, cfg.solver);

  anomaly::ScenarioConfig sc;
  sc.seed = seed;
  sc.length = length;
  sc.labels = cp.runs[run].labels;
  sc.target = cp.target;
  sc.normal = cp.normal;
  sc.anomalous = cp.anomalous;
  sc.ranges = cp.ranges;

  JobResult res;
  res.scenario = anomaly::generate_scenario(*plant, sc);
  const auto& trace = res.scenario.trace;
  const auto notices = anomaly::notices_from_trace(trace);

  std::vector<std::vector<anomaly::DetectorVerdict>> verdicts;
  std::ostringstream alarms;
  alarms << "iteration,device,threshold,deviation\n";
  for (double t : cfg.thresholds) {
    anomaly::DetectorConfig dc;
    dc.threshold = t;
    verdicts.push_back(anomaly::rule_detect(trace, dc, notices));
    const auto log = anomaly::alarm_log(verdicts.back());
    std::ostringstream one;
    anomaly::write_alarm_log(log, one);
    const std::string body = one.str();
    alarms << body.substr(body.find('\n') + 1);
    res.cells.push_back({cp.runs[run].name, kSplits[split], t, anomaly::score(verdicts.back(), trace), true});
  }
  // An alarm at a threshold must also be raised at every lower one.
  for (std::size_t hi = 0; hi < verdicts.size(); ++hi) {
    for (std::size_t lo = 0; lo < verdicts.size(); ++lo) {
      if (!(cfg.thresholds[lo] < cfg.thresholds[hi])) continue;
      for (std::size_t r = 0; r < verdicts[hi].size(); ++r) {
        for (std::size_t i = 0; i < verdicts[hi][r].alarms.size(); ++i) {
          if (verdicts[hi][r].alarms[i] && !verdicts[lo][r].alarms[i]) res.cells[hi].monotone = false;
        }
      }
    }
  }
  res.alarms = alarms.str();
  return res;
}

}  // namespace

CampaignReport cmd_campaign(const RunConfig& cfg, std::ostream& out) {
  const auto& cp = cfg.campaign;
  const std::size_t lengths[] = {cp.train, cp.validation, cp.test};

  std::vector<std::future<JobResult>> jobs;
  const auto policy = cfg.transport.mode == net::TransportMode::Simulated ? std::launch::async
                                                                          : std::launch::deferred;
  for (std::size_t r = 0; r < cp.runs.size(); ++r) {
    for (std::size_t s = 0; s < 3; ++s) {
      jobs.push_back(std::async(policy, run_job, std::cref(cfg), r, s, lengths[s]));
    }
  }

  CampaignReport rep;
  std::vector<std::string> files{"accuracy.csv", "events.csv", "manifest.json"};
  std::ostringstream events;
  events << "run,split,row,kind,detail\n";
  std::map<std::pair<std::size_t, std::size_t>, anomaly::Confusion> pooled;
  std::map<std::pair<std::size_t, std::size_t>, bool> pooled_monotone;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const std::size_t r = j / 3, s = j % 3;
    JobResult res = jobs[j].get();
    const std::string stem = cp.runs[r].name + "_" + kSplits[s] + ".csv";
    fs::create_directories(cfg.output / "traces");
    anomaly::export_trace(res.scenario.trace, cfg.output / "traces" / stem);
    write_file(cfg.output / "alarms" / stem, res.alarms);
    files.push_back("traces/" + stem);
    files.push_back("alarms/" + stem);
    for (const auto& e : res.scenario.events) {
      events << cp.runs[r].name << "," << kSplits[s] << "," << e.row << "," << e.kind << ","
             << csv_field(e.detail) << "\n";
    }
    for (std::size_t t = 0; t < res.cells.size(); ++t) {
      auto& acc = pooled.try_emplace({r, t}, anomaly::Confusion(2)).first->second;
      for (std::size_t k = 0; k < acc.counts.size(); ++k) {
        acc.counts[k] += res.cells[t].metrics.confusion.counts[k];
      }
      auto [it, fresh] = pooled_monotone.try_emplace({r, t}, true);
      it->second = it->second && res.cells[t].monotone;
      rep.cells.push_back(std::move(res.cells[t]));
    }
  }
  for (std::size_t r = 0; r < cp.runs.size(); ++r) {
    for (std::size_t t = 0; t < cfg.thresholds.size(); ++t) {
      rep.pooled.push_back({cp.runs[r].name, "all", cfg.thresholds[t],
                            anomaly::metrics_from(pooled.at({r, t})), pooled_monotone.at({r, t})});
    }
  }

  std::ostringstream acc;
  acc << "run,split,threshold,accuracy,precision,recall,specificity,support,monotone\n";
  for (const auto* list : {&rep.cells, &rep.pooled}) {
    for (const auto& c : *list) {
      const auto& m = c.metrics;
      acc << c.run << "," << c.split << "," << format_real(c.threshold) << ","
          << format_real(m.accuracy) << "," << format_real(m.precision) << ","
          << format_real(m.recall) << "," << format_real(m.specificity) << ","
          << m.confusion.total() << "," << (c.monotone ? 1 : 0) << "\n";
    }
  }
  write_file(cfg.output / "accuracy.csv", acc.str());
  write_file(cfg.output / "events.csv", events.str());
  write_manifest(cfg, "campaign", files);

  out << "rule-detector accuracy, splits pooled (" << cp.train + cp.validation + cp.test
      << " rows per run)\n\n";
  out << std::left << std::setw(20) << "run" << std::right;
  for (double t : cfg.thresholds) out << std::setw(9) << (fixed(100 * t, 0) + "%");
  out << "\n";
  for (std::size_t r = 0; r < cp.runs.size(); ++r) {
    out << std::left << std::setw(20) << cp.runs[r].name << std::right;
    for (std::size_t t = 0; t < cfg.thresholds.size(); ++t) {
      out << std::setw(9) << fixed(rep.pooled[r * cfg.thresholds.size() + t].metrics.accuracy, 4);
    }
    out << "\n";
  }
  return rep;
}

Predictions read_predictions(std::istream& is) {
  Predictions p;
  std::string line;
  if (!std::getline(is, line) || line.rfind("#predictions", 0) != 0) {
    throw ConfigError("predictions: missing '#predictions' header");
  }
  std::istringstream hs(line.substr(12));
  std::string kv;
  while (hs >> kv) {
    const auto eq = kv.find('=');
    const std::string key = kv.substr(0, eq);
    const std::string val = eq == std::string::npos ? "" : kv.substr(eq + 1);
    if (key == "granularity" && (val == "row" || val == "window")) {
      p.windowed = val == "window";
    } else if (key == "classes" && (val == "2" || val == "4")) {
      p.classes = std::stoul(val);
    } else if (key == "window" && val == std::to_string(anomaly::kScoreWindow)) {
    } else if (key == "stride" && val == std::to_string(anomaly::kScoreStride)) {
    } else {
      throw ConfigError("predictions: unsupported header field '" + kv + "'");
    }
  }
  std::size_t expect = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("");
      std::size_t pos = 0;
      const auto idx = std::stoul(line.substr(0, comma), &pos);
      if (pos != comma || idx != expect) throw std::invalid_argument("");
      const std::string lab = line.substr(comma + 1);
      const int label = std::stoi(lab, &pos);
      if (pos != lab.size() || label < 0 || static_cast<std::size_t>(label) >= p.classes) {
        throw std::invalid_argument("");
      }
      p.labels.push_back(label);
    } catch (const std::exception&) {
      throw ConfigError("predictions: bad line " + std::to_string(expect + 2) + ": '" + line + "'");
    }
    ++expect;
  }
  return p;
}

std::vector<ScoreEntry> cmd_score(const ScoreRequest& req, std::ostream& out) {
  const IterationTrace trace = anomaly::import_trace(req.trace);
  const std::vector<int> truth = anomaly::truth_labels(trace);
  std::vector<ScoreEntry> entries;

  if (req.predictions) {
    std::ifstream is(*req.predictions);
    if (!is) throw ConfigError("cannot read " + req.predictions->string());
    const Predictions p = read_predictions(is);
    ScoreEntry e;
    e.source = "predictions";
    if (p.windowed) {
      std::vector<int> t = truth;
      if (p.classes == 2) {
        for (int& v : t) v = v != 0;
      }
      const auto tw = anomaly::window_majority(t);
      if (tw.size() != p.labels.size()) {
        throw ConfigError("predictions: " + std::to_string(p.labels.size()) + " windows, trace has " +
                          std::to_string(tw.size()));
      }
      e.window = anomaly::score(p.labels, tw, p.classes);
    } else {
      if (truth.size() != p.labels.size()) {
        throw ConfigError("predictions: " + std::to_string(p.labels.size()) + " rows, trace has " +
                          std::to_string(truth.size()));
      }
      e.row = anomaly::score(p.labels, truth, p.classes);
      e.window = anomaly::score_windowed(p.labels, truth, p.classes);
    }
    entries.push_back(std::move(e));
  } else {
    for (double t : req.thresholds) {
      anomaly::DetectorConfig dc;
      dc.threshold = t;
      const auto verdicts = anomaly::rule_detect(trace, dc);
      const auto pred = anomaly::predictions(verdicts);
      entries.push_back({"rule", t, anomaly::score(pred, truth), anomaly::score_windowed(pred, truth)});
    }
  }

  json results = json::array();
  out << std::left << std::setw(12) << "source" << std::right << std::setw(10) << "threshold"
      << std::setw(12) << "row_acc" << std::setw(12) << "window_acc" << "\n";
  for (const auto& e : entries) {
    json j;
    j["source"] = e.source;
    j["threshold"] = e.threshold ? json(*e.threshold) : json(nullptr);
    j["row"] = e.row ? json::parse(anomaly::to_json(*e.row)) : json(nullptr);
    j["window"] = json::parse(anomaly::to_json(e.window));
    results.push_back(j);
    out << std::left << std::setw(12) << e.source << std::right << std::setw(10)
        << (e.threshold ? fixed(*e.threshold, 2) : "-") << std::setw(12)
        << (e.row ? fixed(e.row->accuracy, 4) : "-") << std::setw(12) << fixed(e.window.accuracy, 4)
        << "\n";
  }
  json doc;
  doc["trace"] = req.trace.filename().string();
  doc["rows"] = truth.size();
  doc["window"] = anomaly::kScoreWindow;
  doc["stride"] = anomaly::kScoreStride;
  doc["results"] = results;
  write_file(req.output / "score.json", doc.dump(2) + "\n");
  return entries;
}

}  // namespace freqadmm::cli
