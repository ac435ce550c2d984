#include "freqadmm/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "freqadmm/core/budget.hpp"
#include "freqadmm/core/errors.hpp"

namespace freqadmm::cli {

using nlohmann::json;

namespace {

// Reads one JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T need(const char* key) {
    if (!has(key)) throw ConfigError(where_ + ": missing '" + key + "'");
    return as<T>(key);
  }

  template <typename T>
  T get(const char* key, T fallback) {
    return has(key) ? as<T>(key) : fallback;
  }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
      }
    }
  }

  [[nodiscard]] std::string at(const std::string& key) const { return where_ + "." + key; }

 private:
  template <typename T>
  T as(const char* key) {
    const json& v = raw(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
          throw ConfigError("");
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError(where_ + ": '" + key + "' has the wrong type");
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

UtilityFunction read_utility(const json& j, const std::string& where) {
  Reader r(j, where);
  const auto kind_text = r.need<std::string>("kind");
  UtilityKind kind;
  try {
    kind = kind_from_name(kind_text);
  } catch (const std::exception&) {
    throw ConfigError(where + ": unknown utility kind '" + kind_text + "'");
  }
  UtilityFunction f;
  if (kind == UtilityKind::QuadCubic) {
    f = UtilityFunction::quad_cubic(r.get("scale", 1.0), r.need<double>("offset"),
                                    r.get("cubic", 0.0), r.get("constant", 0.0));
  } else {
    const double center = r.get("center", 9.0);
    f = kind == UtilityKind::Exp          ? UtilityFunction::exp(center)
        : kind == UtilityKind::Reciprocal ? UtilityFunction::reciprocal(center)
                                          : UtilityFunction::softplus(center);
  }
  f = f.shifted(r.get("shift", 0.0));
  r.done();
  return f;
}

json write_utility(const UtilityFunction& f) {
  json j;
  j["kind"] = kind_name(f.kind);
  if (f.kind == UtilityKind::QuadCubic) {
    j["scale"] = f.scale;
    j["offset"] = f.offset;
    j["cubic"] = f.cubic;
    j["constant"] = f.constant;
  } else {
    j["center"] = f.center;
  }
  j["shift"] = f.shift;
  return j;
}

std::vector<DeviceConfig> read_devices(Reader& parent, const char* key, bool required) {
  std::vector<DeviceConfig> out;
  if (!parent.has(key)) {
    if (required) throw ConfigError(std::string("config: missing '") + key + "'");
    return out;
  }
  const json& arr = parent.raw(key);
  if (!arr.is_array()) throw ConfigError(parent.at(key) + ": expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = parent.at(key) + "[" + std::to_string(i) + "]";
    Reader r(arr[i], where);
    DeviceConfig d;
    d.id = r.need<std::uint32_t>("id");
    d.utility = read_utility(r.raw("utility"), where + ".utility");
    d.a = r.need<double>("a");
    d.gamma = r.need<double>("gamma");
    r.done();
    out.push_back(d);
  }
  return out;
}

json write_devices(const std::vector<DeviceConfig>& ds) {
  json arr = json::array();
  for (const auto& d : ds) {
    arr.push_back({{"id", d.id}, {"utility", write_utility(d.utility)}, {"a", d.a}, {"gamma", d.gamma}});
  }
  return arr;
}

SolverConfig read_solver(const json& j) {
  Reader r(j, "config.solver");
  SolverConfig s;
  s.rho = r.get("rho", s.rho);
  s.primal_tol = r.get("primal_tol", s.primal_tol);
  s.dual_tol = r.get("dual_tol", s.dual_tol);
  s.max_iterations = r.get("max_iterations", s.max_iterations);
  s.projection_tol = r.get("projection_tol", s.projection_tol);
  s.scalar_tol = r.get("scalar_tol", s.scalar_tol);
  s.max_bisections = r.get("max_bisections", s.max_bisections);
  r.done();
  return s;
}

json write_solver(const SolverConfig& s) {
  return {{"rho", s.rho},
          {"primal_tol", s.primal_tol},
          {"dual_tol", s.dual_tol},
          {"max_iterations", s.max_iterations},
          {"projection_tol", s.projection_tol},
          {"scalar_tol", s.scalar_tol},
          {"max_bisections", s.max_bisections}};
}

net::LinkProfile read_link(const json& j, const std::string& where) {
  Reader r(j, where);
  net::LinkProfile l;
  l.base_delay_ms = r.get("base_delay_ms", 0.0);
  l.jitter_ms = r.get("jitter_ms", 0.0);
  r.done();
  return l;
}

net::TransportProfile read_transport(const json& j) {
  Reader r(j, "config.transport");
  net::TransportProfile t;
  t.mode = parse_transport(r.get<std::string>("mode", "sim"));
  t.base_delay_ms = r.get("base_delay_ms", t.base_delay_ms);
  t.jitter_ms = r.get("jitter_ms", t.jitter_ms);
  t.seed = r.get("seed", t.seed);
  t.time_compression = r.get("time_compression", t.time_compression);
  if (r.has("links")) {
    const json& links = r.raw("links");
    if (!links.is_object()) throw ConfigError("config.transport.links: expected an object");
    for (auto it = links.begin(); it != links.end(); ++it) {
      net::DeviceId id = 0;
      try {
        std::size_t pos = 0;
        id = static_cast<net::DeviceId>(std::stoul(it.key(), &pos));
        if (pos != it.key().size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ConfigError("config.transport.links: key '" + it.key() + "' is not a device id");
      }
      t.links[id] = read_link(it.value(), "config.transport.links." + it.key());
    }
  }
  r.done();
  return t;
}

json write_transport(const net::TransportProfile& t) {
  json links = json::object();
  for (const auto& [id, l] : t.links) {
    links[std::to_string(id)] = {{"base_delay_ms", l.base_delay_ms}, {"jitter_ms", l.jitter_ms}};
  }
  return {{"mode", net::mode_name(t.mode)},
          {"base_delay_ms", t.base_delay_ms},
          {"jitter_ms", t.jitter_ms},
          {"seed", t.seed},
          {"time_compression", t.time_compression},
          {"links", links}};
}

anomaly::PhaseRange read_range(Reader& r, const char* key, anomaly::PhaseRange fallback) {
  if (!r.has(key)) return fallback;
  const json& j = r.raw(key);
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned()) {
    throw ConfigError(r.at(key) + ": expected [min, max]");
  }
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>()};
}

CampaignConfig read_campaign(const json& j) {
  Reader r(j, "config.campaign");
  CampaignConfig c;
  c.seed = r.get("seed", c.seed);
  c.train = r.get("train", c.train);
  c.validation = r.get("validation", c.validation);
  c.test = r.get("test", c.test);
  c.target = r.get("target", c.target);
  c.normal = read_range(r, "normal", c.normal);
  c.anomalous = read_range(r, "anomalous", c.anomalous);
  if (r.has("ranges")) {
    Reader f(r.raw("ranges"), "config.campaign.ranges");
    c.ranges.input = f.get("input", c.ranges.input);
    c.ranges.size = f.get("size", c.ranges.size);
    c.ranges.mwf = f.get("mwf", c.ranges.mwf);
    c.ranges.storage = f.get("storage", c.ranges.storage);
    f.done();
  }
  if (r.has("runs")) {
    const json& runs = r.raw("runs");
    if (!runs.is_array()) throw ConfigError("config.campaign.runs: expected an array");
    c.runs.clear();
    for (std::size_t i = 0; i < runs.size(); ++i) {
      Reader rr(runs[i], "config.campaign.runs[" + std::to_string(i) + "]");
      CampaignRun run;
      run.name = rr.need<std::string>("name");
      const json& labels = rr.raw("labels");
      if (!labels.is_array()) throw ConfigError(rr.at("labels") + ": expected an array");
      for (const auto& l : labels) {
        if (!l.is_number_integer()) throw ConfigError(rr.at("labels") + ": expected integers");
        run.labels.push_back(l.get<int>());
      }
      rr.done();
      c.runs.push_back(std::move(run));
    }
  }
  r.done();
  return c;
}

json write_campaign(const CampaignConfig& c) {
  json runs = json::array();
  for (const auto& r : c.runs) runs.push_back({{"name", r.name}, {"labels", r.labels}});
  return {{"seed", c.seed},
          {"train", c.train},
          {"validation", c.validation},
          {"test", c.test},
          {"target", c.target},
          {"normal", {c.normal.min, c.normal.max}},
          {"anomalous", {c.anomalous.min, c.anomalous.max}},
          {"ranges",
           {{"input", c.ranges.input},
            {"size", c.ranges.size},
            {"mwf", c.ranges.mwf},
            {"storage", c.ranges.storage}}},
          {"runs", runs}};
}

bool finite_utility(const UtilityFunction& f) {
  return std::isfinite(f.scale) && std::isfinite(f.offset) && std::isfinite(f.cubic) &&
         std::isfinite(f.constant) && std::isfinite(f.center) && std::isfinite(f.shift);
}

}  // namespace

void RunConfig::validate() const {
  if (devices.empty()) throw ConfigError("config: at least one device is required");
  std::set<std::uint32_t> ids;
  ResourceBudget b{c, d, {}, {}};
  for (const auto* list : {&devices, &joiners}) {
    for (const auto& dev : *list) {
      if (!ids.insert(dev.id).second) {
        throw ConfigError("config: duplicate device id " + std::to_string(dev.id));
      }
      if (!finite_utility(dev.utility)) {
        throw ConfigError("config: device " + std::to_string(dev.id) + " has a non-finite utility");
      }
      b.a.push_back(dev.a);
      b.gamma.push_back(dev.gamma);
    }
    try {
      b.validate();
    } catch (const BudgetError& e) {
      throw ConfigError(std::string("config: infeasible budget") +
                        (list == &joiners ? " after the joins" : "") + ": " + e.what());
    }
  }
  try {
    solver.validate();
    transport.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (dfwf_window < 2) throw ConfigError("config: dfwf_window must be at least 2");
  if (thresholds.empty()) throw ConfigError("config: thresholds must not be empty");
  for (double t : thresholds) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("config: thresholds must be positive");
  }
  const auto& cp = campaign;
  if (cp.target >= devices.size()) throw ConfigError("config: campaign target out of range");
  const std::size_t cycle = cp.normal.max + cp.anomalous.max;
  if (cp.normal.min == 0 || cp.normal.max < cp.normal.min || cp.anomalous.min == 0 ||
      cp.anomalous.max < cp.anomalous.min) {
    throw ConfigError("config: campaign phase ranges must be non-empty [min, max]");
  }
  for (std::size_t len : {cp.train, cp.validation, cp.test}) {
    if (len < cycle) throw ConfigError("config: campaign split shorter than one full cycle");
  }
  for (double r : {cp.ranges.input, cp.ranges.size, cp.ranges.mwf, cp.ranges.storage}) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("config: factor ranges must be >= 0");
  }
  std::set<std::string> names;
  for (const auto& run : cp.runs) {
    if (run.name.empty() ||
        run.name.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
            std::string::npos) {
      throw ConfigError("config: campaign run name '" + run.name + "' must be [A-Za-z0-9_-]+");
    }
    if (!names.insert(run.name).second) {
      throw ConfigError("config: duplicate campaign run '" + run.name + "'");
    }
    for (int l : run.labels) {
      if (l < 0 || l > 3) throw ConfigError("config: campaign label " + std::to_string(l) + " unknown");
    }
  }
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Reader r(j, "config");
  RunConfig cfg;
  cfg.scenario = r.get<std::string>("scenario", cfg.scenario);
  cfg.c = r.need<double>("c");
  cfg.d = r.need<double>("d");
  cfg.devices = read_devices(r, "devices", true);
  cfg.joiners = read_devices(r, "joiners", false);
  if (r.has("solver")) cfg.solver = read_solver(r.raw("solver"));
  if (r.has("transport")) cfg.transport = read_transport(r.raw("transport"));
  cfg.dfwf_window = r.get("dfwf_window", cfg.dfwf_window);
  if (r.has("campaign")) cfg.campaign = read_campaign(r.raw("campaign"));
  if (r.has("thresholds")) {
    const json& t = r.raw("thresholds");
    if (!t.is_array()) throw ConfigError("config.thresholds: expected an array");
    cfg.thresholds.clear();
    for (const auto& v : t) {
      if (!v.is_number()) throw ConfigError("config.thresholds: expected numbers");
      cfg.thresholds.push_back(v.get<double>());
    }
  }
  if (r.has("reference_utilities")) {
    const json& m = r.raw("reference_utilities");
    if (!m.is_object()) throw ConfigError("config.reference_utilities: expected an object");
    for (auto it = m.begin(); it != m.end(); ++it) {
      if (it.key() != "admm" && it.key() != "average" && it.key() != "proportional") {
        throw ConfigError("config.reference_utilities: unknown method '" + it.key() + "'");
      }
      if (!it.value().is_number()) {
        throw ConfigError("config.reference_utilities." + it.key() + ": expected a number");
      }
      cfg.reference_utilities[it.key()] = it.value().get<double>();
    }
  }
  cfg.output = r.get<std::string>("output", cfg.output.string());
  r.done();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  json thresholds = cfg.thresholds;
  json refs = json::object();
  for (const auto& [k, v] : cfg.reference_utilities) refs[k] = v;
  const json j = {{"scenario", cfg.scenario},
                  {"c", cfg.c},
                  {"d", cfg.d},
                  {"devices", write_devices(cfg.devices)},
                  {"joiners", write_devices(cfg.joiners)},
                  {"solver", write_solver(cfg.solver)},
                  {"transport", write_transport(cfg.transport)},
                  {"dfwf_window", cfg.dfwf_window},
                  {"campaign", write_campaign(cfg.campaign)},
                  {"thresholds", thresholds},
                  {"reference_utilities", refs},
                  {"output", cfg.output.string()}};
  return j.dump(2) + "\n";
}

std::vector<UtilityFunction> utilities(const std::vector<DeviceConfig>& devices) {
  std::vector<UtilityFunction> out;
  for (const auto& d : devices) out.push_back(d.utility);
  return out;
}

std::vector<double> parse_threshold_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(item, &pos);
      if (pos != item.size() || !(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("");
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("threshold list: '" + item + "' is not a positive number");
    }
  }
  if (out.empty()) throw ConfigError("threshold list is empty");
  return out;
}

net::TransportMode parse_transport(const std::string& name) {
  if (name == "sim") return net::TransportMode::Simulated;
  if (name == "socket") return net::TransportMode::Socket;
  throw ConfigError("transport must be 'sim' or 'socket', not '" + name + "'");
}

}  // namespace freqadmm::cli
