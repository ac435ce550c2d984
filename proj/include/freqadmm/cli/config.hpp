#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "freqadmm/anomaly/manipulation.hpp"
#include "freqadmm/anomaly/scenario.hpp"
#include "freqadmm/core/solver.hpp"
#include "freqadmm/core/utility.hpp"
#include "freqadmm/net/transport.hpp"

namespace freqadmm::cli {

// Malformed, incomplete or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DeviceConfig {
  std::uint32_t id = 0;
  UtilityFunction utility;
  double a = 0.0;
  double gamma = 0.0;
  friend bool operator==(const DeviceConfig&, const DeviceConfig&) = default;
};

struct CampaignRun {
  std::string name;
  std::vector<int> labels;
  friend bool operator==(const CampaignRun&, const CampaignRun&) = default;
};

struct CampaignConfig {
  std::uint64_t seed = 1;
  std::size_t train = 3600;
  std::size_t validation = 1800;
  std::size_t test = 3600;
  std::size_t target = 0;
  anomaly::PhaseRange normal{100, 120};
  anomaly::PhaseRange anomalous{50, 70};
  anomaly::FactorRanges ranges;
  std::vector<CampaignRun> runs{{"input_only", {3}},
                                {"function_and_input", {1}},
                                {"data_size", {2}},
                                {"general", {0, 1, 2, 3}}};
  friend bool operator==(const CampaignConfig&, const CampaignConfig&) = default;
};

struct RunConfig {
  std::string scenario = "unnamed";
  double c = 0.0;
  double d = 0.0;
  std::vector<DeviceConfig> devices;
  std::vector<DeviceConfig> joiners;  // join one by one after convergence
  SolverConfig solver;
  net::TransportProfile transport;
  std::size_t dfwf_window = 300;
  CampaignConfig campaign;
  std::vector<double> thresholds{0.01, 0.05, 0.10, 0.15, 0.30, 0.50};
  // Published totals per allocation method, footnoted when they differ.
  std::map<std::string, double> reference_utilities;
  std::filesystem::path output = "out";

  // Checks every invariant the modules rely on; throws ConfigError.
  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Unknown keys are rejected at every level. Missing optional sections take
// the defaults above.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
// Pretty-printed JSON with every field spelled out; parse_config(dump)
// returns an equal config.
std::string dump_config(const RunConfig& cfg);

std::vector<UtilityFunction> utilities(const std::vector<DeviceConfig>& devices);

// "0.01,0.1" -> {0.01, 0.1}; throws ConfigError.
std::vector<double> parse_threshold_list(const std::string& text);
net::TransportMode parse_transport(const std::string& name);

}  // namespace freqadmm::cli
