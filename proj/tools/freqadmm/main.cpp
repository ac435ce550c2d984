#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "freqadmm/cli/commands.hpp"
#include "freqadmm/cli/config.hpp"
#include "freqadmm/core/errors.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> transport;
  std::optional<std::string> thresholds;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Campaign and transport jitter seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--threshold", o.thresholds, "Comma-separated detector thresholds, e.g. 0.01,0.1");
}

freqadmm::cli::RunConfig resolve(const Overrides& o) {
  using namespace freqadmm::cli;
  RunConfig cfg = load_config(o.config);
  if (o.seed) {
    cfg.campaign.seed = *o.seed;
    cfg.transport.seed = *o.seed;
  }
  if (o.out) cfg.output = *o.out;
  if (o.transport) cfg.transport.mode = parse_transport(*o.transport);
  if (o.thresholds) cfg.thresholds = parse_threshold_list(*o.thresholds);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = freqadmm::cli;
  CLI::App app{"Resource-constrained frequency allocation and manipulation detection"};
  app.require_subcommand(1);

  Overrides o;
  auto* allocate = app.add_subcommand("allocate", "Solve the allocation and compare baselines");
  auto* simulate = app.add_subcommand("simulate", "Run the gateway/device protocol end to end");
  auto* campaign = app.add_subcommand("campaign", "Generate labelled traces and sweep the rule detector");
  for (auto* cmd : {allocate, simulate, campaign}) {
    cmd->add_option("--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    cmd->add_option("--transport", o.transport, "Transport override")
        ->check(CLI::IsMember({"sim", "socket"}));
    add_common(cmd, o);
  }

  cli::ScoreRequest score_req;
  std::string trace, predictions;
  auto* score = app.add_subcommand("score", "Score the rule detector or a predictions file on a trace");
  score->add_option("--trace", trace, "Trace file")->required()->check(CLI::ExistingFile);
  score->add_option("--predictions", predictions, "Predictions file")->check(CLI::ExistingFile);
  add_common(score, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (score->parsed()) {
      score_req.trace = trace;
      if (!predictions.empty()) score_req.predictions = predictions;
      if (o.out) score_req.output = *o.out;
      if (o.thresholds) score_req.thresholds = cli::parse_threshold_list(*o.thresholds);
      cli::cmd_score(score_req, std::cout);
      return 0;
    }
    const cli::RunConfig cfg = resolve(o);
    if (allocate->parsed()) cli::cmd_allocate(cfg, std::cout);
    if (simulate->parsed()) cli::cmd_simulate(cfg, std::cout);
    if (campaign->parsed()) cli::cmd_campaign(cfg, std::cout);
    return 0;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const freqadmm::BudgetError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}
