#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "geodemo/error.hpp"
#include "geodemo/pipeline.hpp"

namespace {

struct Subcommand {
  const char* name;
  const char* help;
  std::optional<geodemo::Stage> stage;  // empty: run-all
};

const std::vector<Subcommand>& subcommands() {
  static const std::vector<Subcommand> list = {
      {"validate-input", "Ingest, reconstruct suppressed cells, correlate, prune and standardise",
       geodemo::Stage::ValidateInput},
      {"kselect", "Gap statistic and clustergram over the configured k ranges", geodemo::Stage::KSelect},
      {"fit", "Best-of-restarts k-means on the standardised features", geodemo::Stage::Fit},
      {"evaluate", "ANOVA F, cluster sizes and distance boxplots", geodemo::Stage::Evaluate},
      {"profile", "Pen portraits, cluster names and at-risk flags", geodemo::Stage::Profile},
      {"external-validate", "Join broadband performance and internet usage data", geodemo::Stage::ExternalValidate},
      {"export-geojson", "Attach cluster attributes to boundary polygons", geodemo::Stage::ExportGeoJson},
      {"run-all", "Every stage in order", std::nullopt},
  };
  return list;
}

void print_report(const geodemo::StageReport& report) {
  std::cout << geodemo::stage_name(report.stage) << " (" << report.seconds << " s)\n";
  for (const auto& [key, value] : report.details) std::cout << "  " << key << " = " << value << "\n";
  for (const auto& path : report.outputs) std::cout << "  wrote " << path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geodemographic classification pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  geodemo::ConfigOverrides overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::size_t> restarts;
  std::optional<unsigned> threads;
  std::optional<std::string> out_dir;

  std::vector<std::pair<CLI::App*, const Subcommand*>> commands;
  for (const auto& sub : subcommands()) {
    CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
    cmd->add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Master seed ([run] seed)");
    cmd->add_option("--k", k, "Cluster count ([cluster] k)")->check(CLI::PositiveNumber);
    cmd->add_option("--restarts", restarts, "K-means restarts ([cluster] restarts)")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", threads, "Worker threads, 0 for all ([run] threads)");
    cmd->add_option("--out-dir", out_dir, "Output directory ([run] out_dir)");
    commands.emplace_back(cmd, &sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(geodemo::ErrorCategory::Config);
  }

  try {
    geodemo::PipelineConfig config = geodemo::load_config(config_path);
    overrides.seed = seed;
    overrides.k = k;
    overrides.restarts = restarts;
    overrides.threads = threads;
    if (out_dir) overrides.out_dir = *out_dir;
    geodemo::apply_overrides(config, overrides);
    geodemo::Pipeline pipeline(std::move(config));

    for (const auto& [cmd, sub] : commands) {
      if (!cmd->parsed()) continue;
      if (sub->stage) {
        print_report(pipeline.run(*sub->stage));
      } else {
        for (const auto& report : pipeline.run_all()) print_report(report);
      }
    }
  } catch (const geodemo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(geodemo::ErrorCategory::Data);
  }
  return 0;
}
