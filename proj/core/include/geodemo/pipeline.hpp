#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geodemo/cluster.hpp"
#include "geodemo/geojson.hpp"

namespace geodemo {

enum class KSelectMode { Auto, Always, Never };

/// Every setting of a run. Relative input paths resolve against the
/// directory of the config file; the output directory against the current
/// working directory.
struct PipelineConfig {
  // [input]
  std::filesystem::path districts;
  std::filesystem::path schema;
  std::filesystem::path boundaries;
  std::filesystem::path performance;
  std::filesystem::path usage;
  std::filesystem::path lookup;
  // [preprocess]
  std::optional<double> suppression_threshold;  // overrides the schema
  double correlation_threshold = 0.7;
  std::vector<std::string> keep;
  // [cluster]
  std::optional<std::size_t> k;
  std::size_t restarts = 1000;
  InitMethod init = InitMethod::Forgy;
  int max_iterations = 300;
  // [kselect]
  KSelectMode kselect = KSelectMode::Auto;
  std::size_t gap_k_min = 1;
  std::size_t gap_k_max = 10;
  std::size_t gap_reps = 500;
  std::size_t reference_sets = 50;
  std::size_t kselect_restarts = 1;  // k-means starts per gap or clustergram fit
  std::size_t clustergram_k_min = 1;
  std::size_t clustergram_k_max = 12;
  std::size_t clustergram_reps = 100;
  // [profile]
  std::string risk_rule;  // empty: the default rule
  double dead_band = 0.1;
  std::map<int, std::string> names;
  // [validate]
  std::vector<std::string> cases;  // empty: districts of at-risk clusters
  // [export]
  std::optional<BoundingBox> bbox;
  std::string code_property = "code";
  // [run]
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;  // 0: all hardware threads
  std::filesystem::path out_dir = "out";
};

/// Errors: ConfigError{FileNotFound, BadConfig}.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Command-line values that replace config values when present.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<std::size_t> restarts;
  std::optional<unsigned> threads;
  std::optional<std::filesystem::path> out_dir;
};

void apply_overrides(PipelineConfig& config, const ConfigOverrides& overrides);

/// Checks value ranges. Errors: ConfigError{BadConfig}.
void validate_config(const PipelineConfig& config);

enum class Stage { ValidateInput, KSelect, Fit, Evaluate, Profile, ExternalValidate, ExportGeoJson };

std::string stage_name(Stage stage);

struct StageReport {
  Stage stage = Stage::ValidateInput;
  double seconds = 0.0;
  std::vector<std::string> outputs;                 // relative to out_dir
  std::map<std::string, std::string> details;       // short facts for the manifest
};

/// Runs stages against an output directory. Every stage reads its inputs
/// from files written by earlier stages, so running the subcommands one by
/// one yields the same bytes as run_all(). manifest.json is rewritten after
/// each stage and lists every known output with its SHA-256 digest.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  /// Errors from the stage propagate with the stage name prefixed.
  StageReport run(Stage stage);

  /// validate-input, kselect (per KSelectMode), fit, evaluate, profile,
  /// external-validate (when performance data is configured) and
  /// export-geojson (when boundaries are configured).
  std::vector<StageReport> run_all();

  const PipelineConfig& config() const { return config_; }
  unsigned threads() const;

 private:
  StageReport validate_input();
  StageReport kselect();
  StageReport fit();
  StageReport evaluate();
  StageReport profile();
  StageReport external_validate();
  StageReport export_geojson_stage();
  void write_manifest(const StageReport& report);
  void write(const std::string& relative, const std::string& content, StageReport& report) const;

  PipelineConfig config_;
};

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(const std::string& data);

/// Output files the pipeline may write, relative to the output directory.
const std::vector<std::string>& known_outputs();

}  // namespace geodemo
