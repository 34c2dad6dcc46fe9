#include "geodemo/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "geodemo/charts.hpp"
#include "geodemo/csv.hpp"
#include "geodemo/error.hpp"
#include "geodemo/evaluate.hpp"
#include "geodemo/ingest.hpp"
#include "geodemo/ini.hpp"
#include "geodemo/kselect.hpp"
#include "geodemo/preprocess.hpp"
#include "geodemo/profile.hpp"
#include "geodemo/rng.hpp"
#include "geodemo/validate.hpp"

#ifndef GEODEMO_VERSION
#define GEODEMO_VERSION "unknown"
#endif

namespace geodemo {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// Seeds of the stochastic kselect stages, derived from the master seed.
constexpr std::uint64_t kGapStream = 1;
constexpr std::uint64_t kClustergramStream = 2;

std::size_t config_count(const std::string& key, const std::string& value) {
  const double v = parse_config_number(key, value);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ConfigError("BadConfig", key + ": expected a non-negative integer, got '" + value + "'");
  }
  return static_cast<std::size_t>(v);
}

std::uint64_t config_seed(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("BadConfig", key + ": expected an unsigned 64-bit integer, got '" + value + "'");
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  const fs::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string read_file(const fs::path& path) { return read_text_file(path); }

FeatureMatrix read_features(const fs::path& path) {
  const CsvDocument doc = read_csv(path);
  if (doc.header.size() < 3 || doc.header[0] != "district_code" || doc.header[1] != "district_name") {
    throw DataError("BadIntermediate", path.string() + " is not a features file");
  }
  const std::size_t d = doc.header.size() - 2;
  Matrix z(static_cast<Eigen::Index>(doc.rows.size()), static_cast<Eigen::Index>(d));
  std::vector<DistrictCode> districts;
  for (std::size_t i = 0; i < doc.rows.size(); ++i) {
    const auto& row = doc.rows[i];
    districts.push_back({row[0], row[1]});
    for (std::size_t j = 0; j < d; ++j) {
      const auto v = parse_number(row[j + 2]);
      if (!v) throw DataError("BadIntermediate", path.string() + ": bad value '" + row[j + 2] + "'");
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
    }
  }
  std::vector<VariableMeta> variables;
  for (std::size_t j = 0; j < d; ++j) {
    const std::string& name = doc.header[j + 2];
    const auto& defaults = default_variables();
    const auto it = std::find_if(defaults.begin(), defaults.end(), [&](const auto& v) { return v.name == name; });
    variables.push_back(it != defaults.end() ? *it : VariableMeta{name, Domain::Demographic, "", Polarity::AsIs});
  }
  return make_features(std::move(z), std::move(variables), std::move(districts));
}

std::string features_csv(const FeatureMatrix& fm) {
  std::vector<std::string> header = {"district_code", "district_name"};
  for (const auto& v : fm.variables) header.push_back(v.name);
  std::string out = csv_line(header);
  for (std::size_t i = 0; i < fm.rows(); ++i) {
    std::vector<std::string> row = {fm.districts[i].code, fm.districts[i].name};
    for (std::size_t j = 0; j < fm.cols(); ++j) {
      row.push_back(format_number(fm.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    }
    out += csv_line(row);
  }
  return out;
}

ClusterModel read_model(const fs::path& dir, const FeatureMatrix& fm) {
  const CsvDocument assign_doc = read_csv(dir / "assignments.csv");
  if (assign_doc.rows.size() != fm.rows()) {
    throw DataError("BadIntermediate", "assignments.csv does not match features.csv");
  }
  std::vector<int> assignments;
  for (std::size_t i = 0; i < assign_doc.rows.size(); ++i) {
    const auto& row = assign_doc.rows[i];
    if (row.size() != 2 || row[0] != fm.districts[i].code) {
      throw DataError("BadIntermediate", "assignments.csv row " + std::to_string(i + 1) + " does not match features.csv");
    }
    assignments.push_back(static_cast<int>(config_count("cluster_id", row[1])));
  }
  const CsvDocument center_doc = read_csv(dir / "centers.csv");
  const std::size_t d = fm.cols();
  if (center_doc.rows.empty() || center_doc.rows.size() % d != 0) {
    throw DataError("BadIntermediate", "centers.csv does not match features.csv");
  }
  const std::size_t k = center_doc.rows.size() / d;
  Matrix centers(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < center_doc.rows.size(); ++r) {
    const auto v = parse_number(center_doc.rows[r][2]);
    if (!v) throw DataError("BadIntermediate", "centers.csv: bad value");
    centers(static_cast<Eigen::Index>(r / d), static_cast<Eigen::Index>(r % d)) = *v;
  }
  for (int a : assignments) {
    if (static_cast<std::size_t>(a) >= k) throw DataError("BadIntermediate", "assignment outside the cluster range");
  }
  return model_from_parts(fm.z, std::move(centers), std::move(assignments));
}

// Cluster names and risk flags as written by the profile stage.
std::vector<ClusterProfile> read_risk(const fs::path& path) {
  const CsvDocument doc = read_csv(path);
  const auto col = [&](const char* name) {
    const auto c = doc.column(name);
    if (!c) throw DataError("BadIntermediate", path.string() + " lacks column " + name);
    return *c;
  };
  const std::size_t id_col = col("cluster_id");
  const std::size_t name_col = col("cluster_name");
  const std::size_t size_col = col("size");
  const std::size_t risk_col = col("at_risk");
  std::vector<ClusterProfile> out;
  for (const auto& row : doc.rows) {
    ClusterProfile p;
    p.cluster_id = static_cast<int>(config_count("cluster_id", row.at(id_col)));
    p.name = row.at(name_col);
    p.size = config_count("size", row.at(size_col));
    p.at_risk = row.at(risk_col) == "true";
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<double> read_distances(const fs::path& path, const FeatureMatrix& fm) {
  const CsvDocument doc = read_csv(path);
  if (doc.rows.size() != fm.rows()) throw DataError("BadIntermediate", "distances.csv does not match features.csv");
  std::vector<double> out;
  for (std::size_t i = 0; i < doc.rows.size(); ++i) {
    if (doc.rows[i][0] != fm.districts[i].code) {
      throw DataError("BadIntermediate", "distances.csv does not match features.csv");
    }
    const auto v = parse_number(doc.rows[i][2]);
    if (!v) throw DataError("BadIntermediate", "distances.csv: bad value");
    out.push_back(*v);
  }
  return out;
}

std::string to_string(KSelectMode mode) {
  switch (mode) {
    case KSelectMode::Auto: return "auto";
    case KSelectMode::Always: return "always";
    case KSelectMode::Never: return "never";
  }
  return "auto";
}

Json config_snapshot(const PipelineConfig& c, unsigned threads) {
  Json j;
  const auto path = [](const fs::path& p) { return p.empty() ? Json(nullptr) : Json(p.generic_string()); };
  j["input"] = {{"districts", path(c.districts)},     {"schema", path(c.schema)},
                {"boundaries", path(c.boundaries)},   {"performance", path(c.performance)},
                {"usage", path(c.usage)},             {"lookup", path(c.lookup)}};
  j["preprocess"] = {{"suppression_threshold", c.suppression_threshold ? Json(*c.suppression_threshold) : Json(nullptr)},
                     {"correlation_threshold", c.correlation_threshold},
                     {"keep", c.keep}};
  j["cluster"] = {{"k", c.k ? Json(*c.k) : Json(nullptr)},
                  {"restarts", c.restarts},
                  {"init", c.init == InitMethod::Forgy ? "forgy" : "kmeans++"},
                  {"max_iterations", c.max_iterations}};
  j["kselect"] = {{"run", to_string(c.kselect)},
                  {"gap_k_min", c.gap_k_min},
                  {"gap_k_max", c.gap_k_max},
                  {"gap_reps", c.gap_reps},
                  {"reference_sets", c.reference_sets},
                  {"restarts", c.kselect_restarts},
                  {"clustergram_k_min", c.clustergram_k_min},
                  {"clustergram_k_max", c.clustergram_k_max},
                  {"clustergram_reps", c.clustergram_reps}};
  Json names = Json::object();
  for (const auto& [id, name] : c.names) names[std::to_string(id)] = name;
  j["profile"] = {{"risk_rule", c.risk_rule.empty() ? RiskRule::default_expression() : c.risk_rule},
                  {"dead_band", c.dead_band},
                  {"names", names}};
  j["validate"] = {{"cases", c.cases}};
  j["export"] = {{"bbox", c.bbox ? Json::array({c.bbox->min_x, c.bbox->min_y, c.bbox->max_x, c.bbox->max_y})
                                 : Json(nullptr)},
                 {"code_property", c.code_property}};
  j["run"] = {{"seed", c.seed ? Json(*c.seed) : Json(nullptr)}, {"threads", threads},
              {"out_dir", c.out_dir.generic_string()}};
  return j;
}

std::uint64_t require_seed(const PipelineConfig& c, const std::string& stage) {
  if (!c.seed) {
    throw ConfigError("MissingSeed", stage + " is stochastic: set [run] seed or pass --seed");
  }
  return *c.seed;
}

KMeansOptions kmeans_options(const PipelineConfig& c) {
  KMeansOptions o;
  o.init = c.init;
  o.max_iterations = c.max_iterations;
  return o;
}

std::map<int, std::string> names_of(const std::vector<ClusterProfile>& profiles) {
  std::map<int, std::string> out;
  for (const auto& p : profiles) out[p.cluster_id] = p.name;
  return out;
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
  const IniTree tree = parse_ini(text, "config");
  PipelineConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("BadConfig", "key '" + section + "' must sit inside a [section]");
    }
    for (const auto& [key, node] : body) {
      const std::string value = trim(node.data());
      const std::string name = section + "." + key;
      const auto unknown = [&] { throw ConfigError("BadConfig", "unknown config key '" + name + "'"); };
      if (section == "input") {
        const fs::path p = resolve(base_dir, value);
        if (key == "districts") c.districts = p;
        else if (key == "schema") c.schema = p;
        else if (key == "boundaries") c.boundaries = p;
        else if (key == "performance") c.performance = p;
        else if (key == "usage") c.usage = p;
        else if (key == "lookup") c.lookup = p;
        else unknown();
      } else if (section == "preprocess") {
        if (key == "suppression_threshold") c.suppression_threshold = parse_config_number(name, value);
        else if (key == "correlation_threshold") c.correlation_threshold = parse_config_number(name, value);
        else if (key == "keep") c.keep = split_list(value);
        else unknown();
      } else if (section == "cluster") {
        if (key == "k") {
          if (!value.empty()) c.k = config_count(name, value);
        } else if (key == "restarts") {
          c.restarts = config_count(name, value);
        } else if (key == "init") {
          if (value == "forgy") c.init = InitMethod::Forgy;
          else if (value == "kmeans++") c.init = InitMethod::KMeansPlusPlus;
          else throw ConfigError("BadConfig", name + ": expected forgy or kmeans++");
        } else if (key == "max_iterations") {
          c.max_iterations = static_cast<int>(config_count(name, value));
        } else {
          unknown();
        }
      } else if (section == "kselect") {
        if (key == "run") {
          if (value == "auto") c.kselect = KSelectMode::Auto;
          else if (value == "always") c.kselect = KSelectMode::Always;
          else if (value == "never") c.kselect = KSelectMode::Never;
          else throw ConfigError("BadConfig", name + ": expected auto, always or never");
        } else if (key == "gap_k_min") c.gap_k_min = config_count(name, value);
        else if (key == "gap_k_max") c.gap_k_max = config_count(name, value);
        else if (key == "gap_reps") c.gap_reps = config_count(name, value);
        else if (key == "reference_sets") c.reference_sets = config_count(name, value);
        else if (key == "restarts") c.kselect_restarts = config_count(name, value);
        else if (key == "clustergram_k_min") c.clustergram_k_min = config_count(name, value);
        else if (key == "clustergram_k_max") c.clustergram_k_max = config_count(name, value);
        else if (key == "clustergram_reps") c.clustergram_reps = config_count(name, value);
        else unknown();
      } else if (section == "profile") {
        if (key == "risk_rule") c.risk_rule = value;
        else if (key == "dead_band") c.dead_band = parse_config_number(name, value);
        else unknown();
      } else if (section == "names") {
        c.names[static_cast<int>(config_count(name, key))] = value;
      } else if (section == "validate") {
        if (key == "cases") c.cases = split_list(value);
        else unknown();
      } else if (section == "export") {
        if (key == "bbox") {
          if (!value.empty()) c.bbox = parse_bounding_box(value);
        } else if (key == "code_property") {
          c.code_property = value;
        } else {
          unknown();
        }
      } else if (section == "run") {
        if (key == "seed") c.seed = config_seed(name, value);
        else if (key == "threads") c.threads = static_cast<unsigned>(config_count(name, value));
        else if (key == "out_dir") c.out_dir = value;
        else unknown();
      } else {
        throw ConfigError("BadConfig", "unknown config section [" + section + "]");
      }
    }
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("FileNotFound", "config file " + path.string() + " not found");
  return parse_config(read_file(path), path.parent_path());
}

void apply_overrides(PipelineConfig& config, const ConfigOverrides& o) {
  if (o.seed) config.seed = o.seed;
  if (o.k) config.k = o.k;
  if (o.restarts) config.restarts = *o.restarts;
  if (o.threads) config.threads = *o.threads;
  if (o.out_dir) config.out_dir = *o.out_dir;
}

void validate_config(const PipelineConfig& c) {
  const auto bad = [](const std::string& msg) { throw ConfigError("BadConfig", msg); };
  if (!(c.correlation_threshold > 0.0 && c.correlation_threshold <= 1.0)) {
    bad("correlation_threshold must lie in (0, 1]");
  }
  if (c.suppression_threshold && *c.suppression_threshold < 0.0) bad("suppression_threshold must be >= 0");
  if (c.k && *c.k == 0) bad("k must be at least 1");
  if (c.restarts == 0) bad("restarts must be at least 1");
  if (c.max_iterations < 1) bad("max_iterations must be at least 1");
  if (c.gap_k_min < 1 || c.gap_k_min > c.gap_k_max) bad("gap k range must satisfy 1 <= gap_k_min <= gap_k_max");
  if (c.gap_reps == 0) bad("gap_reps must be at least 1");
  if (c.reference_sets < 2) bad("reference_sets must be at least 2");
  if (c.kselect_restarts == 0) bad("kselect restarts must be at least 1");
  if (c.clustergram_k_min < 1 || c.clustergram_k_min > c.clustergram_k_max) {
    bad("clustergram k range must satisfy 1 <= clustergram_k_min <= clustergram_k_max");
  }
  if (c.clustergram_reps == 0) bad("clustergram_reps must be at least 1");
  if (c.dead_band < 0.0) bad("dead_band must be >= 0");
  if (c.out_dir.empty()) bad("out_dir must not be empty");
  if (!c.risk_rule.empty()) RiskRule::parse(c.risk_rule);
}

std::string stage_name(Stage stage) {
  switch (stage) {
    case Stage::ValidateInput: return "validate-input";
    case Stage::KSelect: return "kselect";
    case Stage::Fit: return "fit";
    case Stage::Evaluate: return "evaluate";
    case Stage::Profile: return "profile";
    case Stage::ExternalValidate: return "external-validate";
    case Stage::ExportGeoJson: return "export-geojson";
  }
  return "unknown";
}

const std::vector<std::string>& known_outputs() {
  static const std::vector<std::string> outputs = {
      "anova.csv",
      "assignments.csv",
      "boxplot.csv",
      "case_study_ranks.csv",
      "centers.csv",
      "charts/boxplots.svg",
      "charts/clustergram.svg",
      "charts/corr_heatmap.svg",
      "charts/gap_curve.svg",
      "classification.geojson",
      "classification_bbox.geojson",
      "clustergram.csv",
      "corr_matrix.csv",
      "distances.csv",
      "features.csv",
      "fit.json",
      "gap.csv",
      "ingestion_report.csv",
      "k_selection.json",
      "portraits.md",
      "profiles.csv",
      "pruning_log.csv",
      "risk.csv",
      "sizes.csv",
      "validation.md",
      "validation_report.csv",
  };
  return outputs;
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw DataError("DigestFailed", "SHA-256 computation failed");
  }
  std::string out;
  for (unsigned int i = 0; i < length; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) { validate_config(config_); }

unsigned Pipeline::threads() const {
  if (config_.threads > 0) return config_.threads;
  return std::max(1U, std::thread::hardware_concurrency());
}

void Pipeline::write(const std::string& relative, const std::string& content, StageReport& report) const {
  const fs::path path = config_.out_dir / relative;
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("WriteFailed", "cannot write " + path.string());
  out << content;
  if (!out) throw DataError("WriteFailed", "cannot write " + path.string());
  report.outputs.push_back(relative);
}

StageReport Pipeline::run(Stage stage) {
  const auto start = std::chrono::steady_clock::now();
  StageReport report;
  try {
    fs::create_directories(config_.out_dir);
    switch (stage) {
      case Stage::ValidateInput: report = validate_input(); break;
      case Stage::KSelect: report = kselect(); break;
      case Stage::Fit: report = fit(); break;
      case Stage::Evaluate: report = evaluate(); break;
      case Stage::Profile: report = profile(); break;
      case Stage::ExternalValidate: report = external_validate(); break;
      case Stage::ExportGeoJson: report = export_geojson_stage(); break;
    }
  } catch (const Error& e) {
    std::string message = e.what();
    const std::string prefix = e.kind() + ": ";
    if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
    message = stage_name(stage) + ": " + message;
    switch (e.category()) {
      case ErrorCategory::Config: throw ConfigError(e.kind(), message);
      case ErrorCategory::Data: throw DataError(e.kind(), message);
      case ErrorCategory::Numerical: throw NumericalError(e.kind(), message);
    }
    throw;
  } catch (const fs::filesystem_error& e) {
    throw DataError("IoError", stage_name(stage) + ": " + e.what());
  }
  report.stage = stage;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(report);
  return report;
}

std::vector<StageReport> Pipeline::run_all() {
  std::vector<StageReport> reports;
  reports.push_back(run(Stage::ValidateInput));
  const bool select = config_.kselect == KSelectMode::Always || (config_.kselect == KSelectMode::Auto && !config_.k);
  if (select) reports.push_back(run(Stage::KSelect));
  reports.push_back(run(Stage::Fit));
  reports.push_back(run(Stage::Evaluate));
  reports.push_back(run(Stage::Profile));
  if (!config_.performance.empty()) reports.push_back(run(Stage::ExternalValidate));
  if (!config_.boundaries.empty()) reports.push_back(run(Stage::ExportGeoJson));
  return reports;
}

StageReport Pipeline::validate_input() {
  if (config_.districts.empty()) throw ConfigError("MissingInput", "[input] districts is not set");
  if (config_.schema.empty()) throw ConfigError("MissingInput", "[input] schema is not set");
  TableSchema schema = load_schema(config_.schema);
  if (config_.suppression_threshold) schema.suppression_threshold = *config_.suppression_threshold;
  const RawTable raw = load_district_table(config_.districts, schema);
  const RawTable rebuilt = reconstruct_suppressed(raw);
  const RateTable rates = to_percentages(rebuilt).features_only();
  const CorrMatrix corr = correlation_matrix(rates);
  const PruneResult pruned = prune_multicollinear(corr, config_.correlation_threshold, config_.keep);
  const RateTable kept = rates.select(pruned.kept);
  const FeatureMatrix fm = zscore(kept, kept.variables);

  StageReport r;
  write("ingestion_report.csv", ingestion_report_csv(rebuilt), r);
  write("corr_matrix.csv", corr_matrix_csv(corr), r);
  write("pruning_log.csv", pruning_log_csv(pruned), r);
  write("features.csv", features_csv(fm), r);
  write("charts/corr_heatmap.svg", correlation_heatmap_svg(corr), r);
  r.details["districts"] = std::to_string(fm.rows());
  r.details["suppressed_cells"] = std::to_string(raw.suppressed_count());
  r.details["reconstructed_cells"] = std::to_string(rebuilt.reconstructed_count());
  r.details["clamped_cells"] = std::to_string(rebuilt.clamped_count());
  r.details["variables_in"] = std::to_string(rates.variables.size());
  r.details["variables_kept"] = std::to_string(pruned.kept.size());
  r.details["max_abs_r"] = format_fixed(corr.max_off_diagonal_abs(), 4);
  return r;
}

StageReport Pipeline::kselect() {
  const std::uint64_t seed = require_seed(config_, "kselect");
  const FeatureMatrix fm = read_features(config_.out_dir / "features.csv");
  const std::size_t n = fm.rows();

  GapOptions gap_opts;
  gap_opts.k_min = config_.gap_k_min;
  gap_opts.k_max = std::min(config_.gap_k_max, n > 1 ? n - 1 : 1);
  gap_opts.reference_sets = config_.reference_sets;
  gap_opts.reps = config_.gap_reps;
  gap_opts.restarts = config_.kselect_restarts;
  gap_opts.kmeans = kmeans_options(config_);
  gap_opts.threads = threads();
  const GapReport gap = gap_statistic(fm, gap_opts, derive_seed(seed, kGapStream));

  ClustergramOptions cg_opts;
  cg_opts.k_min = config_.clustergram_k_min;
  cg_opts.k_max = std::min(config_.clustergram_k_max, n);
  cg_opts.reps = config_.clustergram_reps;
  cg_opts.restarts = config_.kselect_restarts;
  cg_opts.kmeans = kmeans_options(config_);
  cg_opts.threads = threads();
  const ClustergramTable cg = clustergram(fm, cg_opts, derive_seed(seed, kClustergramStream));

  const KSelection selection = select_k(gap, cg, config_.k);
  StageReport r;
  write("gap.csv", gap_csv(gap), r);
  write("clustergram.csv", clustergram_csv(cg), r);
  write("k_selection.json", k_selection_json(selection), r);
  write("charts/gap_curve.svg", gap_curve_svg(gap), r);
  write("charts/clustergram.svg", clustergram_svg(cg), r);
  r.details["gap_modal_k"] = std::to_string(gap.modal_k);
  r.details["selected_k"] = std::to_string(selection.k);
  return r;
}

StageReport Pipeline::fit() {
  const std::uint64_t seed = require_seed(config_, "fit");
  const FeatureMatrix fm = read_features(config_.out_dir / "features.csv");
  std::size_t k = 0;
  if (config_.k) {
    k = *config_.k;
  } else if (fs::exists(config_.out_dir / "k_selection.json")) {
    try {
      k = Json::parse(read_file(config_.out_dir / "k_selection.json")).at("k").get<std::size_t>();
    } catch (const Json::exception& e) {
      throw DataError("BadIntermediate", std::string("k_selection.json: ") + e.what());
    }
  } else {
    throw ConfigError("NoK", "no k given: pass --k, set [cluster] k, or run kselect first");
  }

  const ClusterModel model = kmeans_restarts(fm, k, config_.restarts, seed, kmeans_options(config_), threads());
  Json summary;
  summary["k"] = model.k;
  summary["seed"] = seed;
  summary["restarts"] = model.restarts;
  summary["wcss"] = model.wcss;
  summary["best_restart"] = model.best_restart;
  summary["best_restart_seed"] = model.run_seed;
  summary["iterations"] = model.iterations;
  summary["converged"] = model.converged;
  summary["unconverged_restarts"] = model.unconverged_restarts;

  StageReport r;
  write("assignments.csv", assignments_csv(fm, model), r);
  write("centers.csv", centers_csv(fm, model), r);
  write("fit.json", summary.dump(2) + "\n", r);
  r.details["k"] = std::to_string(model.k);
  r.details["wcss"] = format_number(model.wcss);
  r.details["unconverged_restarts"] = std::to_string(model.unconverged_restarts);
  return r;
}

StageReport Pipeline::evaluate() {
  const FeatureMatrix fm = read_features(config_.out_dir / "features.csv");
  const ClusterModel model = read_model(config_.out_dir, fm);
  const std::vector<double> distances = distances_to_center(fm, model);
  const BoxplotStats boxes = distance_distribution(fm, model);

  std::string distance_text = csv_line({"district_code", "cluster_id", "distance"});
  for (std::size_t i = 0; i < fm.rows(); ++i) {
    distance_text +=
        csv_line({fm.districts[i].code, std::to_string(model.assignments[i]), format_number(distances[i])});
  }

  StageReport r;
  if (model.k >= 2) {
    const AnovaReport anova = anova_f(fm, model.assignments, model.k);
    write("anova.csv", anova_csv(anova), r);
    r.details["mean_f"] = format_fixed(anova.mean_f, 3);
  }
  write("sizes.csv", sizes_csv(cluster_sizes(model.assignments, model.k)), r);
  write("boxplot.csv", boxplot_csv(boxes), r);
  write("distances.csv", distance_text, r);
  write("charts/boxplots.svg", boxplot_svg(boxes), r);
  return r;
}

StageReport Pipeline::profile() {
  const FeatureMatrix fm = read_features(config_.out_dir / "features.csv");
  const ClusterModel model = read_model(config_.out_dir, fm);
  const RiskRule rule = config_.risk_rule.empty() ? RiskRule::default_rule() : RiskRule::parse(config_.risk_rule);
  const auto profiles = name_clusters(flag_risk(pen_portrait(fm, model, config_.dead_band), rule), config_.names);

  StageReport r;
  write("profiles.csv", profiles_csv(profiles), r);
  write("risk.csv", risk_csv(profiles, rule), r);
  write("portraits.md", portraits_markdown(profiles, rule), r);
  std::size_t flagged = 0;
  std::size_t districts = 0;
  for (const auto& p : profiles) {
    if (!p.at_risk) continue;
    ++flagged;
    districts += p.size;
  }
  r.details["at_risk_clusters"] = std::to_string(flagged);
  r.details["at_risk_districts"] = std::to_string(districts);
  return r;
}

StageReport Pipeline::external_validate() {
  if (config_.performance.empty()) throw ConfigError("MissingInput", "[input] performance is not set");
  const FeatureMatrix fm = read_features(config_.out_dir / "features.csv");
  const ClusterModel model = read_model(config_.out_dir, fm);
  const auto profiles = read_risk(config_.out_dir / "risk.csv");
  const auto names = names_of(profiles);
  std::map<int, bool> at_risk;
  for (const auto& p : profiles) at_risk[p.cluster_id] = p.at_risk;

  const PerformanceJoin joined = join_performance(fm.districts, model.assignments, load_performance(config_.performance));
  const SpeedSummary summary = cluster_speed_summary(joined);

  std::vector<CaseRank> cases;
  StageReport r;
  if (!config_.usage.empty() && !config_.lookup.empty()) {
    std::vector<std::string> case_codes = config_.cases;
    std::map<std::string, int> cluster_of;
    for (std::size_t i = 0; i < fm.rows(); ++i) cluster_of[fm.districts[i].code] = model.assignments[i];
    if (case_codes.empty()) {
      for (std::size_t i = 0; i < fm.rows(); ++i) {
        if (at_risk[model.assignments[i]]) case_codes.push_back(fm.districts[i].code);
      }
      std::sort(case_codes.begin(), case_codes.end());
    }
    cases = usage_ranks(load_usage(config_.usage), load_lookup(config_.lookup), case_codes, cluster_of);
    write("case_study_ranks.csv", case_ranks_csv(cases), r);
  }
  write("validation_report.csv", validation_report_csv(summary, names), r);
  write("validation.md", validation_markdown(summary, cases, names, at_risk), r);
  r.details["matched_districts"] = std::to_string(summary.matched);
  r.details["unmatched_districts"] = std::to_string(joined.unmatched_districts.size());
  r.details["unmatched_records"] = std::to_string(joined.unmatched_records.size());
  return r;
}

StageReport Pipeline::export_geojson_stage() {
  if (config_.boundaries.empty()) throw ConfigError("MissingInput", "[input] boundaries is not set");
  const FeatureMatrix fm = read_features(config_.out_dir / "features.csv");
  const ClusterModel model = read_model(config_.out_dir, fm);
  DistrictAttributes attributes{fm.districts, model.assignments, read_distances(config_.out_dir / "distances.csv", fm)};
  const auto profiles = read_risk(config_.out_dir / "risk.csv");
  const std::string boundaries = read_file(config_.boundaries);

  GeoJsonOptions options;
  options.code_property = config_.code_property;
  const GeoJsonExport full = export_geojson(attributes, profiles, boundaries, options);
  StageReport r;
  write("classification.geojson", full.text, r);
  r.details["features"] = std::to_string(full.features);
  r.details["unmatched_boundaries"] = std::to_string(full.unmatched_boundaries.size());
  r.details["unmatched_districts"] = std::to_string(full.unmatched_districts.size());
  if (!full.unmatched_districts.empty()) {
    std::string list;
    for (const auto& c : full.unmatched_districts) list += (list.empty() ? "" : ",") + c;
    r.details["unmatched_district_codes"] = list;
  }
  if (config_.bbox) {
    options.bbox = config_.bbox;
    const GeoJsonExport subset = export_geojson(attributes, profiles, boundaries, options);
    write("classification_bbox.geojson", subset.text, r);
    r.details["bbox_features"] = std::to_string(subset.features);
  }
  return r;
}

void Pipeline::write_manifest(const StageReport& report) {
  const fs::path path = config_.out_dir / "manifest.json";
  Json stages = Json::object();
  if (fs::exists(path)) {
    try {
      const Json previous = Json::parse(read_file(path));
      if (previous.contains("stages") && previous["stages"].is_object()) stages = previous["stages"];
    } catch (const Json::exception&) {
      stages = Json::object();
    }
  }
  Json entry;
  entry["seconds"] = std::round(report.seconds * 1000.0) / 1000.0;
  Json details = Json::object();
  for (const auto& [key, value] : report.details) details[key] = value;
  entry["details"] = details;
  stages[stage_name(report.stage)] = entry;

  Json ordered = Json::object();
  for (Stage s : {Stage::ValidateInput, Stage::KSelect, Stage::Fit, Stage::Evaluate, Stage::Profile,
                  Stage::ExternalValidate, Stage::ExportGeoJson}) {
    if (stages.contains(stage_name(s))) ordered[stage_name(s)] = stages[stage_name(s)];
  }

  Json outputs = Json::array();
  for (const auto& rel : known_outputs()) {
    const fs::path file = config_.out_dir / rel;
    if (!fs::exists(file)) continue;
    const std::string content = read_file(file);
    outputs.push_back({{"path", rel}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
  }

  Json manifest;
  manifest["tool"] = "geodemo";
  manifest["version"] = GEODEMO_VERSION;
  manifest["config"] = config_snapshot(config_, threads());
  manifest["stages"] = ordered;
  manifest["outputs"] = outputs;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("WriteFailed", "cannot write " + path.string());
  out << manifest.dump(2) << "\n";
}

}  // namespace geodemo
