// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "geodemo/cluster.hpp"
#include "geodemo/csv.hpp"
#include "geodemo/evaluate.hpp"
#include "geodemo/ingest.hpp"
#include "geodemo/kselect.hpp"
#include "geodemo/pipeline.hpp"
#include "geodemo/preprocess.hpp"
#include "geodemo/rng.hpp"
#include "geodemo/synthetic.hpp"
#include "geodemo/validate.hpp"
#include "oracles.hpp"

using namespace geodemo;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFixtureSeed = 20200101;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("geodemo_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

oracle::Rows rows_of(const Matrix& m) {
  oracle::Rows out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  }
  return out;
}

std::vector<double> column(const Matrix& m, Eigen::Index j) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, j);
  return out;
}

// Features of the planted fixture after ingest, reconstruction, pruning and z-scoring.
struct PlantedFeatures {
  PlantedData data;
  FeatureMatrix features;
  CorrMatrix corr;
  PruneResult pruned;
  std::vector<int> labels;  // planted archetype per feature row
};

PlantedFeatures planted_features() {
  PlantedFeatures out;
  out.data = planted_data(kFixtureSeed);
  const FixtureFiles files = fixture_files(out.data, kFixtureSeed);
  const RawTable raw = reconstruct_suppressed(parse_district_table(files.districts_csv, parse_schema(files.schema_ini)));
  const RateTable rates = to_percentages(raw).features_only();
  out.corr = correlation_matrix(rates);
  out.pruned = prune_multicollinear(out.corr, 0.7);
  const RateTable kept = rates.select(out.pruned.kept);
  out.features = zscore(kept, kept.variables);
  std::map<std::string, int> label_of;
  for (std::size_t i = 0; i < out.data.districts.size(); ++i) label_of[out.data.districts[i].code] = out.data.labels[i];
  for (const auto& d : out.features.districts) out.labels.push_back(label_of.at(d.code));
  return out;
}

Outcome criterion1() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::size_t agree = 0;
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 9;
    const std::size_t d = 1 + rng() % 3;
    const std::size_t k = 1 + rng() % std::min<std::size_t>(3, n);
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::normal_distribution<double> g(0, 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = g(rng);
    }
    const double best = kmeans_restarts(x, k, 1000, derive_seed(77, static_cast<std::uint64_t>(t))).wcss;
    const double exact = oracle::exhaustive_min_wcss(rows_of(x), k);
    worst = std::max(worst, std::abs(best - exact));
    if (std::abs(best - exact) <= 1e-9) ++agree;
  }
  const double secs = seconds_since(start);
  return {agree >= 99 && secs < 10.0,
          fmt::format("{}/100 instances at the exhaustive optimum (max |diff| {:.3g}), {:.2f} s", agree, worst, secs)};
}

Outcome criterion2() {
  const auto& archetypes = planted_archetypes();
  std::size_t min_separated = 99;
  for (std::size_t a = 0; a < archetypes.size(); ++a) {
    for (std::size_t b = a + 1; b < archetypes.size(); ++b) {
      std::size_t separated = 0;
      for (std::size_t j = 0; j < archetypes[a].mean.size(); ++j) {
        if (std::abs(archetypes[a].mean[j] - archetypes[b].mean[j]) >= 2.0) ++separated;
      }
      min_separated = std::min(min_separated, separated);
    }
  }
  const PlantedFeatures pf = planted_features();
  const ClusterModel m = kmeans_restarts(pf.features, 7, 1000, kFixtureSeed);
  const double ari = adjusted_rand_index(m.assignments, pf.labels);
  std::size_t total = 0;
  for (std::size_t s : m.sizes()) total += s;
  const bool design = archetypes.size() == 7 && pf.data.variables.size() == 11 && min_separated >= 3;
  return {design && ari >= 0.9 && total == 370,
          fmt::format("ARI {:.4f}, sizes sum {}, 11 variables, min coordinates separated by >= 2: {}", ari, total,
                      min_separated)};
}

Outcome criterion3() {
  std::size_t hits = 0;
  double slowest = 0;
  std::map<std::size_t, std::size_t> picks;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const FeatureMatrix fm = make_features(three_blobs(derive_seed(300, s)));
    GapOptions o;
    o.reps = 20;
    o.reference_sets = 20;
    const auto start = std::chrono::steady_clock::now();
    const GapReport r = gap_statistic(fm, o, derive_seed(301, s));
    slowest = std::max(slowest, seconds_since(start));
    ++picks[r.modal_k];
    if (r.modal_k == 3) ++hits;
  }
  std::string dist;
  for (const auto& [k, n] : picks) dist += fmt::format("{}k={}:{}", dist.empty() ? "" : " ", k, n);
  return {hits >= 18 && slowest < 5.0,
          fmt::format("modal k = 3 in {}/20 seeds ({}), slowest run {:.2f} s", hits, dist, slowest)};
}

Outcome criterion4() {
  Matrix z(4, 1);
  z << 0, 1, 2, 3;
  const double f = anova_f(make_features(z), {0, 0, 1, 1}, 2).rows[0].f;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 1);
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 2 + rng() % 3;
    const std::size_t n = k + 2 + rng() % 10;
    const std::size_t d = 1 + rng() % 3;
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::vector<int> groups(n);
    for (std::size_t i = 0; i < n; ++i) {
      groups[i] = static_cast<int>(i < k ? i : rng() % k);
      for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g(rng) + 0.5 * groups[i];
    }
    const AnovaReport r = anova_f(make_features(x), groups, k);
    for (std::size_t j = 0; j < d; ++j) {
      const auto ref = oracle::anova(column(x, static_cast<Eigen::Index>(j)), groups, k);
      worst = std::max({worst, std::abs(r.rows[j].f - ref.f), std::abs(r.rows[j].between_ss - ref.between_ss),
                        std::abs(r.rows[j].within_ss - ref.within_ss)});
    }
  }
  return {std::abs(f - 8.0) <= 1e-12 && worst <= 1e-12,
          fmt::format("F = {} on the hand fixture, max oracle deviation {:.3g} over 50 instances", f, worst)};
}

Outcome criterion5() {
  std::mt19937_64 rng(5);
  double worst_mean = 0, worst_sd = 0, worst_r = 0, worst_pruned = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 10 + rng() % 90;
    const std::size_t d = 2 + rng() % 10;
    RateTable rates;
    rates.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    std::uniform_real_distribution<double> u(0, 100);
    for (std::size_t j = 0; j < d; ++j) {
      rates.variables.push_back({"v" + std::to_string(j), Domain::Demographic, "", Polarity::AsIs});
      rates.is_feature.push_back(true);
    }
    for (std::size_t i = 0; i < n; ++i) {
      rates.districts.push_back({fmt::format("E06{:06d}", i), "d"});
      const double shared = u(rng);
      for (std::size_t j = 0; j < d; ++j) {
        const double w = static_cast<double>(j % 3) / 2.0;
        rates.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w * shared + (1 - w) * u(rng);
      }
    }
    const FeatureMatrix fm = zscore(rates, rates.variables);
    const CorrMatrix corr = correlation_matrix(rates);
    for (std::size_t j = 0; j < d; ++j) {
      const auto zc = column(fm.z, static_cast<Eigen::Index>(j));
      worst_mean = std::max(worst_mean, std::abs(static_cast<double>(oracle::mean(zc))));
      worst_sd = std::max(worst_sd, std::abs(oracle::sample_sd(zc) - 1.0));
      for (std::size_t l = 0; l < d; ++l) {
        const double ref = oracle::pearson(column(rates.values, static_cast<Eigen::Index>(j)),
                                           column(rates.values, static_cast<Eigen::Index>(l)));
        worst_r = std::max(worst_r, std::abs(corr.r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) - ref));
      }
    }
    const PruneResult p = prune_multicollinear(corr, 0.7);
    const CorrMatrix after = correlation_matrix(rates.select(p.kept));
    worst_pruned = std::max(worst_pruned, after.max_off_diagonal_abs());
  }
  const PlantedFeatures pf = planted_features();
  const bool fixture = pf.pruned.kept.size() == 11 && pf.pruned.log.empty();
  const bool pass = worst_mean < 1e-10 && worst_sd < 1e-10 && worst_r <= 1e-12 && worst_pruned <= 0.7 && fixture;
  return {pass, fmt::format("max |mean| {:.2g}, max |sd-1| {:.2g}, max r error {:.2g}, max |r| after pruning "
                            "{:.4f}, fixture {} in / {} out (max |r| {:.4f})",
                            worst_mean, worst_sd, worst_r, worst_pruned, pf.corr.variables.size(),
                            pf.pruned.kept.size(), pf.corr.max_off_diagonal_abs())};
}

Outcome criterion6() {
  const std::string schema_text =
      "[table]\nsuppression_threshold = 0\n[group.g]\ntotal = total\n"
      "[measure.a]\nkind = count\ngroup = g\ndenominator = total\n"
      "[measure.b]\nkind = count\ngroup = g\ndenominator = total\n"
      "[measure.c]\nkind = count\ngroup = g\ndenominator = total\n"
      "[measure.d]\nkind = count\ngroup = g\ndenominator = total\n"
      "[measure.e]\nkind = count\ngroup = g\ndenominator = total\n";
  const TableSchema schema = parse_schema(schema_text);
  std::mt19937_64 rng(6);
  double worst = 0;
  std::size_t single_cases = 0, single_exact = 0, suppressed_total = 0;
  for (int t = 0; t < 200; ++t) {
    std::string csv = "code,name,a,b,c,d,e,total\n";
    std::vector<double> totals;
    std::vector<std::vector<double>> known_values;
    std::vector<std::size_t> suppressed_counts;
    for (int r = 0; r < 10; ++r) {
      std::vector<double> cells(5);
      double total = 0;
      for (auto& c : cells) {
        c = static_cast<double>(rng() % 100000) / 8.0;
        total += c;
      }
      std::vector<std::size_t> idx{0, 1, 2, 3, 4};
      std::shuffle(idx.begin(), idx.end(), rng);
      const std::size_t missing = rng() % 4;
      std::set<std::size_t> hidden(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(missing));
      csv += fmt::format("E06{:06d},d", t * 10 + r);
      std::vector<double> known;
      for (std::size_t j = 0; j < 5; ++j) {
        if (hidden.count(j)) {
          csv += ",!";
        } else {
          csv += "," + format_number(cells[j]);
          known.push_back(cells[j]);
        }
      }
      csv += "," + format_number(total) + "\n";
      totals.push_back(total);
      known_values.push_back(known);
      suppressed_counts.push_back(missing);
      suppressed_total += missing;
    }
    const RawTable out = reconstruct_suppressed(parse_district_table(csv, schema));
    for (std::size_t r = 0; r < 10; ++r) {
      double sum = 0;
      for (const auto& cell : out.cells[r]) sum += *cell.value;
      worst = std::max(worst, std::abs(sum - totals[r]));
      if (suppressed_counts[r] == 1) {
        ++single_cases;
        double known = 0;
        for (double v : known_values[r]) known += v;
        for (const auto& cell : out.cells[r]) {
          if (cell.reconstructed && *cell.value == totals[r] - known) ++single_exact;
        }
      }
    }
  }
  return {worst <= 1e-9 && single_cases > 0 && single_exact == single_cases,
          fmt::format("max |group sum - total| {:.3g} over 2000 rows ({} suppressed cells); single-missing exact in "
                      "{}/{}",
                      worst, suppressed_total, single_exact, single_cases)};
}

Outcome criterion7() {
  const BoxplotStats b =
      boxplot_from_distances({1, 2, 3, 4, 100}, {0, 0, 0, 0, 0}, 1, {"d1", "d2", "d3", "d4", "d5"});
  const ClusterBox& c = b.clusters.at(0);
  const bool pass = c.quartiles.q1 == 2.0 && c.quartiles.median == 3.0 && c.quartiles.q3 == 4.0 &&
                    c.outliers.size() == 1 && c.outliers[0].distance == 100.0;
  return {pass, fmt::format("Q1 {}, median {}, Q3 {}, upper fence {}, outliers {}", c.quartiles.q1, c.quartiles.median,
                            c.quartiles.q3, c.upper_fence, c.outliers.size())};
}

std::map<std::string, std::string> output_digests(const fs::path& out) {
  std::map<std::string, std::string> digests;
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), out).generic_string();
    if (rel == "manifest.json") continue;
    digests[rel] = sha256_hex(read_text_file(entry.path()));
  }
  return digests;
}

Outcome criterion8() {
#ifdef GEODEMO_CLI_PATH
  const fs::path root = scratch("determinism");
  write_fixture(root / "data", fixture_files(planted_data(kFixtureSeed), kFixtureSeed));
  const fs::path config = root / "data" / "config.ini";
  std::string text = read_text_file(config);
  const auto set = [&](const std::string& from, const std::string& to) {
    text.replace(text.find(from), from.size(), to);
  };
  set("gap_reps = 500", "gap_reps = 5");
  set("clustergram_reps = 100", "clustergram_reps = 5");
  {
    std::FILE* f = std::fopen(config.string().c_str(), "wb");
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
  }
  std::map<std::string, std::string> digests[2];
  const unsigned threads[2] = {1, 4};
  for (int run = 0; run < 2; ++run) {
    const fs::path out = root / ("out" + std::to_string(run));
    const std::string cmd = fmt::format("\"{}\" run-all --config \"{}\" --threads {} --out-dir \"{}\" > /dev/null",
                                        GEODEMO_CLI_PATH, config.string(), threads[run], out.string());
    if (std::system(cmd.c_str()) != 0) return {false, "run-all exited with an error"};
    digests[run] = output_digests(out);
    const auto manifest = nlohmann::json::parse(read_text_file(out / "manifest.json"));
    for (const auto& e : manifest["outputs"]) {
      if (digests[run][e["path"].get<std::string>()] != e["sha256"].get<std::string>()) {
        return {false, "manifest digest does not match " + e["path"].get<std::string>()};
      }
    }
    if (manifest["outputs"].size() != digests[run].size()) return {false, "output not listed in the manifest"};
  }
  std::size_t svgs = 0;
  for (const auto& [path, digest] : digests[0]) svgs += path.ends_with(".svg");
  return {digests[0] == digests[1] && svgs == 4,
          fmt::format("{} files ({} SVG) identical between --threads 1 and --threads 4", digests[0].size(), svgs)};
#else
  return {false, "CLI not built"};
#endif
}

Outcome criterion9() {
  std::mt19937_64 rng(9);
  double worst = 0;
  bool permutations = true;
  bool ties = true;
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 1 + rng() % 6;
    std::vector<DistrictCode> districts;
    std::vector<int> assignments;
    std::vector<PerformanceRecord> perf;
    for (std::size_t i = 0; i < 50; ++i) {
      districts.push_back({fmt::format("E06{:06d}", i), "d"});
      assignments.push_back(static_cast<int>(i < k ? i : rng() % k));
      if (rng() % 10 != 0 || i < k) {
        perf.push_back({districts.back().code, static_cast<double>(rng() % 400) / 8.0,
                        static_cast<double>(rng() % 1600) / 8.0});
      }
    }
    const SpeedSummary s = cluster_speed_summary(join_performance(districts, assignments, perf));
    std::map<int, std::vector<double>> up, down;
    std::map<std::string, std::size_t> row;
    for (std::size_t i = 0; i < districts.size(); ++i) row[districts[i].code] = i;
    for (const auto& p : perf) {
      up[assignments[row[p.district]]].push_back(p.upload);
      down[assignments[row[p.district]]].push_back(p.download);
    }
    for (const auto& c : s.clusters) {
      worst = std::max({worst, std::abs(c.mean_upload - static_cast<double>(oracle::mean(up[c.cluster_id]))),
                        std::abs(c.median_upload - oracle::median(up[c.cluster_id])),
                        std::abs(c.mean_download - static_cast<double>(oracle::mean(down[c.cluster_id]))),
                        std::abs(c.median_download - oracle::median(down[c.cluster_id]))});
    }

    std::vector<UsageRecord> usage;
    const std::size_t areas = 5 + rng() % 40;
    for (std::size_t a = 0; a < areas; ++a) {
      usage.push_back({fmt::format("A{:03d}", (a * 37) % 1000), static_cast<double>(80 + rng() % 10),
                       static_cast<double>(rng() % 10)});
    }
    const auto ranks = rank_areas(usage);
    std::set<std::size_t> u, l;
    for (const auto& r : ranks) {
      u.insert(r.usage_rank);
      l.insert(r.lapsed_rank);
    }
    permutations = permutations && u.size() == areas && l.size() == areas && *u.begin() == 1 && *u.rbegin() == areas &&
                   *l.begin() == 1 && *l.rbegin() == areas;
    for (const auto& a : ranks) {
      for (const auto& b : ranks) {
        if (a.usage_rank < b.usage_rank) {
          ties = ties && (a.used_last_3_months > b.used_last_3_months ||
                          (a.used_last_3_months == b.used_last_3_months && a.area_code < b.area_code));
        }
        if (a.lapsed_rank < b.lapsed_rank) {
          ties = ties && (a.never_or_lapsed > b.never_or_lapsed ||
                          (a.never_or_lapsed == b.never_or_lapsed && a.area_code < b.area_code));
        }
      }
    }
  }
  const std::string header = case_ranks_csv({});
  const bool golden = header.find("usage_rank_1_is_most_usage") != std::string::npos &&
                      header.find("lapsed_rank_1_is_most_lapsed") != std::string::npos;
  return {worst <= 1e-9 && permutations && ties && golden,
          fmt::format("max speed deviation {:.3g}; ranks are permutations: {}; tie-break by area code holds: {}; "
                      "direction conventions in header: {}",
                      worst, permutations, ties, golden)};
}

Outcome criterion10() {
  const fs::path root = scratch("protocol");
  const PlantedData data = planted_data(kFixtureSeed);
  write_fixture(root / "data", fixture_files(data, kFixtureSeed));
  PipelineConfig config = load_config(root / "data" / "config.ini");
  config.out_dir = root / "out";
  const bool protocol = config.restarts == 1000 && config.gap_reps == 500 && config.reference_sets == 50 &&
                        config.clustergram_reps == 100 && config.correlation_threshold == 0.7 && config.k == 7u;

  const auto start = std::chrono::steady_clock::now();
  Pipeline pipeline(config);
  const auto reports = pipeline.run_all();
  const double secs = seconds_since(start);

  std::map<std::string, int> cluster_of;
  const CsvDocument assignments = read_csv(root / "out" / "assignments.csv");
  for (const auto& row : assignments.rows) cluster_of[row[0]] = std::stoi(row[1]);
  const CsvDocument risk = read_csv(root / "out" / "risk.csv");
  std::set<int> flagged;
  std::size_t flagged_districts = 0;
  for (const auto& row : risk.rows) {
    if (row[*risk.column("at_risk")] == "true") {
      flagged.insert(std::stoi(row[0]));
      flagged_districts += std::stoul(row[*risk.column("size")]);
    }
  }
  // Map every flagged cluster to the planted archetype of its members.
  std::set<std::size_t> flagged_archetypes;
  bool pure = true;
  for (int c : flagged) {
    std::set<int> labels;
    for (std::size_t i = 0; i < data.districts.size(); ++i) {
      if (cluster_of[data.districts[i].code] == c) labels.insert(data.labels[i]);
    }
    pure = pure && labels.size() == 1;
    for (int l : labels) flagged_archetypes.insert(static_cast<std::size_t>(l));
  }
  std::set<std::size_t> expected;
  std::size_t expected_districts = 0;
  for (std::size_t a = 0; a < planted_archetypes().size(); ++a) {
    if (planted_archetypes()[a].at_risk) {
      expected.insert(a);
      expected_districts += planted_archetypes()[a].size;
    }
  }
  const bool pass = protocol && secs < 60.0 && pure && flagged_archetypes == expected && flagged_districts == 19 &&
                    expected_districts == 19;
  return {pass, fmt::format("{:.1f} s for {} stages on {} hardware thread(s); {} clusters flagged covering {} "
                            "districts, matching the {} planted at-risk archetypes: {}",
                            secs, reports.size(), pipeline.threads(), flagged.size(), flagged_districts,
                            expected.size(), flagged_archetypes == expected && pure)};
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                          criterion6, criterion7, criterion8, criterion9, criterion10};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %zu: %s - %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
