#include "geodemo/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "geodemo/csv.hpp"
#include "geodemo/error.hpp"
#include "geodemo/evaluate.hpp"

namespace geodemo {

namespace {

struct Columns {
  const CsvDocument& doc;
  std::vector<std::size_t> index;

  Columns(const CsvDocument& d, std::initializer_list<const char*> names) : doc(d) {
    for (const char* name : names) {
      auto idx = doc.column(name);
      if (!idx) throw DataError("MissingColumn", std::string("column '") + name + "' not in header");
      index.push_back(*idx);
    }
  }

  std::string text(std::size_t row, std::size_t field) const {
    const auto& r = doc.rows[row];
    if (index[field] >= r.size()) {
      throw DataError("BadValue", "line " + std::to_string(doc.row_lines[row]) + ": too few fields");
    }
    return trim(r[index[field]]);
  }

  double number(std::size_t row, std::size_t field, double lo, double hi) const {
    const std::string raw = text(row, field);
    auto v = parse_number(raw);
    if (!v || !std::isfinite(*v) || *v < lo || *v > hi) {
      throw DataError("BadValue", "line " + std::to_string(doc.row_lines[row]) + ": '" + raw +
                                      "' outside [" + format_number(lo) + ", " + format_number(hi) + "]");
    }
    return *v;
  }
};

void require_unique(std::set<std::string>& seen, const std::string& code, const char* what) {
  if (code.empty()) throw DataError("BadValue", std::string("empty ") + what + " code");
  if (!seen.insert(code).second) throw DataError("DuplicateCode", std::string(what) + " code '" + code + "' repeated");
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return type7_quantile(v, 0.5);
}

}  // namespace

std::vector<PerformanceRecord> parse_performance(const std::string& csv_text) {
  const CsvDocument doc = parse_csv(csv_text);
  const Columns cols(doc, {"code", "upload_mbits", "download_mbits"});
  const double inf = std::numeric_limits<double>::max();
  std::vector<PerformanceRecord> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    PerformanceRecord rec{cols.text(r, 0), cols.number(r, 1, 0.0, inf), cols.number(r, 2, 0.0, inf)};
    require_unique(seen, rec.district, "performance");
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<UsageRecord> parse_usage(const std::string& csv_text) {
  const CsvDocument doc = parse_csv(csv_text);
  const Columns cols(doc, {"area_code", "used_pct", "lapsed_pct"});
  std::vector<UsageRecord> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    UsageRecord rec{cols.text(r, 0), cols.number(r, 1, 0.0, 100.0), cols.number(r, 2, 0.0, 100.0)};
    require_unique(seen, rec.area_code, "usage area");
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<LookupRecord> parse_lookup(const std::string& csv_text) {
  const CsvDocument doc = parse_csv(csv_text);
  const Columns cols(doc, {"district_code", "area_code", "same_boundary"});
  std::vector<LookupRecord> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const std::string flag = cols.text(r, 2);
    bool same;
    if (flag == "true" || flag == "1" || flag == "yes") {
      same = true;
    } else if (flag == "false" || flag == "0" || flag == "no") {
      same = false;
    } else {
      throw DataError("BadValue", "line " + std::to_string(doc.row_lines[r]) + ": same_boundary must be a boolean");
    }
    LookupRecord rec{cols.text(r, 0), cols.text(r, 1), same};
    require_unique(seen, rec.district_code, "lookup district");
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<PerformanceRecord> load_performance(const std::filesystem::path& path) {
  return parse_performance(read_text_file(path));
}
std::vector<UsageRecord> load_usage(const std::filesystem::path& path) { return parse_usage(read_text_file(path)); }
std::vector<LookupRecord> load_lookup(const std::filesystem::path& path) { return parse_lookup(read_text_file(path)); }

PerformanceJoin join_performance(const std::vector<DistrictCode>& districts, const std::vector<int>& assignments,
                                 const std::vector<PerformanceRecord>& performance) {
  if (districts.size() != assignments.size()) {
    throw DataError("DimensionMismatch", "one assignment per district required");
  }
  std::map<std::string, int> cluster_of;
  for (std::size_t i = 0; i < districts.size(); ++i) {
    if (!cluster_of.emplace(districts[i].code, assignments[i]).second) {
      throw DataError("DuplicateCode", "classified district '" + districts[i].code + "' repeated");
    }
  }
  std::map<std::string, const PerformanceRecord*> speed_of;
  for (const auto& rec : performance) {
    if (!speed_of.emplace(rec.district, &rec).second) {
      throw DataError("DuplicateCode", "performance code '" + rec.district + "' repeated");
    }
  }

  PerformanceJoin join;
  for (const auto& [code, cluster] : cluster_of) {
    auto it = speed_of.find(code);
    if (it == speed_of.end()) {
      join.unmatched_districts.push_back(code);
    } else {
      join.rows.push_back({code, cluster, it->second->upload, it->second->download});
    }
  }
  for (const auto& [code, rec] : speed_of) {
    if (!cluster_of.count(code)) join.unmatched_records.push_back(code);
  }
  std::stable_sort(join.rows.begin(), join.rows.end(),
                   [](const JoinedRow& a, const JoinedRow& b) { return a.cluster_id < b.cluster_id; });
  if (performance.empty()) join.warnings.push_back("performance table is empty; no district matched");
  if (!join.unmatched_districts.empty()) {
    join.warnings.push_back(std::to_string(join.unmatched_districts.size()) +
                            " classified districts have no performance record");
  }
  return join;
}

SpeedSummary cluster_speed_summary(const PerformanceJoin& joined, ReferenceSpeeds reference) {
  if (joined.rows.empty()) throw DataError("NoJoinedRows", "no district matched the performance data");
  SpeedSummary summary;
  summary.reference = reference;
  summary.matched = joined.rows.size();
  summary.unmatched = joined.unmatched_districts.size();
  summary.unmatched_districts = joined.unmatched_districts;

  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_cluster;
  std::vector<double> all_up;
  std::vector<double> all_down;
  for (const auto& row : joined.rows) {
    by_cluster[row.cluster_id].first.push_back(row.upload);
    by_cluster[row.cluster_id].second.push_back(row.download);
    all_up.push_back(row.upload);
    all_down.push_back(row.download);
  }
  summary.national_mean_upload = mean_of(all_up);
  summary.national_mean_download = mean_of(all_down);
  for (const auto& [id, speeds] : by_cluster) {
    ClusterSpeed c;
    c.cluster_id = id;
    c.matched = speeds.first.size();
    c.mean_upload = mean_of(speeds.first);
    c.median_upload = median_of(speeds.first);
    c.mean_download = mean_of(speeds.second);
    c.median_download = median_of(speeds.second);
    c.upload_deviation = c.mean_upload - summary.national_mean_upload;
    c.download_deviation = c.mean_download - summary.national_mean_download;
    summary.clusters.push_back(c);
  }
  std::stable_sort(summary.clusters.begin(), summary.clusters.end(),
                   [](const ClusterSpeed& a, const ClusterSpeed& b) { return a.mean_upload < b.mean_upload; });
  return summary;
}

std::vector<AreaRank> rank_areas(const std::vector<UsageRecord>& usage) {
  std::set<std::string> seen;
  for (const auto& u : usage) require_unique(seen, u.area_code, "usage area");
  std::vector<AreaRank> ranks;
  for (const auto& u : usage) ranks.push_back({u.area_code, u.used_last_3_months, 0, u.never_or_lapsed, 0});

  std::vector<std::size_t> order(ranks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto assign = [&](auto value, auto rank_field) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (value(ranks[a]) != value(ranks[b])) return value(ranks[a]) > value(ranks[b]);
      return ranks[a].area_code < ranks[b].area_code;
    });
    for (std::size_t pos = 0; pos < order.size(); ++pos) ranks[order[pos]].*rank_field = pos + 1;
  };
  assign([](const AreaRank& r) { return r.used_last_3_months; }, &AreaRank::usage_rank);
  assign([](const AreaRank& r) { return r.never_or_lapsed; }, &AreaRank::lapsed_rank);
  std::sort(ranks.begin(), ranks.end(), [](const AreaRank& a, const AreaRank& b) { return a.area_code < b.area_code; });
  return ranks;
}

std::vector<CaseRank> usage_ranks(const std::vector<UsageRecord>& usage, const std::vector<LookupRecord>& lookup,
                                  const std::vector<std::string>& cases, const std::map<std::string, int>& cluster_of) {
  const auto ranks = rank_areas(usage);
  std::map<std::string, const AreaRank*> rank_of;
  for (const auto& r : ranks) rank_of[r.area_code] = &r;
  std::map<std::string, const LookupRecord*> area_of;
  for (const auto& l : lookup) {
    if (!area_of.emplace(l.district_code, &l).second) {
      throw DataError("DuplicateCode", "lookup district '" + l.district_code + "' repeated");
    }
  }

  std::vector<CaseRank> out;
  for (const auto& district : cases) {
    auto l = area_of.find(district);
    if (l == area_of.end()) throw DataError("MissingLookup", "case district '" + district + "' not in lookup");
    auto r = rank_of.find(l->second->area_code);
    if (r == rank_of.end()) {
      throw DataError("MissingArea", "area '" + l->second->area_code + "' not in usage data");
    }
    CaseRank c;
    c.district = district;
    auto cl = cluster_of.find(district);
    c.cluster_id = cl == cluster_of.end() ? -1 : cl->second;
    c.area = *r->second;
    c.area_count = ranks.size();
    c.same_boundary = l->second->same_boundary;
    out.push_back(std::move(c));
  }
  return out;
}

std::string validation_report_csv(const SpeedSummary& summary, const std::map<int, std::string>& names) {
  std::string out = csv_line({"cluster_id", "cluster_name", "matched", "mean_upload_mbits", "median_upload_mbits",
                              "mean_download_mbits", "median_download_mbits", "upload_deviation_mbits",
                              "download_deviation_mbits"});
  for (const auto& c : summary.clusters) {
    auto name = names.find(c.cluster_id);
    out += csv_line({std::to_string(c.cluster_id), name == names.end() ? "" : name->second, std::to_string(c.matched),
                     format_number(c.mean_upload), format_number(c.median_upload), format_number(c.mean_download),
                     format_number(c.median_download), format_number(c.upload_deviation),
                     format_number(c.download_deviation)});
  }
  out += csv_line({"all", "joined districts", std::to_string(summary.matched),
                   format_number(summary.national_mean_upload), "", format_number(summary.national_mean_download), "",
                   "0", "0"});
  out += csv_line({"reference", "Great Britain average", "", format_number(summary.reference.upload), "",
                   format_number(summary.reference.download), "", "", ""});
  return out;
}

std::string case_ranks_csv(const std::vector<CaseRank>& cases) {
  std::string out = csv_line({"district_code", "cluster_id", "area_code", "used_last_3_months_pct",
                              "usage_rank_1_is_most_usage", "never_or_lapsed_pct", "lapsed_rank_1_is_most_lapsed",
                              "areas_ranked", "same_boundary"});
  for (const auto& c : cases) {
    out += csv_line({c.district, c.cluster_id < 0 ? "" : std::to_string(c.cluster_id), c.area.area_code,
                     format_number(c.area.used_last_3_months), std::to_string(c.area.usage_rank),
                     format_number(c.area.never_or_lapsed), std::to_string(c.area.lapsed_rank),
                     std::to_string(c.area_count), c.same_boundary ? "true" : "false"});
  }
  return out;
}

std::string validation_markdown(const SpeedSummary& summary, const std::vector<CaseRank>& cases,
                                const std::map<int, std::string>& names, const std::map<int, bool>& at_risk) {
  auto label = [&](int id) {
    auto it = names.find(id);
    return it == names.end() ? "Cluster " + std::to_string(id + 1) : it->second;
  };
  auto risk = [&](int id) {
    auto it = at_risk.find(id);
    return it != at_risk.end() && it->second ? " (at risk)" : "";
  };
  std::string out = "# External validation\n\n## Broadband performance\n\n";
  out += "Matched districts: " + std::to_string(summary.matched) + "; unmatched: " +
         std::to_string(summary.unmatched) + ".\n";
  out += "Mean over matched districts: upload " + format_fixed(summary.national_mean_upload, 2) +
         " Mbit/s, download " + format_fixed(summary.national_mean_download, 2) + " Mbit/s (reference " +
         format_fixed(summary.reference.upload, 2) + " / " + format_fixed(summary.reference.download, 2) + ").\n\n";
  out += "| Cluster | Districts | Mean upload | Mean download |\n|---|---|---|---|\n";
  for (const auto& c : summary.clusters) {
    out += "| " + label(c.cluster_id) + risk(c.cluster_id) + " | " + std::to_string(c.matched) + " | " +
           format_fixed(c.mean_upload, 2) + " | " + format_fixed(c.mean_download, 2) + " |\n";
  }
  if (!summary.clusters.empty()) {
    out += "\nLowest mean upload: " + label(summary.clusters.front().cluster_id) +
           ". Highest: " + label(summary.clusters.back().cluster_id) + ".\n";
  }
  if (!cases.empty()) {
    out += "\n## Case studies\n\nUsage rank 1 = highest share online in the last 3 months; lapsed rank 1 = "
           "highest share never or not recently online. Ranks are out of " +
           std::to_string(cases.front().area_count) + " areas.\n\n";
    out += "| District | Cluster | Area | Usage rank | Lapsed rank | Comparable |\n|---|---|---|---|---|---|\n";
    for (const auto& c : cases) {
      out += "| " + c.district + " | " + (c.cluster_id < 0 ? std::string("-") : label(c.cluster_id) + risk(c.cluster_id)) +
             " | " + c.area.area_code + " | " + std::to_string(c.area.usage_rank) + " | " +
             std::to_string(c.area.lapsed_rank) + " | " + (c.same_boundary ? "yes" : "no: boundaries differ") + " |\n";
    }
  }
  return out;
}

}  // namespace geodemo
