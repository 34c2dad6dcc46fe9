#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "geodemo/ingest.hpp"

namespace geodemo {

/// Broadband performance for one district, Mbit/s.
struct PerformanceRecord {
  std::string district;
  double upload = 0.0;
  double download = 0.0;
};

/// Internet usage for one NUTS3-style area, percentages.
struct UsageRecord {
  std::string area_code;
  double used_last_3_months = 0.0;
  double never_or_lapsed = 0.0;
};

struct LookupRecord {
  std::string district_code;
  std::string area_code;
  bool same_boundary = false;
};

/// CSV readers. Errors: MissingColumn, BadValue, DuplicateCode.
std::vector<PerformanceRecord> load_performance(const std::filesystem::path& path);
std::vector<UsageRecord> load_usage(const std::filesystem::path& path);
std::vector<LookupRecord> load_lookup(const std::filesystem::path& path);
std::vector<PerformanceRecord> parse_performance(const std::string& csv_text);
std::vector<UsageRecord> parse_usage(const std::string& csv_text);
std::vector<LookupRecord> parse_lookup(const std::string& csv_text);

struct JoinedRow {
  std::string district;
  int cluster_id = 0;
  double upload = 0.0;
  double download = 0.0;
};

struct PerformanceJoin {
  std::vector<JoinedRow> rows;                  // by cluster id, then district code
  std::vector<std::string> unmatched_districts;  // classified, no speed record
  std::vector<std::string> unmatched_records;    // speed record, not classified
  std::vector<std::string> warnings;
};

/// Inner join of classified districts with speed records.
/// Errors: DuplicateCode (either side), DimensionMismatch.
PerformanceJoin join_performance(const std::vector<DistrictCode>& districts, const std::vector<int>& assignments,
                                 const std::vector<PerformanceRecord>& performance);

/// Great Britain reference speeds attached to reports (Mbit/s).
struct ReferenceSpeeds {
  double upload = 10.0;
  double download = 58.0;
};

struct ClusterSpeed {
  int cluster_id = 0;
  std::size_t matched = 0;
  double mean_upload = 0.0;
  double median_upload = 0.0;
  double mean_download = 0.0;
  double median_download = 0.0;
  double upload_deviation = 0.0;  // from the mean over all joined districts
  double download_deviation = 0.0;
};

struct SpeedSummary {
  std::vector<ClusterSpeed> clusters;  // ascending mean upload, ties by id
  std::size_t matched = 0;
  std::size_t unmatched = 0;
  double national_mean_upload = 0.0;
  double national_mean_download = 0.0;
  ReferenceSpeeds reference;
  std::vector<std::string> unmatched_districts;
};

/// Errors: NoJoinedRows.
SpeedSummary cluster_speed_summary(const PerformanceJoin& joined, ReferenceSpeeds reference = {});

/// Rank of every area: usage rank 1 = highest recent-use share, lapsed
/// rank 1 = highest never/lapsed share. Ties go to the lower area code.
struct AreaRank {
  std::string area_code;
  double used_last_3_months = 0.0;
  std::size_t usage_rank = 0;
  double never_or_lapsed = 0.0;
  std::size_t lapsed_rank = 0;
};
std::vector<AreaRank> rank_areas(const std::vector<UsageRecord>& usage);

struct CaseRank {
  std::string district;
  int cluster_id = -1;  // -1 when the district is not classified
  AreaRank area;
  std::size_t area_count = 0;
  bool same_boundary = false;  // false: district and area boundaries differ
};

/// Errors: MissingLookup, MissingArea, DuplicateCode.
std::vector<CaseRank> usage_ranks(const std::vector<UsageRecord>& usage, const std::vector<LookupRecord>& lookup,
                                  const std::vector<std::string>& cases,
                                  const std::map<std::string, int>& cluster_of = {});

std::string validation_report_csv(const SpeedSummary& summary, const std::map<int, std::string>& names = {});
std::string case_ranks_csv(const std::vector<CaseRank>& cases);
std::string validation_markdown(const SpeedSummary& summary, const std::vector<CaseRank>& cases,
                                const std::map<int, std::string>& names = {},
                                const std::map<int, bool>& at_risk = {});

}  // namespace geodemo
