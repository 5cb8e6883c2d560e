#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnmap/csv.hpp"
#include "vulnmap/error.hpp"
#include "vulnmap/match.hpp"
#include "vulnmap/records.hpp"

namespace vulnmap {

inline constexpr std::string_view kOthersLabel = "Others";
inline constexpr std::string_view kUnspecifiedLabel = "(unspecified)";

struct ReportRow {
  std::vector<std::string> keys;
  std::uint64_t count = 0;
  std::optional<std::int64_t> share_hundredths; // 3945 means 39.45 %

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct Report {
  std::string title;
  std::vector<std::string> group_columns;
  std::vector<ReportRow> rows;
  bool has_share = false;
  std::map<std::string, std::string> metadata;
};

inline std::string format_share(std::int64_t hundredths) {
  const bool neg = hundredths < 0;
  if (neg) hundredths = -hundredths;
  auto frac = std::to_string(hundredths % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return (neg ? "-" : "") + std::to_string(hundredths / 100) + "." + frac;
}

namespace detail {

/// Percentages in hundredths, each rounded half-to-even. If the rounded
/// shares drift more than 0.01 from 100, the rows with the largest
/// rounding error are nudged by 0.01 until the drift is at most 0.01.
inline std::vector<std::int64_t> percent_shares(const std::vector<std::uint64_t>& counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  std::vector<std::int64_t> shares(counts.size(), 0);
  if (total == 0) return shares;

  const auto T = static_cast<__int128>(total);
  std::vector<__int128> residual(counts.size()); // (exact - rounded) * total
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto scaled = static_cast<__int128>(counts[i]) * 10000;
    auto q = scaled / T;
    const auto r = scaled % T;
    if (2 * r > T || (2 * r == T && q % 2 == 1)) ++q;
    shares[i] = static_cast<std::int64_t>(q);
    residual[i] = scaled - q * T;
    sum += shares[i];
  }
  while (sum > 10001 || sum < 9999) {
    const bool too_high = sum > 10001;
    std::size_t pick = 0;
    for (std::size_t i = 1; i < counts.size(); ++i) {
      if (too_high ? residual[i] < residual[pick] : residual[i] > residual[pick]) pick = i;
    }
    shares[pick] += too_high ? -1 : 1;
    residual[pick] += too_high ? T : -T;
    sum += too_high ? -1 : 1;
  }
  return shares;
}

using Counts = std::map<std::vector<std::string>, std::uint64_t>;

inline std::vector<ReportRow> ranked(const Counts& counts) {
  std::vector<ReportRow> rows;
  rows.reserve(counts.size());
  for (const auto& [keys, n] : counts) rows.push_back({keys, n, std::nullopt});
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.keys < b.keys;
  });
  return rows;
}

// Top-k ranked rows plus an Others row (only when something is folded in),
// with shares over everything that was ranked.
inline std::vector<ReportRow> top_k_with_others(const Counts& counts, std::size_t k) {
  auto rows = ranked(counts);
  if (rows.size() > k) {
    ReportRow others{{std::string(kOthersLabel)}, 0, std::nullopt};
    for (std::size_t i = k; i < rows.size(); ++i) others.count += rows[i].count;
    rows.resize(k);
    rows.push_back(std::move(others));
  }
  std::vector<std::uint64_t> c;
  for (const auto& r : rows) c.push_back(r.count);
  const auto shares = percent_shares(c);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].share_hundredths = shares[i];
  return rows;
}

inline std::string year_key(int year) { return std::to_string(year); }

} // namespace detail

/// Projects per platform: top-k platforms, then Others.
inline Report platform_project_share(const std::vector<PackageRecord>& packages, std::size_t k = 7) {
  detail::Counts counts;
  for (const auto& p : packages) ++counts[{p.platform}];
  Report r{"platform_project_share", {"platform"}, detail::top_k_with_others(counts, k), true, {}};
  r.metadata["top_k"] = std::to_string(k);
  r.metadata["total_packages"] = std::to_string(packages.size());
  return r;
}

/// Packages per license label: top-k, then Others. Empty labels are
/// reported as "(unspecified)" after the ranked rows, with no share.
inline Report license_distribution(const std::vector<PackageRecord>& packages, std::size_t k = 7) {
  detail::Counts counts;
  std::uint64_t unspecified = 0;
  for (const auto& p : packages) {
    if (p.license.empty()) ++unspecified;
    else ++counts[{p.license}];
  }
  Report r{"license_distribution", {"license"}, detail::top_k_with_others(counts, k), true, {}};
  if (unspecified > 0) r.rows.push_back({{std::string(kUnspecifiedLabel)}, unspecified, std::nullopt});
  r.metadata["top_k"] = std::to_string(k);
  r.metadata["share_base"] = "packages with a license label";
  return r;
}

inline Report versions_per_year(const std::vector<VersionRecord>& versions) {
  detail::Counts counts;
  for (const auto& v : versions) ++counts[{v.platform, detail::year_key(v.published.year)}];
  return Report{"versions_per_year", {"platform", "year"}, detail::ranked(counts), false, {}};
}

inline Report cve_per_year(const std::vector<CveRecord>& cves) {
  detail::Counts counts;
  for (const auto& c : cves) ++counts[{detail::year_key(attributed_year(c))}];
  Report r{"cve_per_year", {"year"}, detail::ranked(counts), false, {}};
  r.metadata["year_source"] = "published date, else CVE id";
  return r;
}

/// Distinct package keys per (strategy label, platform).
inline Report vulnerable_package_count(const std::map<std::string, std::vector<MappingResult>, std::less<>>& mappings) {
  std::map<std::pair<std::string, std::string>, std::set<std::string>> distinct;
  Report r{"vulnerable_package_count", {"strategy", "platform"}, {}, false, {}};
  for (const auto& [label, results] : mappings) {
    for (const auto& m : results) distinct[{label, m.platform}].insert(m.package_key);
    r.metadata["pairs." + label] = std::to_string(results.size());
  }
  detail::Counts counts;
  for (const auto& [key, keys] : distinct) counts[{key.first, key.second}] = keys.size();
  r.rows = detail::ranked(counts);
  r.metadata["count"] = "distinct package_key";
  return r;
}

/// Distinct mapped CVE ids per (platform, year).
inline Report mapped_cve_per_year(const std::vector<MappingResult>& mappings, const std::vector<CveRecord>& cves) {
  std::map<std::string, int> year_of;
  for (const auto& c : cves) year_of.emplace(c.cve_id, attributed_year(c));
  std::map<std::pair<std::string, int>, std::set<std::string>> distinct;
  for (const auto& m : mappings) {
    auto it = year_of.find(m.cve_id);
    if (it == year_of.end()) continue;
    distinct[{m.platform, it->second}].insert(m.cve_id);
  }
  detail::Counts counts;
  for (const auto& [key, ids] : distinct) counts[{key.first, detail::year_key(key.second)}] = ids.size();
  return Report{"mapped_cve_per_year", {"platform", "year"}, detail::ranked(counts), false, {}};
}

inline Report top_repo_links(const std::vector<PackageRecord>& packages, std::size_t k = 10) {
  detail::Counts counts;
  for (const auto& p : packages) {
    if (p.repo) ++counts[{p.repo->repo_link()}];
  }
  auto rows = detail::ranked(counts);
  if (rows.size() > k) rows.resize(k);
  Report r{"top_repo_links", {"repo_link"}, std::move(rows), false, {}};
  r.metadata["top_k"] = std::to_string(k);
  return r;
}

enum class ExportFormat { Csv, Json };

inline void export_csv(const Report& report, std::ostream& out) {
  std::string line;
  for (const auto& c : report.group_columns) line += csv::escape(c) + ",";
  line += report.has_share ? "count,share\n" : "count\n";
  out << line;
  for (const auto& row : report.rows) {
    line.clear();
    for (const auto& k : row.keys) line += csv::escape(k) + ",";
    line += std::to_string(row.count);
    if (report.has_share) {
      line += ",";
      if (row.share_hundredths) line += format_share(*row.share_hundredths);
    }
    line += "\n";
    out << line;
  }
  if (!out) throw Error(ErrorKind::SinkWrite, "failed writing report " + report.title);
}

inline nlohmann::ordered_json report_to_json(const Report& report) {
  nlohmann::ordered_json doc;
  doc["title"] = report.title;
  doc["group_columns"] = report.group_columns;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < report.group_columns.size() && i < row.keys.size(); ++i) {
      j[report.group_columns[i]] = row.keys[i];
    }
    j["count"] = row.count;
    if (report.has_share) {
      j["share"] = row.share_hundredths ? nlohmann::ordered_json(static_cast<double>(*row.share_hundredths) / 100.0)
                                        : nlohmann::ordered_json(nullptr);
    }
    rows.push_back(std::move(j));
  }
  doc["rows"] = std::move(rows);
  doc["metadata"] = report.metadata;
  return doc;
}

inline void export_json(const Report& report, std::ostream& out) {
  out << report_to_json(report).dump(2) << '\n';
  if (!out) throw Error(ErrorKind::SinkWrite, "failed writing report " + report.title);
}

inline void export_report(const Report& report, ExportFormat format, std::ostream& out) {
  if (format == ExportFormat::Csv) export_csv(report, out);
  else export_json(report, out);
}

} // namespace vulnmap
