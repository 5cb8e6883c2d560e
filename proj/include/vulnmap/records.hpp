#pragma once

#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vulnmap/cpe.hpp"
#include "vulnmap/text.hpp"

namespace vulnmap {

struct Date {
  int year = 0;
  int month = 0; // 0 when the source only carried a year
  int day = 0;

  friend auto operator<=>(const Date&, const Date&) = default;
};

inline std::string to_string(const Date& d) {
  char buf[16];
  if (d.month == 0) {
    std::snprintf(buf, sizeof buf, "%04d", d.year);
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  }
  return buf;
}

/// Reads the leading `YYYY[-MM[-DD]]` of an ISO-8601 style timestamp;
/// anything after the date (time, zone) is ignored.
inline std::optional<Date> parse_date(std::string_view s) {
  s = text::trim(s);
  auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<int> {
    if (pos + n > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (s[i] < '0' || s[i] > '9') return std::nullopt;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  const auto year = digits(0, 4);
  if (!year || *year < 1900 || *year > 9999) return std::nullopt;
  if (s.size() == 4) return Date{*year, 0, 0};
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') {
    if (s.size() >= 7 && s[4] == '-') {
      if (auto month = digits(5, 2); month && *month >= 1 && *month <= 12 && (s.size() == 7)) {
        return Date{*year, *month, 0};
      }
    }
    return std::nullopt;
  }
  const auto month = digits(5, 2);
  const auto day = digits(8, 2);
  if (!month || !day || *month < 1 || *month > 12 || *day < 1 || *day > 31) return std::nullopt;
  if (s.size() > 10 && s[10] != 'T' && s[10] != ' ' && s[10] != 't') return std::nullopt;
  return Date{*year, *month, *day};
}

struct RepoRef {
  std::string provider;
  std::string owner;
  std::string repository;

  std::string repo_link() const { return provider + "/" + owner + "/" + repository; }

  friend bool operator==(const RepoRef&, const RepoRef&) = default;
};

struct PackageRecord {
  std::string package_key;
  std::string platform;
  std::string name;
  std::vector<std::string> keywords;
  std::string license;
  std::optional<RepoRef> repo;

  friend bool operator==(const PackageRecord&, const PackageRecord&) = default;
};

struct VersionRecord {
  std::string package_key;
  std::string platform; // carried from the versions dump so reports need no join
  std::string version_label;
  Date published;

  friend bool operator==(const VersionRecord&, const VersionRecord&) = default;
};

struct CveRecord {
  std::string cve_id;
  std::string summary;
  std::vector<std::string> references;
  std::optional<Date> published;
  std::vector<CpeRecord> cpes;

  friend bool operator==(const CveRecord&, const CveRecord&) = default;
};

/// True for `CVE-YYYY-NNNN` with four or more trailing digits.
inline bool is_valid_cve_id(std::string_view id) {
  if (id.size() < 13 || id.substr(0, 4) != "CVE-" || id[8] != '-') return false;
  for (std::size_t i = 4; i < id.size(); ++i) {
    if (i == 8) continue;
    if (id[i] < '0' || id[i] > '9') return false;
  }
  return true;
}

/// Published year, falling back to the year embedded in the id.
inline int attributed_year(const CveRecord& cve) {
  if (cve.published) return cve.published->year;
  if (is_valid_cve_id(cve.cve_id)) return std::stoi(cve.cve_id.substr(4, 4));
  return 0;
}

/// Distinct CPE products that are not ANY/NA, in first-occurrence order.
inline std::vector<std::string> cpe_products(const CveRecord& cve) {
  std::vector<std::string> out;
  for (const auto& cpe : cve.cpes) {
    if (cpe.product.empty() || is_logical_value(cpe.product)) continue;
    bool seen = false;
    for (const auto& p : out) seen = seen || p == cpe.product;
    if (!seen) out.push_back(cpe.product);
  }
  return out;
}

inline std::vector<std::string> cpe_target_sw(const CveRecord& cve) {
  std::vector<std::string> out;
  for (const auto& cpe : cve.cpes) {
    if (cpe.target_sw.empty() || is_logical_value(cpe.target_sw)) continue;
    bool seen = false;
    for (const auto& t : out) seen = seen || t == cpe.target_sw;
    if (!seen) out.push_back(cpe.target_sw);
  }
  return out;
}

} // namespace vulnmap
