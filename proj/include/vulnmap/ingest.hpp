#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnmap/cpe.hpp"
#include "vulnmap/csv.hpp"
#include "vulnmap/error.hpp"
#include "vulnmap/records.hpp"
#include "vulnmap/repo.hpp"
#include "vulnmap/text.hpp"

namespace vulnmap {

/// Header names of the package CSV. Keywords and license may be left
/// empty to skip them.
struct PackageColumns {
  std::string id = "ID";
  std::string platform = "Platform";
  std::string name = "Name";
  std::string repository_url = "Repository URL";
  std::string keywords = "Keywords";
  std::string license = "Licenses";
};

struct VersionColumns {
  std::string package_key = "Project ID";
  std::string platform = "Platform";
  std::string number = "Number";
  std::string published = "Published Timestamp";
};

/// Field names inside each CVE JSON object. Defaults follow the CIRCL dump.
struct CveFields {
  std::string id = "id";
  std::string summary = "summary";
  std::string references = "references";
  std::string published = "Published";
  std::string cpes = "vulnerable_configuration";
};

/// Maps dump platform names onto report labels ("Rubygems" -> "Ruby").
/// Names without an entry pass through unchanged.
struct PlatformAliases {
  std::map<std::string, std::string> table{{"Rubygems", "Ruby"}};

  std::string canonical(std::string_view raw) const {
    auto it = table.find(std::string(raw));
    return it == table.end() ? std::string(raw) : it->second;
  }
};

struct RejectEntry {
  std::string source; // "packages", "versions" or "cves"
  std::size_t line = 0;
  std::string reason;
  std::string detail;

  friend bool operator==(const RejectEntry&, const RejectEntry&) = default;
};

struct IngestCounts {
  std::size_t rows = 0;
  std::size_t records = 0;
  std::size_t rejects = 0;
  std::size_t malformed_cpes = 0;
};

/// Lowercased, trimmed package name.
inline std::string normalize_name(std::string_view raw) { return text::lower(text::trim(raw)); }

/// Splits a comma separated keyword cell into normalized, non-empty tokens.
inline std::vector<std::string> split_keywords(std::string_view cell) {
  std::vector<std::string> out;
  for (auto token : text::split(cell, ',')) {
    auto t = normalize_name(token);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

namespace detail {

class HeaderIndex {
public:
  explicit HeaderIndex(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      index_.emplace(std::string(text::trim(header[i])), i);
    }
    width_ = header.size();
  }

  std::size_t required(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw Error(ErrorKind::CsvStructure, "missing required header '" + name + "'");
    }
    return it->second;
  }

  std::optional<std::size_t> optional(const std::string& name) const {
    if (name.empty()) return std::nullopt;
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t width() const { return width_; }

private:
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t width_ = 0;
};

inline std::vector<std::string> read_header(csv::Reader& reader) {
  csv::Row header;
  if (!reader.next(header)) throw Error(ErrorKind::CsvStructure, "input has no header row");
  return std::move(header.fields);
}

// Reason a row cannot be used at all, checked before any field access.
inline std::optional<RejectEntry> structural_reject(const csv::Row& row, std::size_t width,
                                                    const char* source) {
  if (row.fields.size() != width) {
    return RejectEntry{source, row.line, "FieldCount",
                       "expected " + std::to_string(width) + " fields, found " +
                           std::to_string(row.fields.size())};
  }
  if (row.bad_quote) return RejectEntry{source, row.line, "MalformedQuote", ""};
  return std::nullopt;
}

// Howard Hinnant's days-to-civil conversion.
inline Date civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

inline std::optional<Date> json_date(const nlohmann::json& v) {
  if (v.is_string()) return parse_date(v.get<std::string>());
  if (v.is_number_integer() || v.is_number_unsigned()) {
    // Mongo exports carry milliseconds since the epoch.
    const auto ms = v.get<std::int64_t>();
    const auto days = (ms >= 0 ? ms : ms - 86399999) / 86400000;
    return civil_from_days(days);
  }
  if (v.is_object()) {
    if (auto it = v.find("$date"); it != v.end()) return json_date(*it);
  }
  return std::nullopt;
}

} // namespace detail

/// Streams package rows from CSV. `on_record(PackageRecord&&)` receives
/// every usable row and `on_reject(RejectEntry&&)` every other one, so
/// records + rejects always equals rows.
template <class OnRecord, class OnReject>
IngestCounts load_packages(std::istream& source, const PackageColumns& columns,
                           const PlatformAliases& aliases, OnRecord&& on_record,
                           OnReject&& on_reject) {
  csv::Reader reader(source);
  const detail::HeaderIndex header(detail::read_header(reader));
  const auto id_col = header.required(columns.id);
  const auto platform_col = header.required(columns.platform);
  const auto name_col = header.required(columns.name);
  const auto repo_col = header.required(columns.repository_url);
  const auto keywords_col = header.optional(columns.keywords);
  const auto license_col = header.optional(columns.license);

  IngestCounts counts;
  csv::Row row;
  while (reader.next(row)) {
    ++counts.rows;
    auto reject = detail::structural_reject(row, header.width(), "packages");
    if (!reject) {
      const auto key = text::trim(row.fields[id_col]);
      const auto platform = text::trim(row.fields[platform_col]);
      if (key.empty()) reject = RejectEntry{"packages", row.line, "EmptyKey", ""};
      else if (platform.empty()) reject = RejectEntry{"packages", row.line, "EmptyPlatform", std::string(key)};
      else if (normalize_name(row.fields[name_col]).empty()) {
        reject = RejectEntry{"packages", row.line, "EmptyName", std::string(key)};
      }
    }
    if (reject) {
      ++counts.rejects;
      on_reject(std::move(*reject));
      continue;
    }

    PackageRecord rec;
    rec.package_key = std::string(text::trim(row.fields[id_col]));
    rec.platform = aliases.canonical(text::trim(row.fields[platform_col]));
    rec.name = normalize_name(row.fields[name_col]);
    if (keywords_col) rec.keywords = split_keywords(row.fields[*keywords_col]);
    if (license_col) rec.license = std::string(text::trim(row.fields[*license_col]));
    rec.repo = extract_repo_ref(row.fields[repo_col]);
    ++counts.records;
    on_record(std::move(rec));
  }
  return counts;
}

/// Streams version rows. Rows whose publication date does not parse are
/// rejected with reason BadDate.
template <class OnRecord, class OnReject>
IngestCounts load_versions(std::istream& source, const VersionColumns& columns,
                           const PlatformAliases& aliases, OnRecord&& on_record,
                           OnReject&& on_reject) {
  csv::Reader reader(source);
  const detail::HeaderIndex header(detail::read_header(reader));
  const auto key_col = header.required(columns.package_key);
  const auto platform_col = header.required(columns.platform);
  const auto number_col = header.required(columns.number);
  const auto published_col = header.required(columns.published);

  IngestCounts counts;
  csv::Row row;
  while (reader.next(row)) {
    ++counts.rows;
    auto reject = detail::structural_reject(row, header.width(), "versions");
    std::optional<Date> published;
    if (!reject) {
      published = parse_date(row.fields[published_col]);
      if (text::trim(row.fields[key_col]).empty()) {
        reject = RejectEntry{"versions", row.line, "EmptyKey", ""};
      } else if (text::trim(row.fields[platform_col]).empty()) {
        reject = RejectEntry{"versions", row.line, "EmptyPlatform", ""};
      } else if (!published) {
        reject = RejectEntry{"versions", row.line, "BadDate", row.fields[published_col]};
      }
    }
    if (reject) {
      ++counts.rejects;
      on_reject(std::move(*reject));
      continue;
    }
    VersionRecord rec;
    rec.package_key = std::string(text::trim(row.fields[key_col]));
    rec.platform = aliases.canonical(text::trim(row.fields[platform_col]));
    rec.version_label = std::string(text::trim(row.fields[number_col]));
    rec.published = *published;
    ++counts.records;
    on_record(std::move(rec));
  }
  return counts;
}

/// Pulls top-level JSON objects one at a time from either a JSON array or
/// newline-delimited JSON. Only the current object is buffered.
class JsonObjectStream {
public:
  explicit JsonObjectStream(std::istream& in) : buf_(in.rdbuf()) {
    if (buf_ == nullptr) throw Error(ErrorKind::JsonStructure, "stream has no buffer");
    skip_ws();
    if (buf_->sgetc() == '[') {
      buf_->sbumpc();
      array_ = true;
    }
  }

  /// Copies the next object's text into `out`; false at end of input.
  bool next(std::string& out) {
    out.clear();
    skip_ws();
    int c = buf_->sgetc();
    if (array_) {
      if (closed_) {
        if (c != eof) fail("trailing content after closing ']'");
        return false;
      }
      if (c == ']') {
        if (need_comma_ && trailing_comma_) fail("trailing comma before ']'");
        buf_->sbumpc();
        closed_ = true;
        skip_ws();
        if (buf_->sgetc() != eof) fail("trailing content after closing ']'");
        return false;
      }
      if (c == eof) fail("unterminated JSON array");
      if (need_comma_) {
        if (c != ',') fail("expected ',' between array elements");
        buf_->sbumpc();
        skip_ws();
        c = buf_->sgetc();
        trailing_comma_ = true;
        if (c == ']') fail("trailing comma before ']'");
      }
    } else if (c == eof) {
      return false;
    }
    if (c != '{') fail("expected '{' at start of CVE object");
    read_object(out);
    need_comma_ = true;
    trailing_comma_ = false;
    return true;
  }

  std::size_t line() const { return object_line_; }

private:
  static constexpr int eof = std::char_traits<char>::eof();

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::JsonStructure, what + " (line " + std::to_string(line_) + ")");
  }

  void skip_ws() {
    for (int c = buf_->sgetc(); c == ' ' || c == '\t' || c == '\n' || c == '\r'; c = buf_->sgetc()) {
      if (c == '\n') ++line_;
      buf_->sbumpc();
    }
  }

  void read_object(std::string& out) {
    object_line_ = line_;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (;;) {
      const int c = buf_->sbumpc();
      if (c == eof) fail("unterminated JSON object starting on line " + std::to_string(object_line_));
      const char ch = static_cast<char>(c);
      out.push_back(ch);
      if (ch == '\n') ++line_;
      if (in_string) {
        if (escaped) escaped = false;
        else if (ch == '\\') escaped = true;
        else if (ch == '"') in_string = false;
        continue;
      }
      if (ch == '"') in_string = true;
      else if (ch == '{' || ch == '[') ++depth;
      else if (ch == '}' || ch == ']') {
        if (--depth == 0) return;
      }
    }
  }

  std::streambuf* buf_;
  bool array_ = false;
  bool closed_ = false;
  bool need_comma_ = false;
  bool trailing_comma_ = false;
  std::size_t line_ = 1;
  std::size_t object_line_ = 1;
};

namespace detail {

inline void collect_cpes(const nlohmann::json& node, CveRecord& rec, IngestCounts& counts) {
  if (node.is_string()) {
    try {
      rec.cpes.push_back(parse_cpe23(node.get<std::string>()));
    } catch (const Error&) {
      ++counts.malformed_cpes;
    }
    return;
  }
  if (node.is_object()) {
    for (const char* key : {"id", "cpe23Uri", "criteria"}) {
      if (auto it = node.find(key); it != node.end() && it->is_string()) {
        collect_cpes(*it, rec, counts);
        return;
      }
    }
    ++counts.malformed_cpes;
    return;
  }
  ++counts.malformed_cpes;
}

} // namespace detail

/// Streams CVE entries. Document-level malformation throws JsonStructure;
/// a bad or duplicate id rejects the entry; a bad CPE string is counted in
/// `malformed_cpes` and the entry is still delivered without it.
template <class OnRecord, class OnReject>
IngestCounts load_cves(std::istream& source, const CveFields& fields, OnRecord&& on_record,
                       OnReject&& on_reject) {
  JsonObjectStream objects(source);
  IngestCounts counts;
  std::unordered_set<std::string> seen_ids;
  std::string text_buf;
  while (objects.next(text_buf)) {
    ++counts.rows;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text_buf);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::JsonStructure,
                  "invalid CVE object on line " + std::to_string(objects.line()) + ": " + e.what());
    }

    auto reject = [&](std::string reason, std::string detail) {
      ++counts.rejects;
      on_reject(RejectEntry{"cves", objects.line(), std::move(reason), std::move(detail)});
    };

    auto id_it = doc.find(fields.id);
    if (id_it == doc.end() || !id_it->is_string() || !is_valid_cve_id(id_it->get<std::string>())) {
      reject("InvalidId", id_it != doc.end() && id_it->is_string() ? id_it->get<std::string>() : "");
      continue;
    }
    CveRecord rec;
    rec.cve_id = id_it->get<std::string>();
    if (!seen_ids.insert(rec.cve_id).second) {
      reject("DuplicateId", rec.cve_id);
      continue;
    }
    if (auto it = doc.find(fields.summary); it != doc.end() && it->is_string()) {
      rec.summary = it->get<std::string>();
    }
    if (auto it = doc.find(fields.references); it != doc.end() && it->is_array()) {
      for (const auto& ref : *it) {
        if (ref.is_string()) rec.references.push_back(ref.get<std::string>());
        else if (ref.is_object() && ref.contains("url") && ref["url"].is_string()) {
          rec.references.push_back(ref["url"].get<std::string>());
        }
      }
    }
    if (auto it = doc.find(fields.published); it != doc.end()) {
      rec.published = detail::json_date(*it);
    }
    if (auto it = doc.find(fields.cpes); it != doc.end() && it->is_array()) {
      for (const auto& node : *it) detail::collect_cpes(node, rec, counts);
    }
    ++counts.records;
    on_record(std::move(rec));
  }
  return counts;
}

template <class Record>
struct Loaded {
  std::vector<Record> records;
  std::vector<RejectEntry> rejects;
  IngestCounts counts;
};

inline Loaded<PackageRecord> collect_packages(std::istream& source, const PackageColumns& columns = {},
                                              const PlatformAliases& aliases = {}) {
  Loaded<PackageRecord> out;
  out.counts = load_packages(
      source, columns, aliases, [&](PackageRecord&& r) { out.records.push_back(std::move(r)); },
      [&](RejectEntry&& r) { out.rejects.push_back(std::move(r)); });
  return out;
}

inline Loaded<VersionRecord> collect_versions(std::istream& source, const VersionColumns& columns = {},
                                              const PlatformAliases& aliases = {}) {
  Loaded<VersionRecord> out;
  out.counts = load_versions(
      source, columns, aliases, [&](VersionRecord&& r) { out.records.push_back(std::move(r)); },
      [&](RejectEntry&& r) { out.rejects.push_back(std::move(r)); });
  return out;
}

inline Loaded<CveRecord> collect_cves(std::istream& source, const CveFields& fields = {}) {
  Loaded<CveRecord> out;
  out.counts = load_cves(
      source, fields, [&](CveRecord&& r) { out.records.push_back(std::move(r)); },
      [&](RejectEntry&& r) { out.rejects.push_back(std::move(r)); });
  return out;
}

/// Lookup structures over an ingested corpus. Values are positions in the
/// package/CVE vectors the index was built from, in source order.
struct IndexSet {
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_name;
  std::map<std::string, std::vector<std::size_t>> by_repo_link;
  std::map<std::string, std::vector<std::size_t>> by_product;
  std::map<std::string, std::vector<std::size_t>> by_platform;
};

inline IndexSet build_indexes(const std::vector<PackageRecord>& packages,
                              const std::vector<CveRecord>& cves) {
  IndexSet idx;
  for (std::size_t i = 0; i < packages.size(); ++i) {
    const auto& p = packages[i];
    idx.by_name[{p.platform, p.name}].push_back(i);
    idx.by_platform[p.platform].push_back(i);
    if (p.repo) idx.by_repo_link[p.repo->repo_link()].push_back(i);
  }
  for (std::size_t i = 0; i < cves.size(); ++i) {
    for (const auto& product : cpe_products(cves[i])) idx.by_product[product].push_back(i);
  }
  return idx;
}

} // namespace vulnmap
