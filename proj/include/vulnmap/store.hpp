#pragma once

#include <filesystem>
#include <map>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnmap/cpe.hpp"
#include "vulnmap/error.hpp"
#include "vulnmap/ingest.hpp"
#include "vulnmap/match.hpp"
#include "vulnmap/records.hpp"

namespace vulnmap::store {

using nlohmann::ordered_json;

inline constexpr const char* kPackagesFile = "packages.ndjson";
inline constexpr const char* kVersionsFile = "versions.ndjson";
inline constexpr const char* kCvesFile = "cves.ndjson";
inline constexpr const char* kRejectsFile = "rejects.ndjson";

inline ordered_json to_json(const PackageRecord& p) {
  ordered_json j;
  j["package_key"] = p.package_key;
  j["platform"] = p.platform;
  j["name"] = p.name;
  j["keywords"] = p.keywords;
  j["license"] = p.license;
  if (p.repo) {
    j["repo"] = {{"provider", p.repo->provider},
                 {"owner", p.repo->owner},
                 {"repository", p.repo->repository},
                 {"repo_link", p.repo->repo_link()}};
  } else {
    j["repo"] = nullptr;
  }
  return j;
}

inline ordered_json to_json(const VersionRecord& v) {
  ordered_json j;
  j["package_key"] = v.package_key;
  j["platform"] = v.platform;
  j["version"] = v.version_label;
  j["published"] = to_string(v.published);
  return j;
}

// CPEs are stored as their original strings and re-parsed on load; parsing
// is deterministic so the record comes back equal.
inline ordered_json to_json(const CveRecord& c) {
  ordered_json j;
  j["cve_id"] = c.cve_id;
  j["summary"] = c.summary;
  j["references"] = c.references;
  j["published"] = c.published ? ordered_json(to_string(*c.published)) : ordered_json(nullptr);
  auto cpes = ordered_json::array();
  for (const auto& cpe : c.cpes) cpes.push_back(cpe.raw);
  j["cpes"] = std::move(cpes);
  return j;
}

inline ordered_json to_json(const RejectEntry& r) {
  return ordered_json{{"source", r.source}, {"line", r.line}, {"reason", r.reason}, {"detail", r.detail}};
}

inline ordered_json to_json(const MappingResult& m) {
  ordered_json j;
  j["strategy"] = to_string(m.strategy);
  j["cve_id"] = m.cve_id;
  j["package_key"] = m.package_key;
  j["platform"] = m.platform;
  j["confidence"] = m.confidence;
  j["evidence"] = {{"kind", to_string(m.evidence.kind)}, {"value", m.evidence.value}, {"aux", m.evidence.aux}};
  return j;
}

inline std::string mappings_file(std::string_view key) { return "mappings_" + std::string(key) + ".ndjson"; }

inline PackageRecord package_from_json(const ordered_json& j) {
  PackageRecord p;
  p.package_key = j.at("package_key").get<std::string>();
  p.platform = j.at("platform").get<std::string>();
  p.name = j.at("name").get<std::string>();
  p.keywords = j.at("keywords").get<std::vector<std::string>>();
  p.license = j.at("license").get<std::string>();
  if (const auto& r = j.at("repo"); !r.is_null()) {
    p.repo = RepoRef{r.at("provider").get<std::string>(), r.at("owner").get<std::string>(),
                     r.at("repository").get<std::string>()};
  }
  return p;
}

inline VersionRecord version_from_json(const ordered_json& j) {
  VersionRecord v;
  v.package_key = j.at("package_key").get<std::string>();
  v.platform = j.at("platform").get<std::string>();
  v.version_label = j.at("version").get<std::string>();
  auto d = parse_date(j.at("published").get<std::string>());
  if (!d) throw Error(ErrorKind::JsonStructure, "bad date in version record");
  v.published = *d;
  return v;
}

inline CveRecord cve_from_json(const ordered_json& j) {
  CveRecord c;
  c.cve_id = j.at("cve_id").get<std::string>();
  c.summary = j.at("summary").get<std::string>();
  c.references = j.at("references").get<std::vector<std::string>>();
  if (const auto& d = j.at("published"); !d.is_null()) c.published = parse_date(d.get<std::string>());
  for (const auto& raw : j.at("cpes")) c.cpes.push_back(parse_cpe23(raw.get<std::string>()));
  return c;
}

/// Writes one JSON document per line.
class NdjsonWriter {
public:
  explicit NdjsonWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorKind::SinkWrite, "cannot write " + path.string());
  }

  template <class Record>
  void write(const Record& record) {
    out_ << to_json(record).dump() << '\n';
    if (!out_) throw Error(ErrorKind::SinkWrite, "write failed: " + path_.string());
  }

  void close() {
    out_.close();
    if (!out_) throw Error(ErrorKind::SinkWrite, "close failed: " + path_.string());
  }

private:
  std::filesystem::path path_;
  std::ofstream out_;
};

template <class Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(ordered_json::parse(line));
    } catch (const std::out_of_range& e) {
      throw Error(ErrorKind::JsonStructure, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::JsonStructure,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline std::vector<PackageRecord> read_packages(const std::filesystem::path& path) {
  std::vector<PackageRecord> out;
  for_each_line(path, [&](const ordered_json& j) { out.push_back(package_from_json(j)); });
  return out;
}

inline std::vector<VersionRecord> read_versions(const std::filesystem::path& path) {
  std::vector<VersionRecord> out;
  for_each_line(path, [&](const ordered_json& j) { out.push_back(version_from_json(j)); });
  return out;
}

inline std::vector<CveRecord> read_cves(const std::filesystem::path& path) {
  std::vector<CveRecord> out;
  for_each_line(path, [&](const ordered_json& j) { out.push_back(cve_from_json(j)); });
  return out;
}

inline MappingResult mapping_from_json(const ordered_json& j, std::size_t ordinal) {
  static const std::map<std::string, Strategy, std::less<>> strategies{
      {"StrictName", Strategy::StrictName}, {"PartialFuzzy", Strategy::PartialFuzzy}, {"Repository", Strategy::Repository}};
  static const std::map<std::string, EvidenceKind, std::less<>> kinds{
      {"ProductNameEqual", EvidenceKind::ProductNameEqual}, {"SummaryKeyword", EvidenceKind::SummaryKeyword},
      {"ReferenceUrl", EvidenceKind::ReferenceUrl},         {"RepoLink", EvidenceKind::RepoLink},
      {"FuzzyScore", EvidenceKind::FuzzyScore}};
  MappingResult m;
  m.strategy = strategies.at(j.at("strategy").get<std::string>());
  m.cve_id = j.at("cve_id").get<std::string>();
  m.package_key = j.at("package_key").get<std::string>();
  m.platform = j.at("platform").get<std::string>();
  m.confidence = j.at("confidence").get<double>();
  const auto& ev = j.at("evidence");
  m.evidence = {kinds.at(ev.at("kind").get<std::string>()), ev.at("value").get<std::string>(),
                ev.at("aux").get<std::string>()};
  m.package_index = ordinal;
  return m;
}

inline std::vector<MappingResult> read_mappings(const std::filesystem::path& path) {
  std::vector<MappingResult> out;
  for_each_line(path, [&](const ordered_json& j) { out.push_back(mapping_from_json(j, out.size())); });
  return out;
}

} // namespace vulnmap::store
