#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnmap/error.hpp"
#include "vulnmap/fuzzy.hpp"
#include "vulnmap/ingest.hpp"
#include "vulnmap/input.hpp"
#include "vulnmap/lookup.hpp"
#include "vulnmap/match.hpp"
#include "vulnmap/report.hpp"
#include "vulnmap/store.hpp"

namespace vulnmap::pipeline {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kIngestSummaryFile = "ingest_summary.json";
inline constexpr const char* kMapSummaryFile = "map_summary.json";
inline constexpr const char* kLockFile = ".vulnmap.lock";

enum class StrategySelection { Strict, Fuzzy, Repository, All };

struct RunConfig {
  fs::path workspace;
  fs::path packages;
  fs::path versions; // optional
  fs::path cves;
  fs::path cve_fields; // optional field-name mapping file
  fs::path aliases;    // optional platform alias file
  fs::path lookup;     // optional; built-in table when empty
  double cutoff = fuzzy::kDefaultCutoff;
  StrategySelection strategy = StrategySelection::All;
  std::optional<LinkMode> mode; // both modes when unset
  std::vector<std::string> reports{"all"};
  ExportFormat format = ExportFormat::Csv;
  std::optional<std::size_t> top_k;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  bool go_last_segment = false;
};

inline const std::vector<std::string>& report_names() {
  static const std::vector<std::string> names{
      "platform-share",      "license-distribution", "versions-per-year", "cve-per-year",
      "vulnerable-packages", "mapped-cve-per-year",  "top-repo-links"};
  return names;
}

/// Exclusive per-workspace lock; the file is removed when released.
class WorkspaceLock {
public:
  explicit WorkspaceLock(const fs::path& workspace) : path_(workspace / kLockFile) {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) throw Error(ErrorKind::Io, "workspace is locked by another run: " + path_.string());
  }
  ~WorkspaceLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  WorkspaceLock(const WorkspaceLock&) = delete;
  WorkspaceLock& operator=(const WorkspaceLock&) = delete;

private:
  fs::path path_;
  int fd_ = -1;
};

namespace detail {

inline void prepare_workspace(const fs::path& workspace) {
  if (workspace.empty()) throw Error(ErrorKind::Config, "no workspace given (--workspace or VULNMAP_WORKSPACE)");
  std::error_code ec;
  fs::create_directories(workspace, ec);
  if (ec || !fs::is_directory(workspace)) {
    throw Error(ErrorKind::Io, "cannot create workspace " + workspace.string());
  }
}

inline ordered_json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::JsonStructure, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const fs::path& path, const ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::SinkWrite, "cannot write " + path.string());
}

inline CveFields load_cve_fields(const fs::path& path) {
  CveFields f;
  if (path.empty()) return f;
  const auto doc = read_json_file(path);
  auto set = [&](const char* key, std::string& dst) {
    if (auto it = doc.find(key); it != doc.end()) dst = it->get<std::string>();
  };
  set("id", f.id);
  set("summary", f.summary);
  set("references", f.references);
  set("published", f.published);
  set("cpes", f.cpes);
  return f;
}

inline PlatformAliases load_aliases(const fs::path& path) {
  PlatformAliases a;
  if (path.empty()) return a;
  a.table.clear();
  for (const auto& [k, v] : read_json_file(path).items()) a.table[k] = v.get<std::string>();
  return a;
}

inline ordered_json counts_json(const IngestCounts& c, bool with_cpes) {
  ordered_json j{{"rows", c.rows}, {"records", c.records}, {"rejects", c.rejects}};
  if (with_cpes) j["malformed_cpes"] = c.malformed_cpes;
  return j;
}

inline PlatformLookup load_lookup(const fs::path& path) {
  if (path.empty()) return default_lookup();
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open lookup table " + path.string());
  return parse_lookup(in);
}

inline void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) throw Error(ErrorKind::Io, std::string(what) + " not found: " + path.string());
}

} // namespace detail

/// Parses both sources into the workspace store and prints a JSON summary.
inline int cmd_ingest(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    detail::prepare_workspace(cfg.workspace);
    WorkspaceLock lock(cfg.workspace);
    const auto aliases = detail::load_aliases(cfg.aliases);
    const auto fields = detail::load_cve_fields(cfg.cve_fields);

    store::NdjsonWriter rejects(cfg.workspace / store::kRejectsFile);

    IngestCounts pkg_counts;
    {
      InputFile in(cfg.packages);
      store::NdjsonWriter writer(cfg.workspace / store::kPackagesFile);
      std::unordered_set<std::string> keys;
      std::size_t duplicates = 0;
      pkg_counts = load_packages(
          in.stream(), PackageColumns{}, aliases,
          [&](PackageRecord&& r) {
            if (!keys.insert(r.package_key).second) {
              rejects.write(RejectEntry{"packages", 0, "DuplicateKey", r.package_key});
              ++duplicates;
              return;
            }
            writer.write(r);
          },
          [&](RejectEntry&& r) { rejects.write(r); });
      // The loader counted duplicates as records; move them to rejects.
      pkg_counts.records -= duplicates;
      pkg_counts.rejects += duplicates;
      writer.close();
    }

    IngestCounts ver_counts;
    {
      store::NdjsonWriter writer(cfg.workspace / store::kVersionsFile);
      if (!cfg.versions.empty()) {
        InputFile in(cfg.versions);
        ver_counts = load_versions(
            in.stream(), VersionColumns{}, aliases, [&](VersionRecord&& r) { writer.write(r); },
            [&](RejectEntry&& r) { rejects.write(r); });
      }
      writer.close();
    }

    IngestCounts cve_counts;
    {
      InputFile in(cfg.cves);
      store::NdjsonWriter writer(cfg.workspace / store::kCvesFile);
      cve_counts = load_cves(
          in.stream(), fields, [&](CveRecord&& r) { writer.write(r); },
          [&](RejectEntry&& r) { rejects.write(r); });
      writer.close();
    }
    rejects.close();

    ordered_json summary;
    summary["packages"] = detail::counts_json(pkg_counts, false);
    summary["versions"] = detail::counts_json(ver_counts, false);
    summary["cves"] = detail::counts_json(cve_counts, true);
    summary["sources"] = {{"packages", cfg.packages.filename().string()},
                          {"versions", cfg.versions.filename().string()},
                          {"cves", cfg.cves.filename().string()}};
    summary["package_dedup"] = "distinct package_key";
    detail::write_json_file(cfg.workspace / kIngestSummaryFile, summary);
    out << summary.dump() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "vulnmap ingest: " << e.what() << '\n';
    return kExitInput;
  }
}

/// Runs the selected strategies over the store and writes one
/// mappings_<key>.ndjson per strategy (and link mode).
inline int cmd_map(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.cutoff < 0.0 || cfg.cutoff > 1.0) {
      err << "vulnmap map: --cutoff must lie in [0,1]\n";
      return kExitUsage;
    }
    detail::require_file(cfg.workspace / store::kPackagesFile, "normalized store");
    detail::require_file(cfg.workspace / store::kCvesFile, "normalized store");
    WorkspaceLock lock(cfg.workspace);
    const auto lookup = detail::load_lookup(cfg.lookup);
    Corpus corpus(store::read_packages(cfg.workspace / store::kPackagesFile),
                  store::read_cves(cfg.workspace / store::kCvesFile));
    MatchOptions options{cfg.cutoff, cfg.workers, cfg.go_last_segment};

    std::vector<std::pair<std::string_view, StrategyOutput>> runs;
    const auto sel = cfg.strategy;
    if (sel == StrategySelection::Strict || sel == StrategySelection::All) {
      runs.emplace_back(kStrictKey, strict_name_map(corpus, lookup, options));
    }
    if (sel == StrategySelection::Fuzzy || sel == StrategySelection::All) {
      runs.emplace_back(kFuzzyKey, partial_fuzzy_map(corpus, lookup, options));
    }
    if (sel == StrategySelection::Repository || sel == StrategySelection::All) {
      if (!cfg.mode || *cfg.mode == LinkMode::AllLinks) {
        runs.emplace_back(kRepoAllKey, repository_map(corpus, LinkMode::AllLinks, options));
      }
      if (!cfg.mode || *cfg.mode == LinkMode::FirstLink) {
        runs.emplace_back(kRepoFirstKey, repository_map(corpus, LinkMode::FirstLink, options));
      }
    }

    std::size_t malformed_cpes = 0;
    if (fs::is_regular_file(cfg.workspace / kIngestSummaryFile)) {
      malformed_cpes = detail::read_json_file(cfg.workspace / kIngestSummaryFile)["cves"].value("malformed_cpes", 0u);
    }

    ordered_json summary;
    summary["cutoff"] = cfg.cutoff;
    summary["go_last_segment"] = cfg.go_last_segment;
    summary["malformed_cpes"] = malformed_cpes;
    auto strategies = ordered_json::object();
    for (const auto& [key, run] : runs) {
      store::NdjsonWriter writer(cfg.workspace / store::mappings_file(key));
      for (const auto& r : run.results) writer.write(r);
      writer.close();
      strategies[std::string(key)] = {{"results", run.results.size()}, {"total_cves", run.tally.total},
                                      {"skipped", run.tally.skipped},   {"mapped", run.tally.mapped},
                                      {"unmatched", run.tally.unmatched}, {"ambiguous_platform", run.tally.ambiguous}};
    }
    summary["strategies"] = std::move(strategies);
    detail::write_json_file(cfg.workspace / kMapSummaryFile, summary);
    out << summary.dump() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "vulnmap map: " << e.what() << '\n';
    return kExitInput;
  }
}

/// Exports the selected reports as report_<name>.<csv|json>.
inline int cmd_report(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    std::vector<std::string> selected;
    for (const auto& name : cfg.reports) {
      if (name == "all") {
        selected = report_names();
        break;
      }
      if (std::find(report_names().begin(), report_names().end(), name) == report_names().end()) {
        err << "vulnmap report: unknown report '" << name << "'\n";
        return kExitUsage;
      }
      if (std::find(selected.begin(), selected.end(), name) == selected.end()) selected.push_back(name);
    }
    const auto& ws = cfg.workspace;
    detail::require_file(ws / store::kPackagesFile, "normalized store");
    detail::require_file(ws / store::kCvesFile, "normalized store");

    auto mapping_path = [&](std::string_view key) { return ws / store::mappings_file(key); };
    for (const auto& name : selected) {
      if (name == "mapped-cve-per-year") detail::require_file(mapping_path(kStrictKey), "strict mapping file");
      if (name == "vulnerable-packages") {
        bool any = false;
        for (auto key : {kStrictKey, kFuzzyKey, kRepoAllKey, kRepoFirstKey}) any = any || fs::is_regular_file(mapping_path(key));
        if (!any) throw Error(ErrorKind::Io, "no mapping files in " + ws.string() + "; run `vulnmap map` first");
      }
    }
    WorkspaceLock lock(ws);

    std::map<std::string, std::string> run_meta;
    if (fs::is_regular_file(ws / kIngestSummaryFile)) {
      const auto ingest = detail::read_json_file(ws / kIngestSummaryFile);
      for (const auto& [k, v] : ingest["sources"].items()) run_meta["source." + k] = v.get<std::string>();
    }
    std::map<std::string, std::string> map_meta;
    if (fs::is_regular_file(ws / kMapSummaryFile)) {
      const auto m = detail::read_json_file(ws / kMapSummaryFile);
      map_meta["cutoff"] = m["cutoff"].dump();
      map_meta["go_last_segment"] = m["go_last_segment"].dump();
    }

    std::optional<std::vector<PackageRecord>> packages;
    std::optional<std::vector<CveRecord>> cves;
    auto pkgs = [&]() -> const std::vector<PackageRecord>& {
      if (!packages) packages = store::read_packages(ws / store::kPackagesFile);
      return *packages;
    };
    auto cve_list = [&]() -> const std::vector<CveRecord>& {
      if (!cves) cves = store::read_cves(ws / store::kCvesFile);
      return *cves;
    };

    const char* ext = cfg.format == ExportFormat::Csv ? "csv" : "json";
    ordered_json written = ordered_json::array();
    for (const auto& name : selected) {
      Report report;
      bool mapping_derived = false;
      if (name == "platform-share") {
        report = platform_project_share(pkgs(), cfg.top_k.value_or(7));
      } else if (name == "license-distribution") {
        report = license_distribution(pkgs(), cfg.top_k.value_or(7));
      } else if (name == "versions-per-year") {
        std::vector<VersionRecord> versions;
        if (fs::is_regular_file(ws / store::kVersionsFile)) versions = store::read_versions(ws / store::kVersionsFile);
        report = versions_per_year(versions);
      } else if (name == "cve-per-year") {
        report = cve_per_year(cve_list());
      } else if (name == "vulnerable-packages") {
        std::map<std::string, std::vector<MappingResult>, std::less<>> mappings;
        for (auto key : {kStrictKey, kFuzzyKey, kRepoAllKey, kRepoFirstKey}) {
          if (fs::is_regular_file(mapping_path(key))) mappings.emplace(key, store::read_mappings(mapping_path(key)));
        }
        report = vulnerable_package_count(mappings);
        mapping_derived = true;
      } else if (name == "mapped-cve-per-year") {
        report = mapped_cve_per_year(store::read_mappings(mapping_path(kStrictKey)), cve_list());
        report.metadata["strategy"] = std::string(kStrictKey);
        mapping_derived = true;
      } else if (name == "top-repo-links") {
        report = top_repo_links(pkgs(), cfg.top_k.value_or(10));
      }
      for (const auto& [k, v] : run_meta) report.metadata[k] = v;
      if (mapping_derived) {
        for (const auto& [k, v] : map_meta) report.metadata[k] = v;
      }

      const auto path = ws / ("report_" + name + "." + ext);
      std::ofstream file(path, std::ios::binary);
      if (!file) throw Error(ErrorKind::SinkWrite, "cannot write " + path.string());
      export_report(report, cfg.format, file);
      written.push_back(path.filename().string());
    }
    out << ordered_json{{"reports", written}}.dump() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "vulnmap report: " << e.what() << '\n';
    return kExitInput;
  }
}

} // namespace vulnmap::pipeline
