// vulnmap: map CVE entries onto package-manager packages and report on it.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "vulnmap/pipeline.hpp"

namespace pl = vulnmap::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Map CVE entries to open-source packages and report vulnerability frequencies"};
  app.require_subcommand(1);

  pl::RunConfig cfg;
  std::string strategy = "all";
  std::string mode;
  std::string format = "csv";
  std::size_t top_k = 0;

  auto add_workspace = [&](CLI::App* sub) {
    sub->add_option("--workspace", cfg.workspace, "Workspace directory")->envname("VULNMAP_WORKSPACE")->required();
    sub->add_option("--workers", cfg.workers, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* ingest = app.add_subcommand("ingest", "Parse the package CSV and CVE dump into the workspace store");
  add_workspace(ingest);
  ingest->add_option("--packages", cfg.packages, "Package CSV (optionally gzip-compressed)")->required();
  ingest->add_option("--cves", cfg.cves, "CVE JSON array or NDJSON (optionally gzip-compressed)")->required();
  ingest->add_option("--versions", cfg.versions, "Versions CSV (optionally gzip-compressed)");
  ingest->add_option("--cve-fields", cfg.cve_fields, "JSON file renaming CVE fields");
  ingest->add_option("--aliases", cfg.aliases, "JSON file mapping dump platform names to labels");

  auto* map = app.add_subcommand("map", "Run the mapping strategies over the workspace store");
  add_workspace(map);
  map->add_option("--lookup", cfg.lookup, "Platform lookup table (JSON)");
  map->add_option("--cutoff", cfg.cutoff, "Fuzzy match cutoff")->check(CLI::Range(0.0, 1.0));
  map->add_option("--strategy", strategy, "strict, fuzzy, repository or all")
      ->check(CLI::IsMember({"strict", "fuzzy", "repository", "all"}));
  map->add_option("--mode", mode, "Repository link mode: all or first (default: both)")
      ->check(CLI::IsMember({"all", "first"}));
  map->add_flag("--go-last-segment", cfg.go_last_segment,
                "Extension: compare Go module paths by their last segment in strict matching");

  auto* report = app.add_subcommand("report", "Export analytics reports from the workspace");
  add_workspace(report);
  report->add_option("--report", cfg.reports, "Report name or 'all' (repeatable)");
  report->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  report->add_option("--top-k", top_k, "Override the per-report top-k")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pl::kExitUsage;
  }

  static const std::map<std::string, pl::StrategySelection> strategies{
      {"strict", pl::StrategySelection::Strict},
      {"fuzzy", pl::StrategySelection::Fuzzy},
      {"repository", pl::StrategySelection::Repository},
      {"all", pl::StrategySelection::All}};
  cfg.strategy = strategies.at(strategy);
  if (mode == "all") cfg.mode = vulnmap::LinkMode::AllLinks;
  if (mode == "first") cfg.mode = vulnmap::LinkMode::FirstLink;
  cfg.format = format == "json" ? vulnmap::ExportFormat::Json : vulnmap::ExportFormat::Csv;
  if (top_k > 0) cfg.top_k = top_k;

  if (ingest->parsed()) return pl::cmd_ingest(cfg, std::cout, std::cerr);
  if (map->parsed()) return pl::cmd_map(cfg, std::cout, std::cerr);
  return pl::cmd_report(cfg, std::cout, std::cerr);
}
