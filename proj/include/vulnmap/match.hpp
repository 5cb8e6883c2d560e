#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vulnmap/fuzzy.hpp"
#include "vulnmap/ingest.hpp"
#include "vulnmap/lookup.hpp"
#include "vulnmap/records.hpp"
#include "vulnmap/repo.hpp"

namespace vulnmap {

enum class Strategy { StrictName, PartialFuzzy, Repository };
enum class LinkMode { AllLinks, FirstLink };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::StrictName: return "StrictName";
    case Strategy::PartialFuzzy: return "PartialFuzzy";
    case Strategy::Repository: return "Repository";
  }
  return "?";
}

enum class EvidenceKind { ProductNameEqual, SummaryKeyword, ReferenceUrl, RepoLink, FuzzyScore };

inline std::string_view to_string(EvidenceKind k) {
  switch (k) {
    case EvidenceKind::ProductNameEqual: return "ProductNameEqual";
    case EvidenceKind::SummaryKeyword: return "SummaryKeyword";
    case EvidenceKind::ReferenceUrl: return "ReferenceUrl";
    case EvidenceKind::RepoLink: return "RepoLink";
    case EvidenceKind::FuzzyScore: return "FuzzyScore";
  }
  return "?";
}

/// ProductNameEqual: value = product, aux = platform gate ("target_sw:x" or
/// "keyword:x"). FuzzyScore: value = query, aux = chosen candidate.
/// RepoLink: value = link.
struct Evidence {
  EvidenceKind kind = EvidenceKind::ProductNameEqual;
  std::string value;
  std::string aux;

  friend bool operator==(const Evidence&, const Evidence&) = default;
};

struct MappingResult {
  Strategy strategy = Strategy::StrictName;
  std::string cve_id;
  std::string package_key;
  std::string platform;
  double confidence = 1.0;
  Evidence evidence;
  std::size_t package_index = 0; // position in the corpus, used for ordering

  friend bool operator==(const MappingResult&, const MappingResult&) = default;
};

/// Per-strategy CVE accounting: skipped + mapped + unmatched == total.
struct StrategyTally {
  std::size_t total = 0;
  std::size_t skipped = 0;   // CVE lacks the input this strategy needs
  std::size_t mapped = 0;    // at least one result
  std::size_t unmatched = 0; // eligible but nothing matched
  std::size_t ambiguous = 0; // subset of skipped: more than one platform inferred

  StrategyTally& operator+=(const StrategyTally& o) {
    total += o.total;
    skipped += o.skipped;
    mapped += o.mapped;
    unmatched += o.unmatched;
    ambiguous += o.ambiguous;
    return *this;
  }

  friend bool operator==(const StrategyTally&, const StrategyTally&) = default;
};

struct StrategyOutput {
  std::vector<MappingResult> results;
  StrategyTally tally;
};

struct Corpus {
  std::vector<PackageRecord> packages;
  std::vector<CveRecord> cves;
  IndexSet index;

  Corpus() = default;
  Corpus(std::vector<PackageRecord> p, std::vector<CveRecord> c)
      : packages(std::move(p)), cves(std::move(c)), index(build_indexes(packages, cves)) {}
};

struct MatchOptions {
  double cutoff = fuzzy::kDefaultCutoff;
  unsigned workers = 1;
  // Extension: compare Go module paths by their last segment. Off by
  // default so Go names are compared verbatim.
  bool go_last_segment = false;
};

/// Deduplicated "provider/owner/repo" links from a CVE's references, in
/// first-occurrence order.
inline std::vector<std::string> extract_reference_links(const CveRecord& cve) {
  std::vector<std::string> links;
  for (const auto& ref : cve.references) {
    auto repo = extract_repo_ref(ref);
    if (!repo) continue;
    auto link = repo->repo_link();
    if (std::find(links.begin(), links.end(), link) == links.end()) links.push_back(std::move(link));
  }
  return links;
}

namespace detail {

inline void sort_results(std::vector<MappingResult>& results) {
  std::sort(results.begin(), results.end(), [](const MappingResult& a, const MappingResult& b) {
    if (a.cve_id != b.cve_id) return a.cve_id < b.cve_id;
    return a.package_index < b.package_index;
  });
}

// Runs `per_cve(cve_index, results, tally)` over all CVEs, sharded across
// workers; output is sorted so the worker count never shows.
template <class PerCve>
StrategyOutput run_sharded(std::size_t cve_count, unsigned workers, PerCve&& per_cve) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, cve_count))));
  std::vector<StrategyOutput> parts(workers);
  auto work = [&](unsigned w) {
    const std::size_t begin = cve_count * w / workers;
    const std::size_t end = cve_count * (w + 1) / workers;
    for (std::size_t i = begin; i < end; ++i) {
      ++parts[w].tally.total;
      const auto before = parts[w].results.size();
      const bool eligible = per_cve(i, parts[w].results, parts[w].tally);
      if (!eligible) ++parts[w].tally.skipped;
      else if (parts[w].results.size() > before) ++parts[w].tally.mapped;
      else ++parts[w].tally.unmatched;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  StrategyOutput out;
  for (auto& p : parts) {
    out.tally += p.tally;
    out.results.insert(out.results.end(), std::make_move_iterator(p.results.begin()),
                       std::make_move_iterator(p.results.end()));
  }
  sort_results(out.results);
  return out;
}

inline std::string_view last_segment(std::string_view name) {
  auto pos = name.rfind('/');
  return pos == std::string_view::npos ? name : name.substr(pos + 1);
}

// Platform gate of the strict strategy; empty when the CVE gives no
// evidence for the platform.
inline std::string strict_gate(const PlatformEvidence& ev, const std::vector<std::string>& targets,
                               const std::string& lower_summary) {
  for (const auto& t : targets) {
    if (ev.target_sw.count(t) != 0) return "target_sw:" + t;
  }
  for (const auto& kw : ev.keywords) {
    if (text::contains_word(lower_summary, kw)) return "keyword:" + kw;
  }
  return {};
}

inline bool contains_product(const PackageRecord& p, const std::string& product) {
  if (p.name.find(product) != std::string::npos) return true;
  for (const auto& kw : p.keywords) {
    if (kw.find(product) != std::string::npos) return true;
  }
  return false;
}

} // namespace detail

/// Package name equals a CPE product of the CVE, and the package's platform
/// is named by a CPE target_sw or by a whole word in the summary.
inline StrategyOutput strict_name_map(const Corpus& corpus, const PlatformLookup& lookup,
                                      const MatchOptions& options = {}) {
  std::unordered_map<std::string, std::vector<std::size_t>> go_by_segment;
  if (options.go_last_segment) {
    if (auto it = corpus.index.by_platform.find("Go"); it != corpus.index.by_platform.end()) {
      for (auto i : it->second) go_by_segment[std::string(detail::last_segment(corpus.packages[i].name))].push_back(i);
    }
  }

  return detail::run_sharded(corpus.cves.size(), options.workers, [&](std::size_t ci, auto& out, auto&) {
    const auto& cve = corpus.cves[ci];
    const auto products = cpe_products(cve);
    if (products.empty()) return false;
    const auto targets = cpe_target_sw(cve);
    const auto summary = text::lower(cve.summary);

    std::vector<MappingResult> found;
    std::unordered_set<std::size_t> seen;
    for (const auto& [platform, ev] : lookup.platforms) {
      const auto gate = detail::strict_gate(ev, targets, summary);
      if (gate.empty()) continue;
      for (const auto& product : products) {
        auto emit = [&](const std::vector<std::size_t>& hits) {
          for (auto pi : hits) {
            if (!seen.insert(pi).second) continue;
            const auto& pkg = corpus.packages[pi];
            found.push_back({Strategy::StrictName, cve.cve_id, pkg.package_key, pkg.platform, 1.0,
                             {EvidenceKind::ProductNameEqual, product, gate}, pi});
          }
        };
        if (auto it = corpus.index.by_name.find({platform, product}); it != corpus.index.by_name.end()) {
          emit(it->second);
        }
        if (options.go_last_segment && platform == "Go") {
          if (auto it = go_by_segment.find(product); it != go_by_segment.end()) emit(it->second);
        }
      }
    }
    out.insert(out.end(), found.begin(), found.end());
    return true;
  });
}

/// Infers the CVE's platform from the lookup table, keeps packages on that
/// platform whose name or a keyword contains a CPE product, and picks the
/// best fuzzy match per product (at most one result per product).
inline StrategyOutput partial_fuzzy_map(const Corpus& corpus, const PlatformLookup& lookup,
                                        const MatchOptions& options = {}) {
  static const std::vector<std::size_t> kNone;
  return detail::run_sharded(corpus.cves.size(), options.workers, [&](std::size_t ci, auto& out, auto& tally) {
    const auto& cve = corpus.cves[ci];
    const auto inferred = infer_platform(cve, lookup);
    if (inferred.ambiguous) ++tally.ambiguous;
    if (!inferred.platform) return false;
    const auto products = cpe_products(cve);
    if (products.empty()) return false;

    auto pit = corpus.index.by_platform.find(*inferred.platform);
    const auto& on_platform = pit == corpus.index.by_platform.end() ? kNone : pit->second;

    std::unordered_set<std::size_t> seen;
    for (const auto& product : products) {
      std::vector<std::string> names;
      std::unordered_map<std::string, std::size_t> first_with_name;
      for (auto pi : on_platform) {
        const auto& pkg = corpus.packages[pi];
        if (!detail::contains_product(pkg, product)) continue;
        if (first_with_name.emplace(pkg.name, pi).second) names.push_back(pkg.name);
      }
      if (names.empty()) continue;
      const auto best = fuzzy::best_match(product, names, options.cutoff);
      if (!best) continue;
      const auto pi = first_with_name.at(best->candidate);
      if (!seen.insert(pi).second) continue;
      const auto& pkg = corpus.packages[pi];
      out.push_back({Strategy::PartialFuzzy, cve.cve_id, pkg.package_key, pkg.platform, best->score,
                     {EvidenceKind::FuzzyScore, product, best->candidate}, pi});
    }
    return true;
  });
}

/// Joins repository links found in CVE references against package repo
/// links. FirstLink keeps only the first package (source order) of the
/// first link (reference order) that has any package.
inline StrategyOutput repository_map(const Corpus& corpus, LinkMode mode, const MatchOptions& options = {}) {
  return detail::run_sharded(corpus.cves.size(), options.workers, [&](std::size_t ci, auto& out, auto&) {
    const auto& cve = corpus.cves[ci];
    const auto links = extract_reference_links(cve);
    if (links.empty()) return false;
    std::unordered_set<std::size_t> seen;
    for (const auto& link : links) {
      auto it = corpus.index.by_repo_link.find(link);
      if (it == corpus.index.by_repo_link.end() || it->second.empty()) continue;
      for (auto pi : it->second) {
        if (!seen.insert(pi).second) continue;
        const auto& pkg = corpus.packages[pi];
        out.push_back({Strategy::Repository, cve.cve_id, pkg.package_key, pkg.platform, 1.0,
                       {EvidenceKind::RepoLink, link, {}}, pi});
        if (mode == LinkMode::FirstLink) return true;
      }
    }
    return true;
  });
}

inline constexpr std::string_view kStrictKey = "strict";
inline constexpr std::string_view kFuzzyKey = "fuzzy";
inline constexpr std::string_view kRepoAllKey = "repo-all";
inline constexpr std::string_view kRepoFirstKey = "repo-first";

struct RunAll {
  std::map<std::string, StrategyOutput, std::less<>> outputs; // keyed by the k*Key labels
};

inline RunAll run_all(const Corpus& corpus, const PlatformLookup& lookup, const MatchOptions& options = {}) {
  RunAll run;
  run.outputs.emplace(kStrictKey, strict_name_map(corpus, lookup, options));
  run.outputs.emplace(kFuzzyKey, partial_fuzzy_map(corpus, lookup, options));
  run.outputs.emplace(kRepoAllKey, repository_map(corpus, LinkMode::AllLinks, options));
  run.outputs.emplace(kRepoFirstKey, repository_map(corpus, LinkMode::FirstLink, options));
  return run;
}

} // namespace vulnmap
