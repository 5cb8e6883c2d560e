#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vulnmap/vulnmap.hpp"

namespace vulnmap::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(VULNMAP_FIXTURE_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Corpus load_fixture_corpus() {
  std::ifstream pk(fixture("corpus_packages.csv"));
  std::ifstream cv(fixture("corpus_cves.ndjson"));
  auto packages = collect_packages(pk);
  auto cves = collect_cves(cv);
  return Corpus(std::move(packages.records), std::move(cves.records));
}

/// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("vulnmap-" + tag + "-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

/// Escapes a literal value for a CPE 2.3 formatted string.
inline std::string cpe_escape(const std::string& value) {
  std::string out;
  for (char c : value) {
    if (!text::is_alnum(c) && c != '_') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

/// Small random corpora drawn from a narrow vocabulary so that every
/// strategy clause fires regularly.
class CorpusGenerator {
public:
  explicit CorpusGenerator(std::uint64_t seed) : rng_(seed) {}

  Corpus make(std::size_t max_packages, std::size_t max_cves) {
    const std::vector<std::string> words{"lodash", "react", "flask", "jackson", "rails", "gin", "tar", "yaml"};
    const std::vector<std::string> platforms{"NPM", "Pypi", "Maven", "Ruby", "Go", "CPAN"};
    const std::vector<std::string> target_sw{"node.js", "python", "maven", "ruby", "go", "*", "-", "php"};
    const std::vector<std::string> keywords{"npm", "pypi", "maven", "rubygems", "golang", "the", "node.js"};
    const std::vector<std::string> repos{"github.com/a/b", "github.com/lodash/lodash", "gitlab.com/x/y",
                                         "bitbucket.org/t/m", "github.com/react/react"};
    const std::vector<std::string> hosts{"https://www.npmjs.com/package/", "https://pypi.org/project/",
                                         "https://rubygems.org/gems/", "https://example.com/"};

    std::vector<PackageRecord> packages;
    const auto np = pick(max_packages + 1);
    for (std::size_t i = 0; i < np; ++i) {
      PackageRecord p;
      p.package_key = "p" + std::to_string(i);
      p.platform = platforms[pick(platforms.size())];
      const auto& w = words[pick(words.size())];
      switch (pick(4)) {
        case 0: p.name = w; break;
        case 1: p.name = w + "-" + words[pick(words.size())]; break;
        case 2: p.name = "github.com/" + w + "/" + w; break;
        default: p.name = "node-" + w; break;
      }
      if (pick(3) == 0) p.keywords.push_back(words[pick(words.size())]);
      p.license = pick(4) == 0 ? "" : (pick(2) ? "MIT" : "Apache-2.0");
      if (pick(3) != 0) {
        if (auto ref = extract_repo_ref("https://" + repos[pick(repos.size())])) p.repo = *ref;
      }
      packages.push_back(std::move(p));
    }

    std::vector<CveRecord> cves;
    const auto nc = pick(max_cves + 1);
    for (std::size_t i = 0; i < nc; ++i) {
      CveRecord c;
      c.cve_id = "CVE-" + std::to_string(2015 + pick(7)) + "-" + std::to_string(10000 + i);
      if (pick(4) != 0) c.published = Date{2015 + static_cast<int>(pick(7)), 1, 1};
      const auto nprod = pick(3);
      for (std::size_t k = 0; k < nprod; ++k) {
        const auto raw = "cpe:2.3:a:v:" + words[pick(words.size())] + ":1.0:*:*:*:*:" +
                         target_sw[pick(target_sw.size())] + ":*:*";
        c.cpes.push_back(parse_cpe23(raw));
      }
      c.summary = "Issue in the " + keywords[pick(keywords.size())] + " package";
      if (pick(5) == 0) c.summary += " and " + keywords[pick(keywords.size())];
      const auto nref = pick(4);
      for (std::size_t k = 0; k < nref; ++k) {
        if (pick(2)) c.references.push_back("https://" + repos[pick(repos.size())] + "/issues/" + std::to_string(k));
        else c.references.push_back(hosts[pick(hosts.size())] + words[pick(words.size())]);
      }
      cves.push_back(std::move(c));
    }
    return Corpus(std::move(packages), std::move(cves));
  }

  std::mt19937_64& rng() { return rng_; }

  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

private:
  std::mt19937_64 rng_;
};

} // namespace vulnmap::testing
