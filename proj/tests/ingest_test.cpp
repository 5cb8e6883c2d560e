#include <gtest/gtest.h>
#include <zlib.h>

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "support.hpp"

using namespace vulnmap;
using vulnmap::testing::fixture;

namespace {

Loaded<PackageRecord> packages_from(const std::string& csv_text) {
  std::istringstream in(csv_text);
  return collect_packages(in);
}

Loaded<CveRecord> cves_from(const std::string& json_text) {
  std::istringstream in(json_text);
  return collect_cves(in);
}

const char* kHeader = "ID,Platform,Name,Repository URL,Keywords,Licenses\n";

} // namespace

TEST(CsvReader, QuotedFieldsAndEmbeddedNewlines) {
  std::istringstream in("a,b,c\n\"x,1\",\"multi\nline\",\"say \"\"hi\"\"\"\r\n\nlast,,\n");
  csv::Reader reader(in);
  csv::Row row;
  ASSERT_TRUE(reader.next(row));
  EXPECT_EQ(row.fields, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_TRUE(reader.next(row));
  EXPECT_EQ(row.fields, (std::vector<std::string>{"x,1", "multi\nline", "say \"hi\""}));
  EXPECT_EQ(row.line, 2u);
  ASSERT_TRUE(reader.next(row));
  EXPECT_EQ(row.fields, (std::vector<std::string>{"last", "", ""}));
  EXPECT_EQ(row.line, 5u);
  EXPECT_FALSE(reader.next(row));
}

TEST(CsvReader, UnterminatedQuoteThrows) {
  std::istringstream in("a,b\n\"open,x\n");
  csv::Reader reader(in);
  csv::Row row;
  ASSERT_TRUE(reader.next(row));
  try {
    reader.next(row);
    FAIL() << "expected CsvStructure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CsvStructure);
  }
}

TEST(CsvReader, TextAfterClosingQuoteFlagsRow) {
  std::istringstream in("\"ab\"c,d\n");
  csv::Reader reader(in);
  csv::Row row;
  ASSERT_TRUE(reader.next(row));
  EXPECT_TRUE(row.bad_quote);
}

TEST(LoadPackages, LodashRow) {
  const auto loaded = packages_from(std::string(kHeader) + "1,NPM,lodash,https://github.com/lodash/lodash,,MIT\n");
  ASSERT_EQ(loaded.records.size(), 1u);
  const auto& p = loaded.records[0];
  EXPECT_EQ(p.package_key, "1");
  EXPECT_EQ(p.platform, "NPM");
  EXPECT_EQ(p.name, "lodash");
  ASSERT_TRUE(p.repo.has_value());
  EXPECT_EQ(*p.repo, (RepoRef{"github.com", "lodash", "lodash"}));
  EXPECT_EQ(p.license, "MIT");
}

TEST(LoadPackages, EmptyNameIsRejected) {
  const auto loaded = packages_from(std::string(kHeader) + "1,NPM,,,,\n");
  EXPECT_TRUE(loaded.records.empty());
  ASSERT_EQ(loaded.rejects.size(), 1u);
  EXPECT_EQ(loaded.rejects[0].reason, "EmptyName");
}

TEST(LoadPackages, ColumnsFoundByNameNotPosition) {
  const auto loaded = packages_from("Licenses,Name,Repository URL,Platform,ID\nMIT,  Express ,,NPM,9\n");
  ASSERT_EQ(loaded.records.size(), 1u);
  EXPECT_EQ(loaded.records[0].name, "express");
  EXPECT_EQ(loaded.records[0].package_key, "9");
  EXPECT_TRUE(loaded.records[0].keywords.empty());
}

TEST(LoadPackages, PlatformAliasApplied) {
  const auto loaded = packages_from(std::string(kHeader) + "1,Rubygems,rails,,\"web, MVC ,\",MIT\n");
  ASSERT_EQ(loaded.records.size(), 1u);
  EXPECT_EQ(loaded.records[0].platform, "Ruby");
  EXPECT_EQ(loaded.records[0].keywords, (std::vector<std::string>{"web", "mvc"}));
}

TEST(LoadPackages, MissingHeaderNamesTheColumn) {
  try {
    packages_from("ID,Platform,Name\n1,NPM,x\n");
    FAIL() << "expected CsvStructure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CsvStructure);
    EXPECT_NE(std::string(e.what()).find("Repository URL"), std::string::npos);
  }
}

TEST(LoadPackages, HundredRowFixtureHasThreeRejects) {
  std::ifstream in(fixture("packages_100.csv"));
  const auto loaded = collect_packages(in);
  EXPECT_EQ(loaded.counts.rows, 100u);
  EXPECT_EQ(loaded.records.size(), 97u);
  ASSERT_EQ(loaded.rejects.size(), 3u);
  std::multiset<std::string> reasons;
  for (const auto& r : loaded.rejects) reasons.insert(r.reason);
  EXPECT_EQ(reasons, (std::multiset<std::string>{"EmptyName", "EmptyPlatform", "FieldCount"}));
  EXPECT_EQ(loaded.counts.records + loaded.counts.rejects, loaded.counts.rows);
}

TEST(LoadPackages, GzipInputIsDetectedByMagicBytes) {
  vulnmap::testing::TempDir dir("gz");
  const auto plain = vulnmap::testing::slurp(fixture("packages_100.csv"));
  const auto gz_path = dir.path() / "packages.csv.data"; // extension deliberately unhelpful
  gzFile gz = gzopen(gz_path.c_str(), "wb");
  ASSERT_NE(gz, nullptr);
  ASSERT_EQ(gzwrite(gz, plain.data(), static_cast<unsigned>(plain.size())), static_cast<int>(plain.size()));
  gzclose(gz);

  InputFile file(gz_path);
  EXPECT_TRUE(file.compressed());
  const auto loaded = collect_packages(file.stream());
  EXPECT_EQ(loaded.records.size(), 97u);
  EXPECT_EQ(loaded.rejects.size(), 3u);

  InputFile raw(fixture("packages_100.csv"));
  EXPECT_FALSE(raw.compressed());
}

TEST(LoadVersions, ParsesDatesAndRejectsBadOnes) {
  std::istringstream in(
      "ID,Platform,Project Name,Project ID,Number,Published Timestamp\n"
      "1,NPM,a,10,1.0.0,2015-03-04 12:00:00 UTC\n"
      "2,NPM,a,10,1.0.1,not a date\n");
  const auto loaded = collect_versions(in);
  ASSERT_EQ(loaded.records.size(), 1u);
  EXPECT_EQ(loaded.records[0].published, (Date{2015, 3, 4}));
  EXPECT_EQ(loaded.records[0].package_key, "10");
  ASSERT_EQ(loaded.rejects.size(), 1u);
  EXPECT_EQ(loaded.rejects[0].reason, "BadDate");
}

TEST(LoadCves, LodashEntry) {
  const auto loaded = cves_from(R"({"id":"CVE-2019-10744","summary":"Versions of lodash lower than 4.17.12 are vulnerable","references":["https://github.com/lodash/lodash/pull/4336"],"Published":"2019-07-26T00:15:00","vulnerable_configuration":["cpe:2.3:a:lodash:lodash:*:*:*:*:*:node.js:*:*"]})");
  ASSERT_EQ(loaded.records.size(), 1u);
  const auto& c = loaded.records[0];
  EXPECT_EQ(c.cve_id, "CVE-2019-10744");
  ASSERT_EQ(c.cpes.size(), 1u);
  EXPECT_EQ(c.cpes[0].product, "lodash");
  EXPECT_EQ(c.cpes[0].target_sw, "node.js");
  EXPECT_EQ(c.published, (Date{2019, 7, 26}));
}

TEST(LoadCves, GarbageCpeIsCountedAndSkipped) {
  const auto loaded = cves_from(R"({"id":"CVE-2020-0001","vulnerable_configuration":["garbage"]})");
  ASSERT_EQ(loaded.records.size(), 1u);
  EXPECT_TRUE(loaded.records[0].cpes.empty());
  EXPECT_EQ(loaded.counts.malformed_cpes, 1u);
}

TEST(LoadCves, FiftyEntryDumpPerYear) {
  std::ifstream in(fixture("cves_50.json"));
  const auto loaded = collect_cves(in);
  ASSERT_EQ(loaded.records.size(), 50u);
  EXPECT_EQ(loaded.counts.malformed_cpes, 1u);
  std::map<int, int> per_year;
  for (const auto& c : loaded.records) ++per_year[attributed_year(c)];
  // Hand count of the committed fixture.
  const std::map<int, int> expected{{2015, 5}, {2016, 6}, {2017, 8}, {2018, 7}, {2019, 9}, {2020, 6}, {2021, 9}};
  EXPECT_EQ(per_year, expected);
}

TEST(LoadCves, ArrayAndNdjsonAgree) {
  const std::string a = R"({"id":"CVE-2020-1111","summary":"x, [y] {z}","references":[]})";
  const std::string b = R"({"id":"CVE-2021-2222","summary":"\"quoted\" }","Published":{"$date":1609459200000}})";
  const auto from_array = cves_from("[\n" + a + ",\n" + b + "\n]\n");
  const auto from_lines = cves_from(a + "\n" + b + "\n");
  ASSERT_EQ(from_array.records.size(), 2u);
  EXPECT_EQ(from_array.records, from_lines.records);
  EXPECT_EQ(from_array.records[1].published, (Date{2021, 1, 1}));
}

TEST(LoadCves, DocumentErrorsAbort) {
  for (const std::string bad : {"[{\"id\":\"CVE-2020-0001\"}", "[{\"id\":\"CVE-2020-0001\"},]", "{\"id\": ", "42",
                                "[{\"id\":\"CVE-2020-0001\"}] trailing", "{\"id\":tru}"}) {
    try {
      cves_from(bad);
      ADD_FAILURE() << "accepted: " << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::JsonStructure) << bad;
    }
  }
}

TEST(LoadCves, BadAndDuplicateIdsAreRejected) {
  const auto loaded = cves_from(R"({"id":"CVE-2020-0001"}
{"id":"CVE-2020-0001"}
{"id":"not-a-cve"}
{"summary":"no id"})");
  EXPECT_EQ(loaded.records.size(), 1u);
  EXPECT_EQ(loaded.rejects.size(), 3u);
  EXPECT_EQ(loaded.counts.rows, 4u);
}

TEST(ExtractRepoRef, Examples) {
  EXPECT_EQ(extract_repo_ref("https://github.com/lodash/lodash"), (RepoRef{"github.com", "lodash", "lodash"}));
  EXPECT_EQ(extract_repo_ref("https://github.com/openshift/origin/issues/12345"),
            (RepoRef{"github.com", "openshift", "origin"}));
  EXPECT_FALSE(extract_repo_ref("https://example.com/foo/bar").has_value());
  EXPECT_FALSE(extract_repo_ref("https://github.com/lonely").has_value());
  EXPECT_FALSE(extract_repo_ref("").has_value());
}

TEST(ExtractRepoRef, IgnoresSchemeWwwUserinfoAndGitSuffix) {
  const RepoRef expected{"gitlab.com", "group", "proj"};
  EXPECT_EQ(extract_repo_ref("git+https://gitlab.com/group/proj.git"), expected);
  EXPECT_EQ(extract_repo_ref("https://user:pw@www.GitLab.com/Group/Proj"), expected);
  EXPECT_EQ(extract_repo_ref("gitlab.com/group/proj?tab=readme"), expected);
  EXPECT_EQ(extract_repo_ref("git@gitlab.com:group/proj.git"), expected);
  EXPECT_EQ(extract_repo_ref("https://gitlab.com:443/group/proj"), expected);
}

TEST(ExtractRepoRef, NeverViolatesInvariantsOnRandomUrls) {
  std::mt19937_64 rng(42);
  const std::vector<std::string> pieces{"https://", "http://", "git@", "www.", "github.com", "gitlab.com",
                                        "bitbucket.org", "/", "//", ":", "a", "B", ".git", "?", "#", "@", "x.y", " "};
  for (int i = 0; i < 20000; ++i) {
    std::string url;
    const auto n = 1 + rng() % 10;
    for (std::size_t k = 0; k < n; ++k) url += pieces[rng() % pieces.size()];
    const auto ref = extract_repo_ref(url);
    if (!ref) continue;
    ASSERT_TRUE(is_repo_provider(ref->provider)) << url;
    ASSERT_FALSE(ref->owner.empty()) << url;
    ASSERT_FALSE(ref->repository.empty()) << url;
    ASSERT_EQ(ref->owner.find('/'), std::string::npos) << url;
    ASSERT_EQ(ref->repository.find('/'), std::string::npos) << url;
    ASSERT_EQ(ref->owner, text::lower(ref->owner)) << url;
  }
}

TEST(BuildIndexes, SharedRepoLinkKeepsSourceOrder) {
  std::vector<PackageRecord> pkgs(2);
  pkgs[0] = {"k1", "NPM", "a", {}, "", RepoRef{"github.com", "a", "b"}};
  pkgs[1] = {"k2", "Pypi", "b", {}, "", RepoRef{"github.com", "a", "b"}};
  const auto idx = build_indexes(pkgs, {});
  ASSERT_EQ(idx.by_repo_link.at("github.com/a/b"), (std::vector<std::size_t>{0, 1}));
}

TEST(BuildIndexes, EmptyInputs) {
  const auto idx = build_indexes({}, {});
  EXPECT_TRUE(idx.by_name.empty());
  EXPECT_TRUE(idx.by_repo_link.empty());
  EXPECT_TRUE(idx.by_product.empty());
}

TEST(BuildIndexes, NameKeysMatchBruteForceOnFixture) {
  const auto corpus = vulnmap::testing::load_fixture_corpus();
  std::set<std::pair<std::string, std::string>> distinct;
  for (const auto& p : corpus.packages) distinct.emplace(p.platform, p.name);
  EXPECT_EQ(corpus.index.by_name.size(), distinct.size());
  for (const auto& [key, ids] : corpus.index.by_name) {
    for (auto i : ids) {
      ASSERT_LT(i, corpus.packages.size());
      EXPECT_EQ(std::make_pair(corpus.packages[i].platform, corpus.packages[i].name), key);
    }
  }
  for (const auto& [product, ids] : corpus.index.by_product) {
    for (auto i : ids) ASSERT_LT(i, corpus.cves.size());
  }
}
