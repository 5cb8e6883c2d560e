#pragma once

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnmap/error.hpp"
#include "vulnmap/records.hpp"
#include "vulnmap/repo.hpp"
#include "vulnmap/text.hpp"

namespace vulnmap {

struct PlatformEvidence {
  std::set<std::string> target_sw; // CPE target_sw values naming the platform
  std::set<std::string> keywords;  // words that name the platform in a summary
  std::set<std::string> hosts;     // domains or partial URLs of its registry

  friend bool operator==(const PlatformEvidence&, const PlatformEvidence&) = default;
};

/// Platform -> evidence table. All tokens are lowercase and, within each
/// of the three categories, a token belongs to at most one platform.
struct PlatformLookup {
  std::map<std::string, PlatformEvidence> platforms;

  friend bool operator==(const PlatformLookup&, const PlatformLookup&) = default;
};

namespace detail {

inline std::string strip_pattern(std::string_view pattern) {
  auto p = text::lower(text::trim(pattern));
  if (auto pos = p.find("://"); pos != std::string::npos) p.erase(0, pos + 3);
  if (text::starts_with(p, "www.")) p.erase(0, 4);
  return p;
}

inline void validate(const PlatformLookup& lookup) {
  auto check = [&](auto member, const char* category) {
    std::map<std::string, std::string> owner;
    for (const auto& [platform, ev] : lookup.platforms) {
      for (const auto& token : ev.*member) {
        if (token.empty()) {
          throw Error(ErrorKind::Config, std::string("empty ") + category + " entry for " + platform);
        }
        auto [it, inserted] = owner.emplace(token, platform);
        if (!inserted) {
          throw Error(ErrorKind::Config, std::string(category) + " token '" + token +
                                             "' listed under both " + it->second + " and " + platform);
        }
      }
    }
  };
  check(&PlatformEvidence::target_sw, "target_sw");
  check(&PlatformEvidence::keywords, "keywords");
  check(&PlatformEvidence::hosts, "hosts");
}

} // namespace detail

/// Built-in table for the seven package managers studied. The same content
/// ships as config/lookup.json.
inline PlatformLookup default_lookup() {
  PlatformLookup l;
  l.platforms["Go"] = {{"go", "golang"}, {"golang", "go module"}, {"pkg.go.dev", "godoc.org", "golang.org/x"}};
  l.platforms["Maven"] = {{"maven", "java"},
                          {"maven"},
                          {"mvnrepository.com", "search.maven.org", "repo1.maven.org", "central.sonatype.com"}};
  l.platforms["NPM"] = {{"node.js", "nodejs", "npm"}, {"npm", "node.js", "nodejs"}, {"npmjs.com", "npmjs.org"}};
  l.platforms["NuGet"] = {{".net", "nuget"}, {"nuget"}, {"nuget.org"}};
  l.platforms["Packagist"] = {{"composer", "packagist"}, {"packagist", "composer"}, {"packagist.org"}};
  l.platforms["Pypi"] = {{"python", "pypi"}, {"pypi", "pip"}, {"pypi.org", "pypi.python.org"}};
  l.platforms["Ruby"] = {{"ruby", "rails", "rubygems"}, {"rubygems", "ruby gem"}, {"rubygems.org"}};
  return l;
}

/// Reads `{ "<platform>": {"target_sw": [...], "keywords": [...], "hosts": [...]}, ... }`.
/// Missing categories are empty. Tokens are lowercased; host patterns lose
/// any scheme and "www." prefix.
inline PlatformLookup parse_lookup(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("lookup table is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::Config, "lookup table must be a JSON object");

  PlatformLookup lookup;
  for (const auto& [platform, body] : doc.items()) {
    if (!body.is_object()) throw Error(ErrorKind::Config, "entry for " + platform + " must be an object");
    PlatformEvidence ev;
    auto read = [&](const char* key, std::set<std::string>& dst, bool host) {
      auto it = body.find(key);
      if (it == body.end()) return;
      if (!it->is_array()) throw Error(ErrorKind::Config, platform + "." + key + " must be an array");
      for (const auto& v : *it) {
        if (!v.is_string()) throw Error(ErrorKind::Config, platform + "." + key + " must hold strings");
        const auto s = v.get<std::string>();
        dst.insert(host ? detail::strip_pattern(s) : text::lower(text::trim(s)));
      }
    };
    read("target_sw", ev.target_sw, false);
    read("keywords", ev.keywords, false);
    read("hosts", ev.hosts, true);
    lookup.platforms.emplace(platform, std::move(ev));
  }
  detail::validate(lookup);
  return lookup;
}

inline nlohmann::ordered_json lookup_to_json(const PlatformLookup& lookup) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (const auto& [platform, ev] : lookup.platforms) {
    doc[platform] = {{"target_sw", ev.target_sw}, {"keywords", ev.keywords}, {"hosts", ev.hosts}};
  }
  return doc;
}

/// True when a reference URL falls under a host pattern. "npmjs.com"
/// matches the host itself and its subdomains; "golang.org/x" also
/// requires the path prefix. Matches end on a path or host boundary.
inline bool matches_host_pattern(std::string_view url, std::string_view pattern) {
  if (pattern.empty()) return false;
  const auto parts = split_url(url);
  if (parts.host.empty()) return false;
  std::string subject = parts.host;
  subject += text::lower(parts.path);

  auto boundary_after = [&](std::size_t end) {
    return end == subject.size() || pattern.back() == '/' || subject[end] == '/' ||
           subject[end] == '?' || subject[end] == '#';
  };
  if (text::starts_with(subject, pattern) && boundary_after(pattern.size())) return true;
  // Subdomain hit: ".pattern" starting inside the host part.
  for (auto pos = subject.find(pattern); pos != std::string::npos; pos = subject.find(pattern, pos + 1)) {
    if (pos == 0 || pos > parts.host.size()) continue;
    if (subject[pos - 1] == '.' && boundary_after(pos + pattern.size())) return true;
  }
  return false;
}

struct PlatformInference {
  std::optional<std::string> platform;
  bool ambiguous = false;
  std::vector<std::string> candidates; // every platform with evidence, sorted
};

/// Platform named by the summary (whole-word keyword, case-insensitive) or
/// by a reference URL. More than one platform with evidence is ambiguous
/// and yields no platform.
inline PlatformInference infer_platform(const CveRecord& cve, const PlatformLookup& lookup) {
  PlatformInference out;
  const auto summary = text::lower(cve.summary);
  for (const auto& [platform, ev] : lookup.platforms) {
    bool hit = false;
    for (const auto& kw : ev.keywords) {
      if (text::contains_word(summary, kw)) {
        hit = true;
        break;
      }
    }
    for (auto it = ev.hosts.begin(); !hit && it != ev.hosts.end(); ++it) {
      for (const auto& ref : cve.references) {
        if (matches_host_pattern(ref, *it)) {
          hit = true;
          break;
        }
      }
    }
    if (hit) out.candidates.push_back(platform);
  }
  if (out.candidates.size() == 1) out.platform = out.candidates.front();
  out.ambiguous = out.candidates.size() > 1;
  return out;
}

} // namespace vulnmap
