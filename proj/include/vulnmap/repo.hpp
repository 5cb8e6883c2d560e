#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vulnmap/records.hpp"
#include "vulnmap/text.hpp"

namespace vulnmap {

inline constexpr std::array<std::string_view, 3> kRepoProviders{"github.com", "bitbucket.org",
                                                               "gitlab.com"};

inline bool is_repo_provider(std::string_view host) {
  for (auto p : kRepoProviders) {
    if (host == p) return true;
  }
  return false;
}

struct UrlParts {
  std::string host; // lowercased, "www." removed
  std::string_view path;
};

/// Splits a URL into host and path while ignoring the scheme, userinfo,
/// port and a leading "www.". Also accepts scp-style `git@host:owner/repo`.
inline UrlParts split_url(std::string_view url) {
  url = text::trim(url);
  if (auto pos = url.find("://"); pos != std::string_view::npos) {
    url.remove_prefix(pos + 3);
  }
  const auto authority_end = url.find_first_of("/?#");
  if (auto at = url.substr(0, authority_end).rfind('@'); at != std::string_view::npos) {
    url.remove_prefix(at + 1);
  }
  auto host_end = url.find_first_of(":/?#");
  std::string_view host = url.substr(0, host_end);
  std::string_view rest = host_end == std::string_view::npos ? std::string_view{} : url.substr(host_end);
  if (!rest.empty() && rest.front() == ':') {
    // Numeric port, or the path separator of an scp-style remote.
    std::size_t i = 1;
    while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
    if (i > 1 && (i == rest.size() || rest[i] == '/' || rest[i] == '?' || rest[i] == '#')) {
      rest.remove_prefix(i);
    } else {
      rest.remove_prefix(1);
    }
  }
  std::string h = text::lower(host);
  if (text::starts_with(h, "www.")) h.erase(0, 4);
  while (!h.empty() && h.back() == '.') h.pop_back();
  return {std::move(h), rest};
}

/// First two path segments of a github/gitlab/bitbucket URL, lowercased,
/// with ".git" dropped from the repository name.
inline std::optional<RepoRef> extract_repo_ref(std::string_view url) {
  auto parts = split_url(url);
  if (!is_repo_provider(parts.host)) return std::nullopt;

  auto path = parts.path;
  if (auto cut = path.find_first_of("?#"); cut != std::string_view::npos) path = path.substr(0, cut);

  std::vector<std::string_view> segments;
  for (auto seg : text::split(path, '/')) {
    seg = text::trim(seg);
    if (!seg.empty()) segments.push_back(seg);
    if (segments.size() == 2) break;
  }
  if (segments.size() < 2) return std::nullopt;

  std::string owner = text::lower(segments[0]);
  std::string repository = text::lower(segments[1]);
  if (text::ends_with(repository, ".git")) repository.resize(repository.size() - 4);
  if (owner.empty() || repository.empty()) return std::nullopt;
  return RepoRef{std::move(parts.host), std::move(owner), std::move(repository)};
}

} // namespace vulnmap
