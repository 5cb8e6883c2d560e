#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vulnmap/error.hpp"
#include "vulnmap/text.hpp"

namespace vulnmap::fuzzy {

inline constexpr double kDefaultCutoff = 0.3;
inline constexpr char kSentinel = '-';

/// Lowercases and collapses every run of non-alphanumeric ASCII into a
/// single '-', dropping leading and trailing separators. Bytes >= 0x80 are
/// kept as-is.
inline std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_sep = false;
  for (char c : s) {
    const bool keep = text::is_alnum(c) || static_cast<unsigned char>(c) >= 0x80;
    if (!keep) {
      pending_sep = true;
      continue;
    }
    if (pending_sep && !out.empty()) out.push_back(kSentinel);
    pending_sep = false;
    out.push_back(text::to_lower(c));
  }
  return out;
}

struct GramProfile {
  std::map<std::string, std::uint32_t> grams;
  std::uint64_t sum_squares = 0;
  double magnitude = 0.0;
  std::string source;
};

/// Character n-grams of `s` padded with one sentinel on each side. When
/// the padded string is shorter than `gram_size` it forms a single gram.
inline GramProfile gram_profile(std::string_view s, std::size_t gram_size) {
  if (gram_size < 2) throw Error(ErrorKind::Config, "gram size must be at least 2");
  GramProfile profile;
  profile.source = normalize(s);
  if (profile.source.empty()) throw Error(ErrorKind::EmptyInput, "string normalizes to empty");

  const std::string padded = kSentinel + profile.source + kSentinel;
  if (padded.size() < gram_size) {
    profile.grams[padded] = 1;
  } else {
    for (std::size_t i = 0; i + gram_size <= padded.size(); ++i) {
      ++profile.grams[padded.substr(i, gram_size)];
    }
  }
  for (const auto& [gram, count] : profile.grams) {
    profile.sum_squares += std::uint64_t{count} * count;
  }
  profile.magnitude = std::sqrt(static_cast<double>(profile.sum_squares));
  return profile;
}

/// Cosine of two gram profiles. The dot product and norms are kept in
/// integers, so the result is exactly symmetric.
inline double cosine(const GramProfile& a, const GramProfile& b) {
  const auto& small = a.grams.size() <= b.grams.size() ? a.grams : b.grams;
  const auto& large = a.grams.size() <= b.grams.size() ? b.grams : a.grams;
  std::uint64_t dot = 0;
  for (const auto& [gram, count] : small) {
    if (auto it = large.find(gram); it != large.end()) dot += std::uint64_t{count} * it->second;
  }
  if (dot == 0) return 0.0;
  const double denom = std::sqrt(static_cast<double>(a.sum_squares) * static_cast<double>(b.sum_squares));
  return std::min(1.0, static_cast<double>(dot) / denom);
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t subst = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, subst});
      diag = up;
    }
  }
  return row[b.size()];
}

/// Trigram cosine (bigram when the trigram cosine is zero), blended with
/// edit similarity by taking the larger of the two. Inputs are normalized
/// first; throws EmptyInput when either side normalizes to nothing.
inline double similarity(std::string_view a, std::string_view b) {
  const auto na = normalize(a);
  const auto nb = normalize(b);
  if (na.empty() || nb.empty()) throw Error(ErrorKind::EmptyInput, "string normalizes to empty");
  if (na == nb) return 1.0;

  double score = cosine(gram_profile(na, 3), gram_profile(nb, 3));
  if (score == 0.0) score = cosine(gram_profile(na, 2), gram_profile(nb, 2));

  const auto longest = std::max(na.size(), nb.size());
  const double edit = 1.0 - static_cast<double>(levenshtein(na, nb)) / static_cast<double>(longest);
  return std::clamp(std::max(score, edit), 0.0, 1.0);
}

struct Match {
  std::string candidate;
  double score = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

/// Highest-scoring candidate with score >= cutoff. Ties go to the shorter
/// candidate, then the lexicographically smaller one. Candidates that
/// normalize to empty are ignored.
inline std::optional<Match> best_match(std::string_view query, std::span<const std::string> candidates,
                                       double cutoff = kDefaultCutoff) {
  if (normalize(query).empty()) return std::nullopt;
  std::optional<Match> best;
  for (const auto& cand : candidates) {
    if (normalize(cand).empty()) continue;
    const double score = similarity(query, cand);
    if (score < cutoff) continue;
    const bool better =
        !best || score > best->score ||
        (score == best->score && (cand.size() < best->candidate.size() ||
                                  (cand.size() == best->candidate.size() && cand < best->candidate)));
    if (better) best = Match{cand, score};
  }
  return best;
}

} // namespace vulnmap::fuzzy
