#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "vulnmap/error.hpp"
#include "vulnmap/text.hpp"

namespace vulnmap {

enum class CpePart { Application, OperatingSystem, Hardware, Any, NotApplicable };

inline std::string_view to_string(CpePart part) {
  switch (part) {
    case CpePart::Application: return "a";
    case CpePart::OperatingSystem: return "o";
    case CpePart::Hardware: return "h";
    case CpePart::Any: return "*";
    case CpePart::NotApplicable: return "-";
  }
  return "?";
}

/// The eleven attributes of a CPE 2.3 formatted string. Text fields hold
/// normalized values; the logical values ANY and NA stay as "*" and "-".
struct CpeRecord {
  CpePart part = CpePart::Any;
  std::string vendor;
  std::string product;
  std::string version;
  std::string update;
  std::string edition;
  std::string language;
  std::string sw_edition;
  std::string target_sw;
  std::string target_hw;
  std::string other;
  std::string raw;

  friend bool operator==(const CpeRecord&, const CpeRecord&) = default;
};

constexpr std::size_t kCpeAttributeCount = 11;
constexpr std::string_view kCpe23Prefix = "cpe:2.3:";

/// "*" (ANY) or "-" (NA). Matchers skip these values.
inline bool is_logical_value(std::string_view value) {
  return value == "*" || value == "-";
}

/// Lowercases, resolves backslash escapes and trims surrounding whitespace.
///
/// An escaped backslash stays doubled ("\\\\") and a dangling trailing
/// backslash is kept, which makes the function idempotent.
inline std::string normalize_component(std::string_view raw) {
  std::string resolved;
  resolved.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c != '\\') {
      resolved.push_back(c);
      continue;
    }
    if (i + 1 == raw.size()) {
      resolved.push_back('\\');
      break;
    }
    const char next = raw[++i];
    if (next == '\\') resolved.append("\\\\");
    else resolved.push_back(next);
  }
  return text::lower(text::trim(resolved));
}

namespace detail {

// Splits on colons that are not preceded by an escaping backslash. The
// pieces keep their escapes.
inline std::vector<std::string_view> split_unescaped_colons(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
      continue;
    }
    if (s[i] == ':') {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.push_back(s.substr(start));
  return parts;
}

inline CpePart parse_part(std::string_view field, std::string_view uri) {
  if (field == "a" || field == "A") return CpePart::Application;
  if (field == "o" || field == "O") return CpePart::OperatingSystem;
  if (field == "h" || field == "H") return CpePart::Hardware;
  if (field == "*") return CpePart::Any;
  if (field == "-") return CpePart::NotApplicable;
  throw Error(ErrorKind::MalformedCpe,
              "unknown part '" + std::string(field) + "' in '" + std::string(uri) + "'");
}

} // namespace detail

/// Parses a CPE 2.3 formatted string. Legacy `cpe:/` URIs are rejected.
inline CpeRecord parse_cpe23(std::string_view uri) {
  const auto input = text::trim(uri);
  if (input.empty()) throw Error(ErrorKind::MalformedCpe, "empty CPE string");
  if (text::lower(input.substr(0, kCpe23Prefix.size())) != kCpe23Prefix) {
    throw Error(ErrorKind::MalformedCpe, "missing 'cpe:2.3:' prefix in '" + std::string(input) + "'");
  }
  if (input.back() == '\\') {
    // A trailing escape would swallow the terminator of the last field.
    std::size_t run = 0;
    for (auto it = input.rbegin(); it != input.rend() && *it == '\\'; ++it) ++run;
    if (run % 2 == 1) {
      throw Error(ErrorKind::MalformedCpe, "dangling escape in '" + std::string(input) + "'");
    }
  }

  const auto fields = detail::split_unescaped_colons(input.substr(kCpe23Prefix.size()));
  if (fields.size() != kCpeAttributeCount) {
    throw Error(ErrorKind::MalformedCpe,
                "expected 11 attributes, found " + std::to_string(fields.size()) + " in '" +
                    std::string(input) + "'");
  }

  CpeRecord rec;
  rec.part = detail::parse_part(fields[0], input);
  std::array<std::string*, kCpeAttributeCount - 1> targets{
      &rec.vendor,     &rec.product,   &rec.version,   &rec.update,    &rec.edition,
      &rec.language,   &rec.sw_edition, &rec.target_sw, &rec.target_hw, &rec.other};
  for (std::size_t i = 0; i < targets.size(); ++i) {
    *targets[i] = normalize_component(fields[i + 1]);
  }
  rec.raw = std::string(uri);
  return rec;
}

} // namespace vulnmap
