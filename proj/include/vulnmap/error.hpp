#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vulnmap {

enum class ErrorKind {
  MalformedCpe,
  CsvStructure,
  JsonStructure,
  EmptyInput,
  SinkWrite,
  Config,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedCpe: return "MalformedCpe";
    case ErrorKind::CsvStructure: return "CsvStructure";
    case ErrorKind::JsonStructure: return "JsonStructure";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::SinkWrite: return "SinkWrite";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Single exception type for the library; `kind()` tells callers which
/// contract was violated.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

} // namespace vulnmap
