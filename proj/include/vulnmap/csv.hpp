#pragma once

#include <cstddef>
#include <istream>
#include <streambuf>
#include <string>
#include <vector>

#include "vulnmap/error.hpp"

namespace vulnmap::csv {

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;   // 1-based physical line where the record starts
  bool bad_quote = false; // text followed a closing quote inside a field
};

/// Streaming RFC 4180 reader. Holds one record in memory at a time.
///
/// Quoted fields may span lines and use "" for a literal quote. Blank
/// lines are skipped. A quote that is still open at end of input throws
/// CsvStructure because the rest of the file cannot be resynchronised.
class Reader {
public:
  explicit Reader(std::istream& in, char delimiter = ',')
      : buf_(in.rdbuf()), delim_(delimiter) {
    if (buf_ == nullptr) throw Error(ErrorKind::CsvStructure, "stream has no buffer");
    skip_bom();
  }

  bool next(Row& row) {
    row.fields.clear();
    row.bad_quote = false;

    int c = buf_->sgetc();
    while (c == '\n' || c == '\r') {
      consume_newline(c);
      c = buf_->sgetc();
    }
    if (c == eof) return false;

    row.line = line_;
    std::string field;
    bool quoted = false;
    bool after_quote = false;
    for (;;) {
      c = buf_->sbumpc();
      if (quoted) {
        if (c == eof) {
          throw Error(ErrorKind::CsvStructure,
                      "unterminated quoted field starting on line " + std::to_string(row.line));
        }
        if (c == '"') {
          if (buf_->sgetc() == '"') {
            buf_->sbumpc();
            field.push_back('"');
          } else {
            quoted = false;
            after_quote = true;
          }
          continue;
        }
        if (c == '\n') ++line_;
        field.push_back(static_cast<char>(c));
        continue;
      }
      if (c == eof || c == '\n' || c == '\r') {
        if (c == '\r' && buf_->sgetc() == '\n') buf_->sbumpc();
        if (c != eof) ++line_;
        row.fields.push_back(std::move(field));
        return true;
      }
      if (c == delim_) {
        row.fields.push_back(std::move(field));
        field.clear();
        after_quote = false;
        continue;
      }
      if (c == '"' && field.empty() && !after_quote) {
        quoted = true;
        continue;
      }
      if (after_quote) row.bad_quote = true;
      field.push_back(static_cast<char>(c));
    }
  }

private:
  static constexpr int eof = std::char_traits<char>::eof();

  void skip_bom() {
    if (buf_->sgetc() != 0xEF) return;
    // Only three bytes; a stream that starts with 0xEF but is not a BOM is
    // not valid UTF-8 text anyway.
    buf_->sbumpc();
    if (buf_->sgetc() == 0xBB) buf_->sbumpc();
    if (buf_->sgetc() == 0xBF) buf_->sbumpc();
  }

  void consume_newline(int c) {
    buf_->sbumpc();
    if (c == '\r' && buf_->sgetc() == '\n') buf_->sbumpc();
    ++line_;
  }

  std::streambuf* buf_;
  char delim_;
  std::size_t line_ = 1;
};

/// Quotes a field when it contains the delimiter, a quote or a line break.
inline std::string escape(const std::string& field, char delimiter = ',') {
  if (field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string::npos) {
    return field;
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

} // namespace vulnmap::csv
