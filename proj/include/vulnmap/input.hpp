#pragma once

#include <zlib.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <streambuf>
#include <string>

#include "vulnmap/error.hpp"

namespace vulnmap {

/// Decompresses a gzip stream on the fly. Concatenated gzip members are
/// read back to back, like `zcat`.
class GzipStreambuf : public std::streambuf {
public:
  explicit GzipStreambuf(std::streambuf* source) : source_(source) {
    if (inflateInit2(&zs_, 16 + MAX_WBITS) != Z_OK) {
      throw Error(ErrorKind::Config, "zlib initialisation failed");
    }
    setg(out_.data(), out_.data(), out_.data());
  }

  ~GzipStreambuf() override { inflateEnd(&zs_); }

  GzipStreambuf(const GzipStreambuf&) = delete;
  GzipStreambuf& operator=(const GzipStreambuf&) = delete;

protected:
  int_type underflow() override {
    if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
    while (!finished_) {
      if (zs_.avail_in == 0) {
        const auto got = source_->sgetn(in_.data(), static_cast<std::streamsize>(in_.size()));
        if (got <= 0) {
          if (!member_done_) throw Error(ErrorKind::Io, "truncated gzip stream");
          finished_ = true;
          break;
        }
        zs_.next_in = reinterpret_cast<Bytef*>(in_.data());
        zs_.avail_in = static_cast<uInt>(got);
      }
      if (member_done_) {
        inflateReset(&zs_);
        member_done_ = false;
      }
      zs_.next_out = reinterpret_cast<Bytef*>(out_.data());
      zs_.avail_out = static_cast<uInt>(out_.size());
      const int rc = inflate(&zs_, Z_NO_FLUSH);
      if (rc == Z_STREAM_END) {
        member_done_ = true;
      } else if (rc != Z_OK && rc != Z_BUF_ERROR) {
        throw Error(ErrorKind::Io, std::string("gzip data error: ") +
                                                 (zs_.msg != nullptr ? zs_.msg : "unknown"));
      }
      const auto produced = out_.size() - zs_.avail_out;
      if (produced > 0) {
        setg(out_.data(), out_.data(), out_.data() + produced);
        return traits_type::to_int_type(*gptr());
      }
    }
    return traits_type::eof();
  }

private:
  std::streambuf* source_;
  z_stream zs_{};
  std::array<char, 1 << 16> in_{};
  std::array<char, 1 << 16> out_{};
  bool member_done_ = false;
  bool finished_ = false;
};

/// An input file that may be gzip-compressed; detected by the 0x1F 0x8B
/// magic bytes, not the file extension.
class InputFile {
public:
  explicit InputFile(const std::filesystem::path& path) : file_(path, std::ios::binary) {
    if (!file_) throw Error(ErrorKind::Io, "cannot open input file: " + path.string());
    auto* raw = file_.rdbuf();
    const int b0 = raw->sgetc();
    bool gz = false;
    if (b0 == 0x1F) {
      raw->sbumpc();
      gz = raw->sgetc() == 0x8B;
      raw->pubseekoff(0, std::ios::beg, std::ios::in);
    }
    if (gz) {
      gzip_ = std::make_unique<GzipStreambuf>(raw);
      stream_ = std::make_unique<std::istream>(gzip_.get());
    }
  }

  std::istream& stream() { return stream_ ? *stream_ : static_cast<std::istream&>(file_); }
  bool compressed() const { return gzip_ != nullptr; }

private:
  std::ifstream file_;
  std::unique_ptr<GzipStreambuf> gzip_;
  std::unique_ptr<std::istream> stream_;
};

} // namespace vulnmap
