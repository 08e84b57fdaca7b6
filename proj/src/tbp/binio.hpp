#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "tbp/types.hpp"

namespace tbp {

// Little-endian binary writer/reader over whole-file buffers.  All on-disk
// formats in this project are little-endian; this asserts the host matches
// (the supported platforms all do).

class BinWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u32(uint32_t v) { append(&v, 4); }
  void u64(uint64_t v) { append(&v, 8); }
  void f64(double v) { append(&v, 8); }
  void bytes(const void* p, size_t n) { append(p, n); }

  const std::vector<uint8_t>& data() const { return buf_; }

  void write_file(const std::string& path) const {
    std::string tmp = path + ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw IoError("cannot open for writing: " + path);
    size_t n = buf_.empty() ? 0 : std::fwrite(buf_.data(), 1, buf_.size(), f);
    bool ok = (n == buf_.size()) && std::fclose(f) == 0;
    if (!ok) {
      std::remove(tmp.c_str());
      throw IoError("write failed: " + path);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
      std::remove(tmp.c_str());
      throw IoError("rename failed: " + path);
    }
  }

 private:
  void append(const void* p, size_t n) {
    size_t off = buf_.size();
    buf_.resize(off + n);
    std::memcpy(buf_.data() + off, p, n);
  }
  std::vector<uint8_t> buf_;
};

class BinReader {
 public:
  explicit BinReader(std::vector<uint8_t> data) : buf_(std::move(data)) {}

  static BinReader from_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open for reading: " + path);
    std::fseek(f, 0, SEEK_END);
    long sz = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<uint8_t> buf(sz > 0 ? static_cast<size_t>(sz) : 0);
    if (!buf.empty() && std::fread(buf.data(), 1, buf.size(), f) != buf.size()) {
      std::fclose(f);
      throw IoError("read failed: " + path);
    }
    std::fclose(f);
    return BinReader(std::move(buf));
  }

  uint8_t u8() { uint8_t v; take(&v, 1); return v; }
  uint32_t u32() { uint32_t v; take(&v, 4); return v; }
  uint64_t u64() { uint64_t v; take(&v, 8); return v; }
  double f64() { double v; take(&v, 8); return v; }
  void bytes(void* p, size_t n) { take(p, n); }

  size_t remaining() const { return buf_.size() - pos_; }
  size_t position() const { return pos_; }
  const std::vector<uint8_t>& data() const { return buf_; }

 private:
  void take(void* p, size_t n) {
    if (pos_ + n > buf_.size()) throw FormatError("unexpected end of file");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::vector<uint8_t> buf_;
  size_t pos_ = 0;
};

// CRC32 (IEEE 802.3, reflected, poly 0xEDB88320), as used by zip/png.
inline uint32_t crc32(const uint8_t* data, size_t n, uint32_t seed = 0) {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = ~seed;
  for (size_t i = 0; i < n; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return ~c;
}

}  // namespace tbp
