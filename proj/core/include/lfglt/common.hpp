/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lfglt {

enum class Err {
  NonInvertibleAffine,
  InconsistentParams,
  DuplicatePosition,
  ShapeMismatch,
  NoReferences,
  QPOutOfRange,
  TruncatedStream,
  CountMismatch,
  CorruptStream,
  BadMagic,
  VersionUnsupported,
  OffsetOutOfRange,
  BankMismatch,
  GraphMismatch,
  SingularMatrix,
  IoFailure,
  InvalidArgument,
};

class CodecError : public std::runtime_error {
public:
  CodecError(Err code, const std::string &what)
      : std::runtime_error(what), code_(code) {}
  Err code() const { return code_; }

private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string &what) {
  throw CodecError(code, what);
}

// 64-bit FNV-1a, used to bind bitstreams to the graph bank they were coded with.
inline uint64_t fnv1a64(std::span<const uint8_t> bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Small deterministic PRNG (splitmix64). The standard distributions are not
// pinned across implementations, so synthetic data goes through this instead.
class SplitMix64 {
public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform in [0, n)
  uint64_t next_below(uint64_t n) { return n ? next_u64() % n : 0; }

  double next_range(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

private:
  uint64_t state_;
};

// Little-endian byte serialization helpers shared by the file formats.
class ByteWriter {
public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) {
    buf_.push_back(static_cast<uint8_t>(v));
    buf_.push_back(static_cast<uint8_t>(v >> 8));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i)
      buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i)
      buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    u64(bits);
  }
  void bytes(std::span<const uint8_t> b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
  }
  void magic(const char m[4]) {
    buf_.insert(buf_.end(), m, m + 4);
  }

  const std::vector<uint8_t> &data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }
  size_t size() const { return buf_.size(); }

private:
  std::vector<uint8_t> buf_;
};

class ByteReader {
public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  void expect_magic(const char m[4], Err code = Err::BadMagic) {
    need(4);
    if (std::memcmp(data_.data() + pos_, m, 4) != 0)
      fail(code, std::string("bad magic, expected ") + std::string(m, 4));
    pos_ += 4;
  }
  std::span<const uint8_t> bytes(size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  size_t pos() const { return pos_; }
  size_t remaining() const { return data_.size() - pos_; }

private:
  void need(size_t n) {
    if (pos_ + n > data_.size())
      fail(Err::TruncatedStream, "unexpected end of data");
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

} // namespace lfglt
