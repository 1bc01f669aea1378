/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "lfglt/entropy.hpp"

#include <cmath>

namespace lfglt {

namespace {
constexpr uint32_t kTopValue = 1u << 24;
constexpr int kProbBits = 12;
} // namespace

void RangeEncoder::shift_low() {
  if (uint32_t(low_ >> 32) != 0 || uint32_t(low_) < 0xFF000000u) {
    uint8_t carry = uint8_t(low_ >> 32);
    uint8_t temp = cache_;
    do {
      out_.push_back(uint8_t(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = uint8_t(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ << 8) & 0xFFFFFFFFull;
}

void RangeEncoder::encode_bit(BitProb &prob, int bit) {
  const uint32_t bound = (range_ >> kProbBits) * prob.p0;
  if (!bit) {
    range_ = bound;
  } else {
    low_ += bound;
    range_ -= bound;
  }
  prob.update(bit);
  while (range_ < kTopValue) {
    range_ <<= 8;
    shift_low();
  }
}

std::vector<uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  // The first emitted byte is the initial zero cache; keep it, the decoder
  // consumes it during priming.
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> data) : data_(data) {
  for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ >= data_.size())
    fail(Err::TruncatedStream, "range decoder ran past end of payload");
  return data_[pos_++];
}

int RangeDecoder::decode_bit(BitProb &prob) {
  const uint32_t bound = (range_ >> kProbBits) * prob.p0;
  int bit;
  if (code_ < bound) {
    range_ = bound;
    bit = 0;
  } else {
    code_ -= bound;
    range_ -= bound;
    bit = 1;
  }
  prob.update(bit);
  while (range_ < kTopValue) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
  return bit;
}

void encode_level(RangeEncoder &rc, BandContexts &ctx, int32_t level) {
  rc.encode_bit(ctx.zero, level == 0 ? 0 : 1);
  if (level == 0) return;
  rc.encode_bit(ctx.sign, level < 0 ? 1 : 0);
  const uint64_t mag = uint64_t(level < 0 ? -(int64_t)level : level);
  // Exp-Golomb order 0 of mag-1, prefix/suffix bits each context-coded.
  const uint64_t v = mag; // v >= 1
  int k = 0;
  while ((v >> (k + 1)) != 0) ++k;
  for (int i = 0; i < k; ++i)
    rc.encode_bit(ctx.prefix[size_t(std::min(i, 17))], 1);
  rc.encode_bit(ctx.prefix[size_t(std::min(k, 17))], 0);
  for (int i = k - 1; i >= 0; --i)
    rc.encode_bit(ctx.suffix, int((v >> i) & 1));
}

int32_t decode_level(RangeDecoder &rc, BandContexts &ctx) {
  if (rc.decode_bit(ctx.zero) == 0) return 0;
  const int neg = rc.decode_bit(ctx.sign);
  int k = 0;
  while (rc.decode_bit(ctx.prefix[size_t(std::min(k, 17))]) == 1) {
    if (++k > kMaxMagnitudeBits)
      fail(Err::CorruptStream, "level magnitude prefix too long");
  }
  uint64_t v = 1;
  for (int i = 0; i < k; ++i)
    v = (v << 1) | uint64_t(rc.decode_bit(ctx.suffix));
  const int64_t mag = int64_t(v);
  return int32_t(neg ? -mag : mag);
}

std::vector<uint8_t> encode_levels(std::span<const int32_t> levels,
                                   std::span<const uint8_t> band_of) {
  if (!band_of.empty() && band_of.size() != levels.size())
    fail(Err::ShapeMismatch, "band map length mismatch");
  RangeEncoder rc;
  LevelContexts ctx;
  for (size_t i = 0; i < levels.size(); ++i) {
    const int band = band_of.empty() ? 0 : std::min<int>(band_of[i], kBandCount - 1);
    encode_level(rc, ctx.bands[size_t(band)], levels[i]);
  }
  return rc.finish();
}

std::vector<int32_t> decode_levels(std::span<const uint8_t> bytes,
                                   size_t expected_count,
                                   std::span<const uint8_t> band_of) {
  if (!band_of.empty() && band_of.size() != expected_count)
    fail(Err::ShapeMismatch, "band map length mismatch");
  RangeDecoder rc(bytes);
  LevelContexts ctx;
  std::vector<int32_t> out;
  out.reserve(expected_count);
  for (size_t i = 0; i < expected_count; ++i) {
    const int band = band_of.empty() ? 0 : std::min<int>(band_of[i], kBandCount - 1);
    out.push_back(decode_level(rc, ctx.bands[size_t(band)]));
  }
  return out;
}

} // namespace lfglt
