/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lfglt/common.hpp"

namespace lfglt {

// Adaptive binary probability state: 12-bit probability of a zero bit,
// shifted toward each observation by 1/32 (shift = 5).
struct BitProb {
  uint16_t p0 = 2048;

  void update(int bit) {
    if (bit)
      p0 = uint16_t(p0 - (p0 >> 5));
    else
      p0 = uint16_t(p0 + ((4096 - p0) >> 5));
  }
};

// 32-bit binary range coder with carry propagation (byte cache + pending-FF
// run). Streams are byte-exact for identical inputs on any platform.
class RangeEncoder {
public:
  void encode_bit(BitProb &prob, int bit);
  std::vector<uint8_t> finish();

private:
  void shift_low();

  std::vector<uint8_t> out_;
  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t cache_size_ = 1;
};

class RangeDecoder {
public:
  explicit RangeDecoder(std::span<const uint8_t> data);
  int decode_bit(BitProb &prob);
  size_t bytes_consumed() const { return pos_; }

private:
  uint8_t next_byte();

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
};

// Context set for one coefficient band: zero flag, sign, Exp-Golomb prefix
// bits (per position, capped) and suffix bits.
struct BandContexts {
  BitProb zero;
  BitProb sign;
  std::array<BitProb, 18> prefix;
  BitProb suffix;
};

inline constexpr int kBandCount = 3; // low, high level 2, high level 1

struct LevelContexts {
  std::array<BandContexts, kBandCount> bands;
};

// Magnitude cap guards decoding of corrupt data.
inline constexpr int kMaxMagnitudeBits = 40;

void encode_level(RangeEncoder &rc, BandContexts &ctx, int32_t level);
int32_t decode_level(RangeDecoder &rc, BandContexts &ctx);

// Standalone level codec: `band_of[i]` selects the context band of level i
// (all zero when empty). Self-terminating given the expected count.
std::vector<uint8_t> encode_levels(std::span<const int32_t> levels,
                                   std::span<const uint8_t> band_of = {});
std::vector<int32_t> decode_levels(std::span<const uint8_t> bytes,
                                   size_t expected_count,
                                   std::span<const uint8_t> band_of = {});

} // namespace lfglt
