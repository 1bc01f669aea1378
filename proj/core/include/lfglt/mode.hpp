/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <cstdint>

namespace lfglt {

// DC plus the 8 directional residual classes; directional ids are ordered by
// ascending angle of the dominant edge direction against the horizontal axis.
enum class ModeId : uint8_t {
  DC = 0,
  Dir_m3pi8 = 1, // -3pi/8
  Dir_mpi4 = 2,  // -pi/4
  Dir_mpi8 = 3,  // -pi/8
  Dir_0 = 4,     // horizontal
  Dir_pi8 = 5,
  Dir_pi4 = 6,
  Dir_3pi8 = 7,
  Dir_pi2 = 8, // vertical
};

inline constexpr int kModeCount = 9;

inline constexpr std::array<double, 8> kModeAngles = {
    -3 * 0.39269908169872414, -2 * 0.39269908169872414,
    -1 * 0.39269908169872414, 0.0,
    1 * 0.39269908169872414,  2 * 0.39269908169872414,
    3 * 0.39269908169872414,  4 * 0.39269908169872414}; // multiples of pi/8

inline double mode_angle(ModeId m) {
  return kModeAngles[size_t(uint8_t(m)) - 1];
}

inline bool is_directional(ModeId m) { return m != ModeId::DC; }

} // namespace lfglt
