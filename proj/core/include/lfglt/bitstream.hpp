/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lfglt/raw_image.hpp"

namespace lfglt {

inline constexpr uint8_t kStreamVersion = 1;

// Flags byte of the stream header.
inline constexpr uint8_t kFlagIntra = 0x01;
inline constexpr uint8_t kFlagLearnedGraph = 0x02;

struct StreamHeader {
  uint8_t version = kStreamVersion;
  uint16_t raw_width = 0;
  uint16_t raw_height = 0;
  uint8_t bit_depth = 8;
  uint8_t bayer_phase = 0;
  uint8_t qp = 4;
  uint8_t flags = kFlagIntra | kFlagLearnedGraph;
  uint64_t bank_hash = 0;
  CalibrationParams calib;
  // payload_count + 1 entries, relative to the end of the header, strictly
  // increasing (payloads are never empty: a flushed coder is >= 5 bytes).
  std::vector<uint64_t> offsets;

  size_t payload_count() const {
    return offsets.empty() ? 0 : offsets.size() - 1;
  }
  bool intra() const { return flags & kFlagIntra; }
  bool learned_graph() const { return flags & kFlagLearnedGraph; }
};

std::vector<uint8_t> serialize_header(const StreamHeader &h);
StreamHeader parse_header(ByteReader &r);

// Assemble a full stream: header (offsets computed here) + payloads.
std::vector<uint8_t> write_stream(StreamHeader header,
                                  const std::vector<std::vector<uint8_t>> &payloads);
void write_stream_file(const std::string &path, StreamHeader header,
                       const std::vector<std::vector<uint8_t>> &payloads);

// Random-access reader. Payload reads touch only the requested byte range,
// and the reader keeps count so random-access cost is measurable.
class StreamReader {
public:
  static StreamReader from_file(const std::string &path);
  static StreamReader from_bytes(std::vector<uint8_t> bytes);

  const StreamHeader &header() const { return header_; }
  std::vector<uint8_t> payload(size_t index);

  size_t payload_bytes_read() const { return payload_bytes_read_; }
  size_t total_payload_bytes() const { return total_payload_bytes_; }

private:
  StreamReader() = default;
  void parse(size_t total_size);

  std::string path_;            // non-empty for file-backed readers
  std::vector<uint8_t> bytes_;  // header bytes (file) or whole stream (memory)
  StreamHeader header_;
  size_t header_size_ = 0;
  size_t total_payload_bytes_ = 0;
  size_t payload_bytes_read_ = 0;
};

} // namespace lfglt
