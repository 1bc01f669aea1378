/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "lfglt/bitstream.hpp"

#include <fstream>

namespace lfglt {

std::vector<uint8_t> serialize_header(const StreamHeader &h) {
  ByteWriter w;
  w.magic("LFGC");
  w.u8(h.version);
  w.u16(h.raw_width);
  w.u16(h.raw_height);
  w.u8(h.bit_depth);
  w.u8(h.bayer_phase);
  w.u8(h.qp);
  w.u8(h.flags);
  w.u64(h.bank_hash);
  for (double a : h.calib.affine) w.f64(a);
  w.f64(h.calib.macro_pixel_pitch);
  w.f64(h.calib.row_offset);
  w.u16(uint16_t(h.calib.views_u));
  w.u16(uint16_t(h.calib.views_v));
  w.u16(uint16_t(h.calib.sai_width));
  w.u16(uint16_t(h.calib.sai_height));
  w.u32(uint32_t(h.payload_count()));
  for (uint64_t off : h.offsets) w.u64(off);
  return w.take();
}

StreamHeader parse_header(ByteReader &r) {
  r.expect_magic("LFGC");
  StreamHeader h;
  h.version = r.u8();
  if (h.version != kStreamVersion)
    fail(Err::VersionUnsupported, "unsupported stream version");
  h.raw_width = r.u16();
  h.raw_height = r.u16();
  h.bit_depth = r.u8();
  h.bayer_phase = r.u8();
  h.qp = r.u8();
  h.flags = r.u8();
  h.bank_hash = r.u64();
  for (double &a : h.calib.affine) a = r.f64();
  h.calib.macro_pixel_pitch = r.f64();
  h.calib.row_offset = r.f64();
  h.calib.views_u = r.u16();
  h.calib.views_v = r.u16();
  h.calib.sai_width = r.u16();
  h.calib.sai_height = r.u16();
  const uint32_t count = r.u32();
  if (count > (1u << 20)) fail(Err::CorruptStream, "absurd payload count");
  h.offsets.resize(count ? count + 1 : 0);
  for (auto &off : h.offsets) off = r.u64();
  if (!h.offsets.empty()) {
    if (h.offsets.front() != 0)
      fail(Err::OffsetOutOfRange, "first payload offset must be 0");
    for (size_t i = 1; i < h.offsets.size(); ++i)
      if (h.offsets[i] <= h.offsets[i - 1])
        fail(Err::OffsetOutOfRange, "payload offsets not strictly increasing");
  }
  return h;
}

std::vector<uint8_t> write_stream(StreamHeader header,
                                  const std::vector<std::vector<uint8_t>> &payloads) {
  header.offsets.clear();
  if (!payloads.empty()) {
    header.offsets.reserve(payloads.size() + 1);
    uint64_t off = 0;
    header.offsets.push_back(0);
    for (const auto &p : payloads) {
      off += p.size();
      header.offsets.push_back(off);
    }
  }
  std::vector<uint8_t> out = serialize_header(header);
  for (const auto &p : payloads) out.insert(out.end(), p.begin(), p.end());
  return out;
}

void write_stream_file(const std::string &path, StreamHeader header,
                       const std::vector<std::vector<uint8_t>> &payloads) {
  auto bytes = write_stream(std::move(header), payloads);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char *>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) fail(Err::IoFailure, "write failed for " + path);
}

void StreamReader::parse(size_t total_size) {
  ByteReader r(bytes_);
  header_ = parse_header(r);
  header_size_ = r.pos();
  if (!header_.offsets.empty()) {
    if (header_size_ + header_.offsets.back() > total_size)
      fail(Err::OffsetOutOfRange, "payload offsets run past end of stream");
    total_payload_bytes_ = header_.offsets.back();
  }
}

StreamReader StreamReader::from_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) fail(Err::IoFailure, "cannot open " + path);
  const size_t total = size_t(in.tellg());
  in.seekg(0);

  StreamReader sr;
  sr.path_ = path;
  // Fixed part of the header up to and including the payload count, then
  // exactly the offset table; payload bytes are only touched by payload().
  constexpr size_t kFixedHeaderBytes = 97;
  const size_t first = std::min(total, kFixedHeaderBytes);
  sr.bytes_.resize(first);
  in.read(reinterpret_cast<char *>(sr.bytes_.data()), std::streamsize(first));
  if (!in) fail(Err::IoFailure, "read failed for " + path);
  if (first == kFixedHeaderBytes) {
    uint32_t count = 0;
    for (int i = 0; i < 4; ++i)
      count |= uint32_t(sr.bytes_[93 + size_t(i)]) << (8 * i);
    if (count > (1u << 20)) fail(Err::CorruptStream, "absurd payload count");
    const size_t table = count ? (size_t(count) + 1) * 8 : 0;
    const size_t more = std::min(total - first, table);
    sr.bytes_.resize(first + more);
    in.read(reinterpret_cast<char *>(sr.bytes_.data() + first),
            std::streamsize(more));
    if (!in) fail(Err::IoFailure, "read failed for " + path);
  }
  sr.parse(total);
  return sr;
}

StreamReader StreamReader::from_bytes(std::vector<uint8_t> bytes) {
  StreamReader sr;
  sr.bytes_ = std::move(bytes);
  sr.parse(sr.bytes_.size());
  return sr;
}

std::vector<uint8_t> StreamReader::payload(size_t index) {
  if (index >= header_.payload_count())
    fail(Err::OffsetOutOfRange, "payload index out of range");
  const uint64_t begin = header_.offsets[index];
  const uint64_t end = header_.offsets[index + 1];
  const size_t size = size_t(end - begin);
  payload_bytes_read_ += size;

  std::vector<uint8_t> out(size);
  if (!path_.empty()) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) fail(Err::IoFailure, "cannot open " + path_);
    in.seekg(std::streamoff(header_size_ + begin));
    in.read(reinterpret_cast<char *>(out.data()), std::streamsize(size));
    if (!in) fail(Err::TruncatedStream, "payload range missing from file");
  } else {
    if (header_size_ + end > bytes_.size())
      fail(Err::TruncatedStream, "payload range missing from stream");
    std::copy_n(bytes_.begin() + std::ptrdiff_t(header_size_ + begin), size,
                out.begin());
  }
  return out;
}

} // namespace lfglt
