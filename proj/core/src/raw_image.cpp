/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "lfglt/raw_image.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace lfglt {

void RawLensletImage::validate() const {
  if (width <= 0 || height <= 0)
    fail(Err::ShapeMismatch, "raw image has empty canvas");
  if (bit_depth < 8 || bit_depth > 16)
    fail(Err::InvalidArgument, "bit_depth must be in [8, 16]");
  if (samples.size() != size_t(width) * height)
    fail(Err::ShapeMismatch, "sample buffer does not match canvas");
  const uint16_t maxv = max_value();
  for (uint16_t s : samples)
    if (s > maxv) fail(Err::InvalidArgument, "sample exceeds bit depth");
}

bool CalibrationParams::affine_invertible() const {
  return std::abs(affine_det()) > 1e-12;
}

int CalibrationParams::pitch_int() const {
  return int(std::lround(macro_pixel_pitch));
}

int CalibrationParams::row_offset_int() const {
  return int(std::lround(row_offset));
}

void CalibrationParams::validate(int raw_width, int raw_height) const {
  if (!affine_invertible())
    fail(Err::NonInvertibleAffine, "affine linear part is singular");
  if (views_u < 1 || views_v < 1)
    fail(Err::InconsistentParams, "views_u/views_v must be >= 1");
  if (sai_width < 1 || sai_height < 1)
    fail(Err::InconsistentParams, "sai dimensions must be >= 1");
  // Integerized lattice: the macro-pixel pitch must tile into exactly
  // views_u columns so that every calibrated pixel owns an SAI slot.
  if (pitch_int() != views_u)
    fail(Err::InconsistentParams,
         "macro_pixel_pitch must round to views_u (macro-pixels must tile)");
  const int ro = row_offset_int();
  if (ro < 0 || ro >= views_u)
    fail(Err::InconsistentParams, "row_offset must round into [0, views_u)");
  if (raw_width != canvas_width() || raw_height != canvas_height())
    fail(Err::InconsistentParams,
         "canvas does not equal sai dimensions times view counts");
}

void CalibrationParams::validate_for_codec() const {
  if (sai_width < 8 || sai_height < 8)
    fail(Err::InconsistentParams, "coding requires sai dimensions >= 8");
}

std::vector<uint8_t> serialize_lfraw(const RawLensletImage &img) {
  img.validate();
  ByteWriter w;
  w.magic("LFRW");
  w.u16(uint16_t(img.width));
  w.u16(uint16_t(img.height));
  w.u8(uint8_t(img.bit_depth));
  w.u8(uint8_t(img.phase));
  for (uint16_t s : img.samples) w.u16(s);
  return w.take();
}

RawLensletImage parse_lfraw(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("LFRW");
  RawLensletImage img;
  img.width = r.u16();
  img.height = r.u16();
  img.bit_depth = r.u8();
  img.phase = static_cast<BayerPhase>(r.u8());
  if (uint8_t(img.phase) > 3) fail(Err::CorruptStream, "bad bayer phase");
  // Check the declared size against the actual payload before allocating.
  if (r.remaining() != size_t(img.width) * img.height * 2)
    fail(Err::TruncatedStream, "sample payload does not match declared size");
  img.samples.resize(size_t(img.width) * img.height);
  for (auto &s : img.samples) s = r.u16();
  img.validate();
  return img;
}

namespace {

std::vector<uint8_t> read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoFailure, "cannot open " + path);
  std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::string &path, std::span<const uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char *>(data.data()),
            std::streamsize(data.size()));
  if (!out) fail(Err::IoFailure, "write failed for " + path);
}

} // namespace

void write_lfraw(const std::string &path, const RawLensletImage &img) {
  auto bytes = serialize_lfraw(img);
  write_file(path, bytes);
}

RawLensletImage read_lfraw(const std::string &path) {
  auto bytes = read_file(path);
  return parse_lfraw(bytes);
}

void write_calib_json(const std::string &path, const CalibrationParams &p) {
  nlohmann::json j;
  j["affine"] = p.affine;
  j["macro_pixel_pitch"] = p.macro_pixel_pitch;
  j["row_offset"] = p.row_offset;
  j["views_u"] = p.views_u;
  j["views_v"] = p.views_v;
  j["sai_width"] = p.sai_width;
  j["sai_height"] = p.sai_height;
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

CalibrationParams read_calib_json(const std::string &path) {
  std::ifstream in(path);
  if (!in) fail(Err::IoFailure, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
    CalibrationParams p;
    auto aff = j.at("affine");
    if (aff.size() != 6) fail(Err::InconsistentParams, "affine needs 6 numbers");
    for (int i = 0; i < 6; ++i) p.affine[size_t(i)] = aff.at(size_t(i)).get<double>();
    p.macro_pixel_pitch = j.at("macro_pixel_pitch").get<double>();
    p.row_offset = j.at("row_offset").get<double>();
    p.views_u = j.at("views_u").get<int>();
    p.views_v = j.at("views_v").get<int>();
    p.sai_width = j.at("sai_width").get<int>();
    p.sai_height = j.at("sai_height").get<int>();
    return p;
  } catch (const nlohmann::json::exception &e) {
    fail(Err::IoFailure, std::string("bad calibration sidecar: ") + e.what());
  }
}

std::string calib_sidecar_path(const std::string &lfraw_path) {
  auto dot = lfraw_path.rfind(".lfraw");
  std::string stem =
      dot == std::string::npos ? lfraw_path : lfraw_path.substr(0, dot);
  return stem + ".calib.json";
}

} // namespace lfglt
