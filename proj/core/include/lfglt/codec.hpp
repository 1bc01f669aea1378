/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <optional>

#include "lfglt/bitstream.hpp"
#include "lfglt/container.hpp"
#include "lfglt/entropy.hpp"
#include "lfglt/graph.hpp"
#include "lfglt/lifting.hpp"
#include "lfglt/scene.hpp"

namespace lfglt {

enum class GraphMode : uint8_t { Distance = 0, Learned = 1 };

struct CodecConfig {
  int block_size = 8;
  double delta = 0.9;
  double sigma = 1.6;
  double p1 = 0.001;
  double p2 = 0.001;
  double T = 1.5;
  double p_dc = 0.001;
  int qp = 4; // in [4, 36]
  int lifting_levels = 2;
  int k_sparse = 4;
  int keep_links = 8;
  int ref_radius = 7;
  int grad_radius = 6;
  GraphMode graph_mode = GraphMode::Learned;
  bool intra = true;
  int threads = 1;

  IntraParams intra_params() const {
    return {delta, sigma, p1, p2, ref_radius, grad_radius, block_size};
  }
  TrainOptions train_options() const {
    TrainOptions t;
    t.intra = intra_params();
    t.p_dc = p_dc;
    t.T = T;
    t.threads = threads;
    return t;
  }
  void validate() const;
};

struct EncodeStats {
  double residual_energy = 0; // energy of the values entering the transform
  double highband_energy = 0; // unquantized high-band coefficient energy
  size_t blocks = 0;
  size_t coded_pixels = 0;

  void merge(const EncodeStats &o) {
    residual_energy += o.residual_energy;
    highband_energy += o.highband_energy;
    blocks += o.blocks;
    coded_pixels += o.coded_pixels;
  }
};

struct EncodeResult {
  std::vector<uint8_t> stream;
  EncodeStats stats;
  SAIArray recon; // encoder-side reconstruction, equals the decoder's
};

// Full encode of a decomposed light field. The encoder reconstructs every
// block exactly as the decoder will, so tensor estimation stays in lockstep
// on both sides.
EncodeResult encode(const SAIArray &arr, const ModeGraphBank *bank,
                    const CodecConfig &config);

struct DecodeResult {
  SAIArray sais;
  std::optional<LightFieldScene> demosaicked;
};

DecodeResult decode(StreamReader &stream, const ModeGraphBank *bank,
                    const CodecConfig &config, bool demosaic = false);
DecodeResult decode(std::span<const uint8_t> stream, const ModeGraphBank *bank,
                    const CodecConfig &config, bool demosaic = false);

// Demosaic uncoded SAIs with the same causal kernel analysis the decoder
// runs, giving the pre-compression full-color ground truth that coded
// reconstructions are evaluated against.
LightFieldScene demosaic_sais(const SAIArray &arr, const CodecConfig &config);

// Random access: decode one SAI, touching only its payload byte range.
SparseSAI decode_single(StreamReader &stream, const ModeGraphBank *bank,
                        const CodecConfig &config, int dv, int du);

struct Metrics {
  double bpp = 0;
  double psnr_r = 0, psnr_g = 0, psnr_b = 0;
  double psnr_avg = 0; // mean of per-SAI RGB PSNRs
  std::vector<double> per_sai_psnr;
};

inline constexpr double kPsnrCap = 99.0;

Metrics evaluate(const LightFieldScene &recon, const LightFieldScene &truth,
                 size_t stream_bytes);

inline constexpr const char *kCsvHeader = "qp,bpp,psnr_r,psnr_g,psnr_b,psnr_avg";
std::string metrics_csv_row(int qp, const Metrics &m);

} // namespace lfglt
