/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "lfglt/codec.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

namespace lfglt {

void CodecConfig::validate() const {
  if (block_size != 8)
    fail(Err::InvalidArgument, "block_size must be 8");
  if (qp < 4 || qp > 36) fail(Err::QPOutOfRange, "QP must be in [4, 36]");
  if (lifting_levels < 1 || lifting_levels > 2)
    fail(Err::InvalidArgument, "lifting_levels must be 1 or 2");
  if (k_sparse < 1) fail(Err::InvalidArgument, "k_sparse must be >= 1");
  if (ref_radius < 1 || grad_radius < 1)
    fail(Err::InvalidArgument, "search radii must be >= 1");
  if (threads < 1) fail(Err::InvalidArgument, "threads must be >= 1");
  if (delta <= 0 || sigma <= 0 || p1 <= 0 || p2 <= 0 || p_dc <= 0 || T <= 0)
    fail(Err::InvalidArgument, "codec parameters must be positive");
}

namespace {

constexpr Color kPlaneOrder[3] = {Color::G, Color::R, Color::B};

// Per-block state shared verbatim by encoder and decoder. Only decoder-side
// information flows in: the causal reconstruction, the occupancy pattern and
// the config/bank.
struct BlockPipeline {
  BlockPrediction pred;
  ModeId mode = ModeId::DC;
  // Per color plane: occupied node indices (block template order), their
  // (row, col) and the index into pred.pixels.
  struct Plane {
    std::vector<int> nodes;
    std::vector<std::pair<int, int>> positions;
    std::vector<size_t> pixel_index;
    LiftPlan plan;
  };
  std::vector<std::pair<Color, Plane>> planes;
  std::vector<uint8_t> band_of; // scratch reused per plane
};

void prepare_block(BlockPipeline &bp, const SparseSAI &occupancy,
                   const SparseSAI &decoded, const BlockRect &blk,
                   const CodecConfig &cfg, const ModeGraphBank *bank) {
  const int bs = cfg.block_size;
  const bool learned = cfg.graph_mode == GraphMode::Learned;
  // Tensors are needed for the kernel (intra) and the mode (learned graphs).
  const bool analyze = cfg.intra || learned;

  bp.planes.clear();
  if (analyze) {
    bp.pred = predict_block(occupancy, blk, decoded, cfg.intra_params(),
                            cfg.intra);
  } else {
    bp.pred = BlockPrediction{};
    // No tensor analysis: the demosaicking stage falls back to an
    // isotropic kernel for this block.
    bp.pred.kp = kernel_params(TensorEigen{}, 1, cfg.sigma, cfg.p1, cfg.p2);
    for (int r = blk.row0; r < blk.row0 + blk.rows; ++r)
      for (int c = blk.col0; c < blk.col0 + blk.cols; ++c)
        if (occupancy.in_bounds(r, c) && occupancy.occupied(r, c))
          bp.pred.pixels.push_back({r, c, occupancy.color(r, c), 0});
  }
  bp.mode = learned ? classify_block(bp.pred.eig, cfg.p_dc, cfg.T)
                    : ModeId::DC;

  for (Color color : kPlaneOrder) {
    BlockPipeline::Plane plane;
    for (size_t k = 0; k < bp.pred.pixels.size(); ++k) {
      const auto &px = bp.pred.pixels[k];
      if (px.color != color) continue;
      plane.nodes.push_back((px.row - blk.row0) * bs + (px.col - blk.col0));
      plane.positions.emplace_back(px.row - blk.row0, px.col - blk.col0);
      plane.pixel_index.push_back(k);
    }
    if (plane.nodes.empty()) continue;

    ObservedGraph g =
        learned ? observed_graph(bank->graph(bp.mode), plane.nodes,
                                 cfg.keep_links)
                : distance_graph(plane.positions, plane.nodes, cfg.k_sparse);
    plane.plan = LiftPlan::build(g, cfg.lifting_levels, cfg.k_sparse, true);
    bp.planes.emplace_back(color, std::move(plane));
  }
}

void fill_band_map(std::vector<uint8_t> &band_of, const LiftPlan &plan) {
  band_of.clear();
  band_of.insert(band_of.end(), plan.band_sizes[0], 0);
  band_of.insert(band_of.end(), plan.band_sizes[1], 1);
  band_of.insert(band_of.end(), plan.band_sizes[2], 2);
}

struct SaiKernels {
  int blocks_x = 0;
  std::vector<KernelParams> per_block;

  const KernelParams &at(int r, int c, int bs) const {
    return per_block[size_t(r / bs) * blocks_x + size_t(c / bs)];
  }
};

// One SAI through the block pipeline. In encode mode `source` carries the
// values being coded and `rc` receives the levels; in decode mode levels are
// pulled from `rd`. Both paths reconstruct into `decoded`, which starts
// empty and gains occupancy block by block, so searches over it only ever
// see causally coded pixels.
struct SaiCoder {
  const CodecConfig &cfg;
  const ModeGraphBank *bank;
  uint16_t maxv;

  EncodeStats stats;
  SaiKernels kernels;

  void run(const SparseSAI &occ, const SparseSAI *source, SparseSAI &decoded,
           RangeEncoder *rc, RangeDecoder *rd, LevelContexts &ctx) {
    const int bs = cfg.block_size;
    kernels.blocks_x = (decoded.width() + bs - 1) / bs;
    kernels.per_block.assign(size_t(kernels.blocks_x) *
                                 size_t((decoded.height() + bs - 1) / bs),
                             KernelParams{});

    BlockPipeline bp;
    size_t block_index = 0;
    for (int r0 = 0; r0 < decoded.height(); r0 += bs) {
      for (int c0 = 0; c0 < decoded.width(); c0 += bs, ++block_index) {
        const BlockRect blk{r0, c0, bs, bs};
        prepare_block(bp, occ, decoded, blk, cfg, bank);
        kernels.per_block[block_index] = bp.pred.kp;
        ++stats.blocks;

        for (auto &[color, plane] : bp.planes) {
          (void)color;
          const size_t n = plane.nodes.size();
          fill_band_map(bp.band_of, plane.plan);

          std::vector<int32_t> levels;
          if (rc) {
            std::vector<double> residual(n);
            for (size_t k = 0; k < n; ++k) {
              const auto &px = bp.pred.pixels[plane.pixel_index[k]];
              residual[k] = double(source->value(px.row, px.col)) - px.pred;
              stats.residual_energy += residual[k] * residual[k];
            }
            std::vector<double> coeffs = lift_forward(residual, plane.plan);
            for (size_t k = plane.plan.band_sizes[0]; k < coeffs.size(); ++k)
              stats.highband_energy += coeffs[k] * coeffs[k];
            levels = quantize(coeffs, cfg.qp);
            for (size_t k = 0; k < n; ++k)
              encode_level(*rc, ctx.bands[bp.band_of[k]], levels[k]);
          } else {
            levels.resize(n);
            for (size_t k = 0; k < n; ++k)
              levels[k] = decode_level(*rd, ctx.bands[bp.band_of[k]]);
          }

          const std::vector<double> rec_coeffs = dequantize(levels, cfg.qp);
          const std::vector<double> rec = lift_inverse(rec_coeffs, plane.plan);
          for (size_t k = 0; k < n; ++k) {
            const auto &px = bp.pred.pixels[plane.pixel_index[k]];
            const long v = std::lround(double(px.pred) + rec[k]);
            decoded.set(px.row, px.col, px.color,
                        uint16_t(std::clamp<long>(v, 0, maxv)));
          }
          stats.coded_pixels += n;
        }
      }
    }
  }
};

void run_pool(int threads, int jobs, const std::function<void(int)> &fn) {
  if (threads <= 1 || jobs <= 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < jobs; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[size_t(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min(threads, jobs);
  pool.reserve(size_t(n));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto &th : pool) th.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

} // namespace

EncodeResult encode(const SAIArray &arr, const ModeGraphBank *bank,
                    const CodecConfig &config) {
  config.validate();
  const bool learned = config.graph_mode == GraphMode::Learned;
  if (learned) {
    if (!bank) fail(Err::BankMismatch, "learned graph mode requires a bank");
    if (bank->meta.block_size != config.block_size)
      fail(Err::BankMismatch, "bank block size does not match config");
  }

  StreamHeader header;
  header.qp = uint8_t(config.qp);
  header.flags = uint8_t((config.intra ? kFlagIntra : 0) |
                         (learned ? kFlagLearnedGraph : 0));
  header.bank_hash = learned ? bank->hash() : 0;
  header.bit_depth = uint8_t(arr.bit_depth);
  header.bayer_phase = uint8_t(arr.phase);
  header.calib = arr.provenance;

  EncodeResult result;
  result.recon = arr;

  if (arr.grid.empty()) {
    result.stream = write_stream(std::move(header), {});
    return result;
  }

  arr.provenance.validate(arr.provenance.canvas_width(),
                          arr.provenance.canvas_height());
  arr.provenance.validate_for_codec();
  header.raw_width = uint16_t(arr.provenance.canvas_width());
  header.raw_height = uint16_t(arr.provenance.canvas_height());

  const int jobs = int(arr.grid.size());
  std::vector<std::vector<uint8_t>> payloads(static_cast<size_t>(jobs));
  std::vector<EncodeStats> stats(static_cast<size_t>(jobs));

  run_pool(config.threads, jobs, [&](int i) {
    const SparseSAI &source = arr.grid[size_t(i)];
    SparseSAI decoded(source.width(), source.height());
    RangeEncoder rc;
    LevelContexts ctx;
    SaiCoder coder{config, bank, uint16_t((1u << arr.bit_depth) - 1), {}, {}};
    coder.run(source, &source, decoded, &rc, nullptr, ctx);
    payloads[size_t(i)] = rc.finish();
    stats[size_t(i)] = coder.stats;
    result.recon.grid[size_t(i)] = std::move(decoded);
  });

  for (const auto &s : stats) result.stats.merge(s);
  result.stream = write_stream(std::move(header), payloads);
  return result;
}

namespace {

// Skeleton SAI array (occupancy and colors, zero values) implied by the
// header's calibration echo; the decoder starts from this.
SAIArray decode_skeleton(const StreamHeader &h) {
  CalibratedLenslet cal(h.raw_width, h.raw_height, h.bit_depth,
                        static_cast<BayerPhase>(h.bayer_phase));
  auto geom = CalibrationGeometry::build(h.calib, h.raw_width, h.raw_height);
  for (int y = 0; y < h.raw_height; ++y)
    for (int x = 0; x < h.raw_width; ++x)
      if (geom.occupied(x, y)) {
        int sx, sy;
        geom.source(x, y, sx, sy);
        cal.place(x, y, sx, sy, 0);
      }
  return decompose(cal, h.calib);
}

CodecConfig decoder_config(const StreamHeader &h, const CodecConfig &cfg_in) {
  CodecConfig cfg = cfg_in;
  cfg.qp = h.qp;
  cfg.intra = h.intra();
  cfg.graph_mode = h.learned_graph() ? GraphMode::Learned : GraphMode::Distance;
  cfg.validate();
  return cfg;
}

// Field sanity for untrusted headers: well-formed bit depth and a bounded
// canvas, so corrupt streams fail typed instead of over-allocating.
void check_header(const StreamHeader &h) {
  if (h.bit_depth < 8 || h.bit_depth > 16)
    fail(Err::CorruptStream, "bit depth out of range");
  if (h.bayer_phase > 3) fail(Err::CorruptStream, "bad bayer phase");
  if (size_t(h.raw_width) * h.raw_height > (size_t(1) << 26))
    fail(Err::CorruptStream, "canvas too large");
}

void check_bank(const StreamHeader &h, const ModeGraphBank *bank) {
  if (!h.learned_graph()) return;
  if (!bank) fail(Err::BankMismatch, "stream was coded with a graph bank");
  if (bank->hash() != h.bank_hash)
    fail(Err::BankMismatch, "graph bank hash does not match stream header");
}

SparseSAI decode_one(const StreamHeader &h, const CodecConfig &cfg,
                     const ModeGraphBank *bank, const SparseSAI &skeleton,
                     std::span<const uint8_t> payload, SaiKernels *kernels) {
  RangeDecoder rd(payload);
  LevelContexts ctx;
  SaiCoder coder{cfg, bank, uint16_t((1u << h.bit_depth) - 1), {}, {}};
  SparseSAI decoded(skeleton.width(), skeleton.height());
  coder.run(skeleton, nullptr, decoded, nullptr, &rd, ctx);
  if (kernels) *kernels = std::move(coder.kernels);
  return decoded;
}

uint16_t nearest_same_color(const SparseSAI &sai, int row, int col, Color c) {
  // Expanding Chebyshev ring scan; first hit in scan order wins.
  const int max_r = std::max(sai.width(), sai.height());
  for (int rad = 1; rad <= max_r; ++rad) {
    for (int r = row - rad; r <= row + rad; ++r) {
      for (int cc = col - rad; cc <= col + rad; ++cc) {
        if (std::max(std::abs(r - row), std::abs(cc - col)) != rad) continue;
        if (!sai.in_bounds(r, cc)) continue;
        if (sai.occupied(r, cc) && sai.color(r, cc) == c)
          return sai.value(r, cc);
      }
    }
  }
  return 0;
}

void demosaic_sai(const SparseSAI &sai, const SaiKernels &kernels,
                  const CodecConfig &cfg, int bit_depth, LightFieldScene &out,
                  int dv, int du) {
  const uint16_t maxv = uint16_t((1u << bit_depth) - 1);
  for (int r = 0; r < sai.height(); ++r) {
    for (int c = 0; c < sai.width(); ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const Color color = static_cast<Color>(ch);
        uint16_t v;
        if (sai.occupied(r, c) && sai.color(r, c) == color) {
          v = sai.value(r, c);
        } else {
          const KernelParams &kp = kernels.at(r, c, cfg.block_size);
          bool had_refs = false;
          const double pred = predict_from_window(sai, r, c, color, kp,
                                                  cfg.ref_radius, nullptr,
                                                  cfg.block_size, &had_refs);
          if (had_refs) {
            v = uint16_t(std::clamp<long>(std::lround(pred), 0, maxv));
          } else {
            v = nearest_same_color(sai, r, c, color);
          }
        }
        out.at(dv, du, r, c, ch) = v;
      }
    }
  }
}

} // namespace

DecodeResult decode(StreamReader &stream, const ModeGraphBank *bank,
                    const CodecConfig &config, bool demosaic) {
  const StreamHeader &h = stream.header();
  check_header(h);
  check_bank(h, bank);
  const CodecConfig cfg = decoder_config(h, config);

  DecodeResult result;
  if (h.payload_count() == 0) {
    result.sais.views_v = 0;
    result.sais.views_u = 0;
    result.sais.bit_depth = h.bit_depth;
    result.sais.phase = static_cast<BayerPhase>(h.bayer_phase);
    result.sais.provenance = h.calib;
    return result;
  }
  if (h.payload_count() != size_t(h.calib.views_u) * size_t(h.calib.views_v))
    fail(Err::CorruptStream, "payload count does not match the SAI grid");

  result.sais = decode_skeleton(h);
  if (demosaic)
    result.demosaicked.emplace(h.calib.views_v, h.calib.views_u,
                               h.calib.sai_height, h.calib.sai_width,
                               h.bit_depth);

  const int jobs = int(h.payload_count());
  std::vector<std::vector<uint8_t>> payloads(static_cast<size_t>(jobs));
  for (int i = 0; i < jobs; ++i) payloads[size_t(i)] = stream.payload(size_t(i));

  run_pool(cfg.threads, jobs, [&](int i) {
    SaiKernels kernels;
    result.sais.grid[size_t(i)] =
        decode_one(h, cfg, bank, result.sais.grid[size_t(i)],
                   payloads[size_t(i)], &kernels);
    if (demosaic) {
      const int dv = i / h.calib.views_u;
      const int du = i % h.calib.views_u;
      demosaic_sai(result.sais.grid[size_t(i)], kernels, cfg, h.bit_depth,
                   *result.demosaicked, dv, du);
    }
  });
  return result;
}

DecodeResult decode(std::span<const uint8_t> stream, const ModeGraphBank *bank,
                    const CodecConfig &config, bool demosaic) {
  StreamReader sr = StreamReader::from_bytes(
      std::vector<uint8_t>(stream.begin(), stream.end()));
  return decode(sr, bank, config, demosaic);
}

LightFieldScene demosaic_sais(const SAIArray &arr, const CodecConfig &config) {
  config.validate();
  const CalibrationParams &p = arr.provenance;
  LightFieldScene out(p.views_v, p.views_u, p.sai_height, p.sai_width,
                      arr.bit_depth);
  const int bs = config.block_size;

  const bool analyze =
      config.intra || config.graph_mode == GraphMode::Learned;
  const KernelParams iso =
      kernel_params(TensorEigen{}, 1, config.sigma, config.p1, config.p2);

  run_pool(config.threads, int(arr.grid.size()), [&](int i) {
    const SparseSAI &sai = arr.grid[size_t(i)];
    // Replay the causal kernel analysis over the original values (the
    // lossless reconstruction), as the QP-4 decoder would.
    SaiKernels kernels;
    kernels.blocks_x = (sai.width() + bs - 1) / bs;
    kernels.per_block.assign(size_t(kernels.blocks_x) *
                                 size_t((sai.height() + bs - 1) / bs),
                             iso);
    SparseSAI decoded(sai.width(), sai.height());
    size_t block_index = 0;
    for (int r0 = 0; r0 < sai.height(); r0 += bs) {
      for (int c0 = 0; c0 < sai.width(); c0 += bs, ++block_index) {
        const BlockRect blk{r0, c0, bs, bs};
        if (analyze) {
          const BlockPrediction bp =
              predict_block(sai, blk, decoded, config.intra_params(), false);
          kernels.per_block[block_index] = bp.kp;
        }
        for (int r = r0; r < r0 + bs; ++r)
          for (int c = c0; c < c0 + bs; ++c)
            if (sai.in_bounds(r, c) && sai.occupied(r, c))
              decoded.set(r, c, sai.color(r, c), sai.value(r, c));
      }
    }
    demosaic_sai(sai, kernels, config, arr.bit_depth, out,
                 i / p.views_u, i % p.views_u);
  });
  return out;
}

SparseSAI decode_single(StreamReader &stream, const ModeGraphBank *bank,
                        const CodecConfig &config, int dv, int du) {
  const StreamHeader &h = stream.header();
  check_header(h);
  check_bank(h, bank);
  const CodecConfig cfg = decoder_config(h, config);
  if (dv < 0 || dv >= h.calib.views_v || du < 0 || du >= h.calib.views_u)
    fail(Err::InvalidArgument, "SAI index out of range");

  SAIArray skel = decode_skeleton(h);
  const size_t index = size_t(dv) * h.calib.views_u + size_t(du);
  auto payload = stream.payload(index);
  return decode_one(h, cfg, bank, skel.grid[index], payload, nullptr);
}

Metrics evaluate(const LightFieldScene &recon, const LightFieldScene &truth,
                 size_t stream_bytes) {
  if (recon.views_v != truth.views_v || recon.views_u != truth.views_u ||
      recon.height != truth.height || recon.width != truth.width)
    fail(Err::ShapeMismatch, "scene dimensions differ");

  const double peak = truth.max_value();
  const size_t per_sai = size_t(truth.height) * truth.width;
  Metrics m;

  double chan_sse[3] = {0, 0, 0};
  for (int dv = 0; dv < truth.views_v; ++dv) {
    for (int du = 0; du < truth.views_u; ++du) {
      double sai_sse = 0;
      for (int y = 0; y < truth.height; ++y)
        for (int x = 0; x < truth.width; ++x)
          for (int c = 0; c < 3; ++c) {
            const double d = double(recon.at(dv, du, y, x, c)) -
                             double(truth.at(dv, du, y, x, c));
            chan_sse[c] += d * d;
            sai_sse += d * d;
          }
      const double mse = sai_sse / (double(per_sai) * 3.0);
      const double psnr =
          mse <= 0 ? kPsnrCap
                   : std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
      m.per_sai_psnr.push_back(psnr);
    }
  }

  const double total = double(per_sai) * truth.views_v * truth.views_u;
  auto chan_psnr = [&](int c) {
    const double mse = chan_sse[c] / total;
    return mse <= 0 ? kPsnrCap
                    : std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
  };
  m.psnr_r = chan_psnr(0);
  m.psnr_g = chan_psnr(1);
  m.psnr_b = chan_psnr(2);
  double acc = 0;
  for (double p : m.per_sai_psnr) acc += p;
  m.psnr_avg = m.per_sai_psnr.empty() ? 0 : acc / double(m.per_sai_psnr.size());
  m.bpp = total > 0 ? double(stream_bytes) * 8.0 / total : 0;
  return m;
}

std::string metrics_csv_row(int qp, const Metrics &m) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << qp << "," << m.bpp << "," << m.psnr_r << "," << m.psnr_g
     << "," << m.psnr_b << "," << m.psnr_avg;
  return os.str();
}

} // namespace lfglt
