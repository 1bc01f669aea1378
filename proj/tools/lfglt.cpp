/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * lfglt — pre-demosaic light field codec tool.
 *
 *   synth     render a synthetic light field to .lfraw (+ sidecar, ground truth)
 *   train     learn a mode graph bank from .lfraw files
 *   encode    .lfraw -> .lfgc
 *   decode    .lfgc -> .lfraw (optionally demosaicked .lfscene)
 *   eval      PSNR/bpp of a reconstruction against ground truth
 *   rd-sweep  encode/decode/eval across a QP list, emitting CSV rows
 */
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lfglt/codec.hpp"

using namespace lfglt;

namespace {

struct CommonFlags {
  int qp = 4;
  std::string graph = "learned";
  bool no_intra = false;
  int threads = 1;
  double delta = 0.9, sigma = 1.6, p1 = 0.001, p2 = 0.001;
  double T = 1.5, p_dc = 0.001;
  int k_sparse = 4, keep_links = 8, ref_radius = 7, grad_radius = 6;

  CodecConfig config() const {
    CodecConfig cfg;
    cfg.qp = qp;
    cfg.graph_mode = graph == "distance" ? GraphMode::Distance
                                         : GraphMode::Learned;
    cfg.intra = !no_intra;
    cfg.threads = threads;
    cfg.delta = delta;
    cfg.sigma = sigma;
    cfg.p1 = p1;
    cfg.p2 = p2;
    cfg.T = T;
    cfg.p_dc = p_dc;
    cfg.k_sparse = k_sparse;
    cfg.keep_links = keep_links;
    cfg.ref_radius = ref_radius;
    cfg.grad_radius = grad_radius;
    return cfg;
  }
};

void add_common_flags(CLI::App *cmd, CommonFlags &f, bool with_qp = true) {
  // Unmatched flags (notably --config) fall through to the root app.
  cmd->fallthrough();
  if (with_qp) cmd->add_option("--qp", f.qp, "quantization parameter [4,36]");
  cmd->add_option("--graph", f.graph, "graph construction")
      ->check(CLI::IsMember({"learned", "distance"}));
  cmd->add_flag("--no-intra", f.no_intra, "disable intra-prediction");
  cmd->add_option("--threads", f.threads, "worker threads across SAIs");
  cmd->add_option("--delta", f.delta, "tensor estimation weight falloff");
  cmd->add_option("--sigma", f.sigma, "kernel bandwidth");
  cmd->add_option("--p1", f.p1, "kernel scale stabilizer");
  cmd->add_option("--p2", f.p2, "eigenvalue ratio stabilizer");
  cmd->add_option("--T", f.T, "DC classification threshold");
  cmd->add_option("--p-dc", f.p_dc, "classification ratio stabilizer");
  cmd->add_option("--k-sparse", f.k_sparse, "bipartite links kept per node");
  cmd->add_option("--keep-links", f.keep_links,
                  "links kept per node in observed graphs");
  cmd->add_option("--ref-radius", f.ref_radius,
                  "Chebyshev reference window radius");
  cmd->add_option("--grad-radius", f.grad_radius,
                  "gradient neighbor search bound");
}

uint64_t env_seed() {
  if (const char *s = std::getenv("LFGLT_SEED")) return std::strtoull(s, nullptr, 10);
  return 1;
}

SAIArray load_sais(const std::string &path) {
  auto raw = read_lfraw(path);
  auto params = read_calib_json(calib_sidecar_path(path));
  params.validate_for_codec();
  return decompose(calibrate(raw, params), params);
}

ModeGraphBank load_bank_or_die(const std::string &path) {
  if (path.empty())
    fail(Err::BankMismatch, "learned graph mode needs --bank");
  return read_bank(path);
}

void append_csv(const std::string &path, int qp, const Metrics &m) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) fail(Err::IoFailure, "cannot open " + path);
  if (fresh) out << kCsvHeader << "\n";
  out << metrics_csv_row(qp, m) << "\n";
}

int cmd_synth(const std::string &output, const std::string &scene_out,
              uint64_t seed, int views_u, int views_v, int sai_w, int sai_h,
              const std::string &pattern, int bit_depth, int row_offset,
              const std::vector<double> &affine, double disparity) {
  SceneSpec spec;
  spec.views_v = views_v;
  spec.views_u = views_u;
  spec.height = sai_h;
  spec.width = sai_w;
  spec.bit_depth = bit_depth;
  spec.disparity = disparity;
  if (pattern == "smooth") spec.preset = ScenePreset::Smooth;
  else if (pattern == "edges") spec.preset = ScenePreset::Edges;
  else if (pattern == "texture") spec.preset = ScenePreset::Texture;
  else spec.preset = ScenePreset::Mixed;

  CalibrationParams params;
  params.macro_pixel_pitch = views_u;
  params.row_offset = row_offset;
  params.views_u = views_u;
  params.views_v = views_v;
  params.sai_width = sai_w;
  params.sai_height = sai_h;
  if (!affine.empty()) {
    if (affine.size() != 6)
      fail(Err::InvalidArgument, "--affine needs 6 numbers");
    std::copy(affine.begin(), affine.end(), params.affine.begin());
  }

  auto scene = make_scene(spec, seed);
  auto raw = synthesize_lenselet(scene, params, seed);
  write_lfraw(output, raw);
  write_calib_json(calib_sidecar_path(output), params);
  if (!scene_out.empty()) write_lfscene(scene_out, scene);
  std::cout << "synth: " << raw.width << "x" << raw.height << " mosaic, "
            << views_v << "x" << views_u << " views, seed " << seed << "\n";
  return 0;
}

int cmd_train(const std::vector<std::string> &inputs,
              const std::string &output, const CommonFlags &flags) {
  std::vector<SparseSAI> sais;
  for (const auto &path : inputs) {
    auto arr = load_sais(path);
    for (auto &s : arr.grid) sais.push_back(std::move(s));
  }
  TrainOptions opts = flags.config().train_options();
  auto bank = train_bank(sais, opts);
  write_bank(output, bank);

  std::cout << "trained bank over " << sais.size() << " SAIs, hash 0x"
            << std::hex << bank.hash() << std::dec << "\n";
  for (int m = 0; m < kModeCount; ++m) {
    std::cout << "  mode " << m << ": " << bank.meta.sample_counts[size_t(m)]
              << " blocks";
    if (bank.meta.fallback[size_t(m)]) std::cout << " (distance fallback)";
    std::cout << "\n";
  }
  return 0;
}

int cmd_encode(const std::string &input, const std::string &output,
               const std::string &bank_path, const CommonFlags &flags) {
  auto cfg = flags.config();
  auto sais = load_sais(input);
  ModeGraphBank bank;
  const bool learned = cfg.graph_mode == GraphMode::Learned;
  if (learned) bank = load_bank_or_die(bank_path);
  auto res = encode(sais, learned ? &bank : nullptr, cfg);

  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot open " + output);
  out.write(reinterpret_cast<const char *>(res.stream.data()),
            std::streamsize(res.stream.size()));

  const double positions = double(sais.provenance.sai_width) *
                           sais.provenance.sai_height * sais.views_u *
                           sais.views_v;
  std::cout << "encoded " << res.stats.coded_pixels << " pixels in "
            << res.stats.blocks << " blocks to " << res.stream.size()
            << " bytes (" << res.stream.size() * 8.0 / positions << " bpp)\n";
  return 0;
}

int cmd_decode(const std::string &input, const std::string &output,
               const std::string &bank_path, const std::string &scene_out,
               bool demosaic, const std::string &sai_index,
               const CommonFlags &flags) {
  auto cfg = flags.config();
  auto sr = StreamReader::from_file(input);

  ModeGraphBank bank;
  const ModeGraphBank *bank_ptr = nullptr;
  if (sr.header().learned_graph()) {
    bank = load_bank_or_die(bank_path);
    bank_ptr = &bank;
  }

  if (!sai_index.empty()) {
    int dv = 0, du = 0;
    if (std::sscanf(sai_index.c_str(), "%d,%d", &dv, &du) != 2)
      fail(Err::InvalidArgument, "--sai expects \"v,u\"");
    auto sai = decode_single(sr, bank_ptr, cfg, dv, du);
    std::cout << "decoded SAI (" << dv << "," << du << "): "
              << sai.pixel_count() << " pixels, payload bytes read "
              << sr.payload_bytes_read() << " of "
              << sr.total_payload_bytes() << "\n";
    return 0;
  }

  auto res = decode(sr, bank_ptr, cfg, demosaic || !scene_out.empty());
  if (!output.empty()) {
    auto cal = compose(res.sais);
    write_lfraw(output, uncalibrate(cal, res.sais.provenance));
  }
  if (!scene_out.empty()) {
    if (!res.demosaicked)
      fail(Err::InvalidArgument, "--scene-out requires --demosaic");
    write_lfscene(scene_out, *res.demosaicked);
  }
  std::cout << "decoded " << res.sais.total_pixels() << " pixels across "
            << res.sais.grid.size() << " SAIs\n";
  return 0;
}

int cmd_eval(const std::string &input, const std::string &truth,
             const std::string &stream, int qp, const std::string &csv) {
  auto recon = read_lfscene(input);
  auto gt = read_lfscene(truth);
  size_t bytes = 0;
  if (!stream.empty()) bytes = std::filesystem::file_size(stream);
  auto m = evaluate(recon, gt, bytes);
  std::cout << kCsvHeader << "\n" << metrics_csv_row(qp, m) << "\n";
  if (!csv.empty()) append_csv(csv, qp, m);
  return 0;
}

int cmd_rd_sweep(const std::string &input, const std::string &bank_path,
                 const std::string &truth, const std::vector<int> &qps,
                 const std::string &csv, CommonFlags flags) {
  auto sais = load_sais(input);
  // Default ground truth is the paper-style one: full-color SAIs derived
  // from the raw data before compression, demosaicked the same way the
  // decoder demosaicks. A scene file can override it.
  LightFieldScene gt = truth.empty() ? demosaic_sais(sais, flags.config())
                                     : read_lfscene(truth);
  ModeGraphBank bank;
  const ModeGraphBank *bank_ptr = nullptr;
  if (flags.graph != "distance") {
    bank = load_bank_or_die(bank_path);
    bank_ptr = &bank;
  }

  std::cout << kCsvHeader << "\n";
  for (int qp : qps) {
    flags.qp = qp;
    auto cfg = flags.config();
    auto enc = encode(sais, bank_ptr, cfg);
    auto dec = decode(enc.stream, bank_ptr, cfg, /*demosaic=*/true);
    auto m = evaluate(*dec.demosaicked, gt, enc.stream.size());
    std::cout << metrics_csv_row(qp, m) << "\n";
    if (!csv.empty()) append_csv(csv, qp, m);
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"pre-demosaic graph lifting light field codec"};
  app.require_subcommand(1);
  // Config files address subcommand options by section, e.g. [encode] qp=14.
  app.set_config("--config", "", "read flags from a config file");

  // synth
  auto *synth = app.add_subcommand("synth", "render a synthetic light field");
  std::string sy_out, sy_scene, sy_pattern = "mixed";
  uint64_t sy_seed = env_seed();
  int sy_views = 3, sy_views_u = 0, sy_views_v = 0, sy_sai = 48, sy_sai_w = 0,
      sy_sai_h = 0, sy_depth = 8, sy_roff = 1;
  std::vector<double> sy_affine;
  double sy_disp = 0.6;
  synth->add_option("--output", sy_out, ".lfraw output")->required();
  synth->add_option("--scene-out", sy_scene, "ground-truth .lfscene output");
  synth->add_option("--seed", sy_seed, "PRNG seed (default $LFGLT_SEED or 1)");
  synth->add_option("--views", sy_views, "views per axis");
  synth->add_option("--views-u", sy_views_u, "horizontal views (overrides)");
  synth->add_option("--views-v", sy_views_v, "vertical views (overrides)");
  synth->add_option("--sai-size", sy_sai, "SAI width and height");
  synth->add_option("--sai-width", sy_sai_w, "SAI width (overrides)");
  synth->add_option("--sai-height", sy_sai_h, "SAI height (overrides)");
  synth->add_option("--pattern", sy_pattern, "scene preset")
      ->check(CLI::IsMember({"smooth", "edges", "texture", "mixed"}));
  synth->add_option("--bit-depth", sy_depth, "sample bit depth [8,16]");
  synth->add_option("--row-offset", sy_roff, "odd-row macro-pixel shift");
  synth->add_option("--affine", sy_affine,
                    "calibration affine, 6 numbers row-major")
      ->expected(6)
      ->delimiter(',');
  synth->add_option("--disparity", sy_disp, "per-view parallax in pixels");

  // train
  auto *train = app.add_subcommand("train", "learn a mode graph bank");
  std::vector<std::string> tr_inputs;
  std::string tr_out;
  CommonFlags tr_flags;
  train->add_option("--input", tr_inputs, ".lfraw training files")
      ->required()
      ->expected(-1);
  train->add_option("--output", tr_out, ".lfbank output")->required();
  add_common_flags(train, tr_flags, /*with_qp=*/false);

  // encode
  auto *enc = app.add_subcommand("encode", "encode a raw lenselet mosaic");
  std::string en_in, en_out, en_bank;
  CommonFlags en_flags;
  enc->add_option("--input", en_in, ".lfraw input")->required();
  enc->add_option("--output", en_out, ".lfgc output")->required();
  enc->add_option("--bank", en_bank, ".lfbank for learned graphs");
  add_common_flags(enc, en_flags);

  // decode
  auto *dec = app.add_subcommand("decode", "decode a coded stream");
  std::string de_in, de_out, de_bank, de_scene, de_sai;
  bool de_demosaic = false;
  CommonFlags de_flags;
  dec->add_option("--input", de_in, ".lfgc input")->required();
  dec->add_option("--output", de_out, "reconstructed .lfraw output");
  dec->add_option("--bank", de_bank, ".lfbank matching the stream");
  dec->add_flag("--demosaic", de_demosaic, "interpolate missing colors");
  dec->add_option("--scene-out", de_scene, "demosaicked .lfscene output");
  dec->add_option("--sai", de_sai, "decode a single SAI \"v,u\"");
  add_common_flags(dec, de_flags, /*with_qp=*/false);

  // eval
  auto *ev = app.add_subcommand("eval", "PSNR/bpp of a reconstruction");
  std::string ev_in, ev_truth, ev_stream, ev_csv;
  int ev_qp = 0;
  ev->add_option("--input", ev_in, "reconstructed .lfscene")->required();
  ev->add_option("--truth", ev_truth, "ground-truth .lfscene")->required();
  ev->add_option("--stream", ev_stream, ".lfgc stream for the bpp figure");
  ev->add_option("--qp", ev_qp, "QP recorded in the CSV row");
  ev->add_option("--csv", ev_csv, "append the row to this CSV file");

  // rd-sweep
  auto *rd = app.add_subcommand("rd-sweep", "encode across a QP list");
  std::string rd_in, rd_bank, rd_truth, rd_csv;
  std::vector<int> rd_qps = {4, 10, 16, 22, 28, 34};
  CommonFlags rd_flags;
  rd->add_option("--input", rd_in, ".lfraw input")->required();
  rd->add_option("--bank", rd_bank, ".lfbank for learned graphs");
  rd->add_option("--truth", rd_truth,
                 "ground-truth .lfscene (default: demosaicked input)");
  rd->add_option("--qp", rd_qps, "QP list")->delimiter(',');
  rd->add_option("--csv", rd_csv, "CSV output file");
  add_common_flags(rd, rd_flags, /*with_qp=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) {
      if (sy_views_u == 0) sy_views_u = sy_views;
      if (sy_views_v == 0) sy_views_v = sy_views;
      if (sy_sai_w == 0) sy_sai_w = sy_sai;
      if (sy_sai_h == 0) sy_sai_h = sy_sai;
      if (sy_roff >= sy_views_u) sy_roff = sy_views_u / 2;
      return cmd_synth(sy_out, sy_scene, sy_seed, sy_views_u, sy_views_v,
                       sy_sai_w, sy_sai_h, sy_pattern, sy_depth, sy_roff,
                       sy_affine, sy_disp);
    }
    if (train->parsed()) return cmd_train(tr_inputs, tr_out, tr_flags);
    if (enc->parsed()) return cmd_encode(en_in, en_out, en_bank, en_flags);
    if (dec->parsed())
      return cmd_decode(de_in, de_out, de_bank, de_scene, de_demosaic, de_sai,
                        de_flags);
    if (ev->parsed()) return cmd_eval(ev_in, ev_truth, ev_stream, ev_qp, ev_csv);
    if (rd->parsed())
      return cmd_rd_sweep(rd_in, rd_bank, rd_truth, rd_qps, rd_csv, rd_flags);
  } catch (const CodecError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
