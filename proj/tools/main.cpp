// rfx command-line front end: simulate / train / infer / evaluate / render.
// Every subcommand is driven by a JSON config (schema-checked, unknown keys
// rejected) plus a few overriding flags, and writes its outputs atomically.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rfx/dsp.hpp"
#include "rfx/imaging.hpp"
#include "rfx/io.hpp"
#include "rfx/loss_schedule.hpp"
#include "rfx/metrics.hpp"
#include "rfx/model.hpp"
#include "rfx/rfsim.hpp"
#include "rfx/trainer.hpp"

namespace {

using json = nlohmann::json;
using namespace rfx;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_keys(const json& j, const std::string& section,
                const std::vector<std::string>& allowed) {
  if (!j.is_object())
    throw ConfigError("config: section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("config: unknown key '" + key + "' in section '" +
                        section + "'");
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for key '" + key + "'");
  }
}

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool deterministic = false;
};

struct Run {
  json cfg;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool deterministic = false;

  std::string path(const std::string& key) const {
    const json paths = cfg.value("paths", json::object());
    if (!paths.contains(key))
      throw ConfigError("config: paths." + key + " is required");
    std::filesystem::path p = paths.at(key).get<std::string>();
    if (!out_dir.empty() && p.is_relative())
      p = std::filesystem::path(out_dir) / p;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    return p.string();
  }
  bool has_path(const std::string& key) const {
    return cfg.value("paths", json::object()).contains(key);
  }
};

Run load_run(const Options& opt) {
  if (opt.config_path.empty()) throw ConfigError("--config is required");
  std::ifstream in(opt.config_path);
  if (!in) throw ConfigError("cannot open config " + opt.config_path);
  Run run;
  try {
    run.cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(run.cfg, "(top level)",
             {"seed", "probe", "excitations", "phantom", "stft", "model",
              "train", "eval", "paths"});
  for (const char* section : {"probe", "excitations", "phantom", "stft",
                              "model", "train", "eval", "paths"})
    if (run.cfg.contains(section) && !run.cfg.at(section).is_object())
      throw ConfigError(std::string("config: section '") + section +
                        "' must be an object");
  run.seed = opt.seed ? *opt.seed : get_or<std::uint64_t>(run.cfg, "seed", 0);
  run.out_dir = opt.out_dir;
  run.deterministic = opt.deterministic;
  return run;
}

sim::ProbeSpec parse_probe(const json& cfg) {
  const json j = cfg.value("probe", json::object());
  check_keys(j, "probe", {"fc", "fs", "frac_bw_probe", "impulse_cycles"});
  sim::ProbeSpec p;
  p.fc = get_or(j, "fc", p.fc);
  p.fs = get_or(j, "fs", p.fs);
  p.frac_bw_probe = get_or(j, "frac_bw_probe", p.frac_bw_probe);
  p.impulse_cycles = get_or(j, "impulse_cycles", p.impulse_cycles);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

std::pair<sim::ExcitationSpec, sim::ExcitationSpec> parse_excitations(
    const json& cfg, const sim::ProbeSpec& probe) {
  const json j = cfg.value("excitations", json::object());
  check_keys(j, "excitations", {"narrow_frac_bw", "wide_frac_bw"});
  sim::ExcitationSpec narrow, wide;
  narrow.fc = wide.fc = probe.fc;
  narrow.target_frac_bw = get_or(j, "narrow_frac_bw", 0.6);
  wide.target_frac_bw = get_or(j, "wide_frac_bw", 1.2);
  return {narrow, wide};
}

dsp::StftConfig parse_stft(const json& cfg) {
  const json j = cfg.value("stft", json::object());
  check_keys(j, "stft", {"n_fft", "win_len", "hop"});
  dsp::StftConfig sc;
  sc.n_fft = get_or(j, "n_fft", sc.n_fft);
  sc.win_len = get_or(j, "win_len", sc.win_len);
  sc.hop = get_or(j, "hop", sc.hop);
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return sc;
}

model::ModelConfig parse_model(const json& cfg, const dsp::StftConfig& sc,
                               std::size_t line_len) {
  const json j = cfg.value("model", json::object());
  check_keys(j, "model", {"preset", "patch", "dim", "enc_layers", "dec_layers",
                          "heads", "mlp_ratio"});
  const std::string preset = get_or<std::string>(j, "preset", "desk");
  model::ModelConfig mc;
  if (preset == "desk")
    mc = model::ModelConfig::desk();
  else if (preset == "full_scale")
    mc = model::ModelConfig::full_scale();
  else
    throw ConfigError("config: model.preset must be 'desk' or 'full_scale'");
  mc.patch = get_or(j, "patch", mc.patch);
  mc.dim = get_or(j, "dim", mc.dim);
  mc.enc_layers = get_or(j, "enc_layers", mc.enc_layers);
  mc.dec_layers = get_or(j, "dec_layers", mc.dec_layers);
  mc.heads = get_or(j, "heads", mc.heads);
  mc.mlp_ratio = get_or(j, "mlp_ratio", mc.mlp_ratio);
  mc.t = sc.frames(line_len);
  mc.f = sc.bins();
  try {
    mc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return mc;
}

train::TrainConfig parse_train(const json& cfg) {
  const json j = cfg.value("train", json::object());
  check_keys(j, "train",
             {"lr", "beta1", "beta2", "eps", "weight_decay", "clip_norm",
              "epochs", "batch_size", "checkpoint_every", "resume",
              "circular_phase"});
  train::TrainConfig tc;
  tc.lr = get_or(j, "lr", tc.lr);
  tc.beta1 = get_or(j, "beta1", tc.beta1);
  tc.beta2 = get_or(j, "beta2", tc.beta2);
  tc.eps = get_or(j, "eps", tc.eps);
  tc.weight_decay = get_or(j, "weight_decay", tc.weight_decay);
  tc.clip_norm = get_or(j, "clip_norm", tc.clip_norm);
  tc.epochs = get_or(j, "epochs", tc.epochs);
  tc.batch_size = get_or(j, "batch_size", tc.batch_size);
  tc.checkpoint_every = get_or(j, "checkpoint_every", tc.checkpoint_every);
  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return tc;
}

sim::PairedDataset load_dataset(const std::string& path) {
  try {
    return io::read_dataset(path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

sim::BandTag parse_band(const std::string& name, const std::string& key) {
  if (name == "low") return sim::BandTag::low;
  if (name == "high") return sim::BandTag::high;
  throw ConfigError("config: " + key + " must be 'low' or 'high'");
}

std::vector<sim::RfLine> select_band(const sim::PairedDataset& ds,
                                     sim::BandTag band) {
  std::vector<sim::RfLine> lines;
  lines.reserve(ds.pairs.size());
  for (const auto& p : ds.pairs)
    lines.push_back(band == sim::BandTag::low ? p.low : p.high);
  return lines;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Run& run) {
  const auto probe = parse_probe(run.cfg);
  const auto [narrow, wide] = parse_excitations(run.cfg, probe);

  const json j = run.cfg.value("phantom", json::object());
  check_keys(j, "phantom",
             {"kind", "n_phantoms", "n_scatterers", "n_cysts",
              "cyst_echogenicity", "depth_min_m", "depth_max_m",
              "lateral_extent_m", "n_lines", "line_len", "accept_halfwidth_m",
              "val_fraction", "test_fraction"});
  const std::string kind_name = get_or<std::string>(j, "kind", "speckle_cyst");
  sim::PhantomKind kind;
  if (kind_name == "speckle_cyst")
    kind = sim::PhantomKind::speckle_cyst;
  else if (kind_name == "point_targets")
    kind = sim::PhantomKind::point_targets;
  else
    throw ConfigError("config: phantom.kind must be 'speckle_cyst' or "
                      "'point_targets'");

  sim::PhantomParams pp;
  pp.n_scatterers = get_or(j, "n_scatterers", pp.n_scatterers);
  pp.n_cysts = get_or(j, "n_cysts", pp.n_cysts);
  pp.cyst_echogenicity = get_or(j, "cyst_echogenicity", pp.cyst_echogenicity);
  pp.depth_min_m = get_or(j, "depth_min_m", pp.depth_min_m);
  pp.depth_max_m = get_or(j, "depth_max_m", pp.depth_max_m);
  pp.lateral_extent_m = get_or(j, "lateral_extent_m", pp.lateral_extent_m);

  sim::SimParams sp;
  sp.n_lines = get_or(j, "n_lines", sp.n_lines);
  sp.line_len = get_or(j, "line_len", sp.line_len);
  sp.accept_halfwidth_m = get_or(j, "accept_halfwidth_m", sp.accept_halfwidth_m);
  const std::size_t n_phantoms = get_or<std::size_t>(j, "n_phantoms", 1);
  const double val_fraction = get_or(j, "val_fraction", 0.0);
  const double test_fraction = get_or(j, "test_fraction", 0.0);
  if (n_phantoms == 0) throw ConfigError("config: phantom.n_phantoms must be >= 1");
  if (val_fraction < 0.0 || test_fraction < 0.0 ||
      val_fraction + test_fraction >= 1.0)
    throw ConfigError("config: val/test fractions must be >= 0 and sum < 1");

  sim::PairedDataset ds;
  ds.probe = probe;
  ds.line_len = sp.line_len;
  for (std::size_t pi = 0; pi < n_phantoms; ++pi) {
    auto phantom = sim::generate_phantom(kind, pp, run.seed + pi);
    auto pairs = sim::simulate_pair_lines(phantom, probe, narrow, wide, sp);
    for (auto& pr : pairs) {
      pr.low.phantom_id = pr.high.phantom_id = static_cast<int>(pi);
      ds.pairs.push_back(std::move(pr));
    }
  }
  // Deterministic tail split: train pairs first, then val, then test.
  const std::size_t n = ds.pairs.size();
  const auto n_test = static_cast<std::size_t>(test_fraction * n);
  const auto n_val = static_cast<std::size_t>(val_fraction * n);
  ds.split.assign(n, sim::Split::train);
  for (std::size_t i = n - n_test; i < n; ++i) ds.split[i] = sim::Split::test;
  for (std::size_t i = n - n_test - n_val; i < n - n_test; ++i)
    ds.split[i] = sim::Split::val;

  const double bw_narrow = sim::measure_frac_bw(
      sim::synth_excitation(narrow, probe.fs), probe.fs, probe.fc);
  const double bw_wide = sim::measure_frac_bw(
      sim::synth_excitation(wide, probe.fs), probe.fs, probe.fc);

  json splits = json::array();
  for (auto s : ds.split)
    splits.push_back(s == sim::Split::val    ? "val"
                     : s == sim::Split::test ? "test"
                                             : "train");
  json manifest{{"config", run.cfg},
                {"seed", run.seed},
                {"n_pairs", n},
                {"line_len", ds.line_len},
                {"measured_frac_bw", {{"narrow", bw_narrow}, {"wide", bw_wide}}},
                {"splits", splits}};
  io::write_dataset(ds, run.path("dataset"), manifest);
  std::cout << "simulate: wrote " << n << " pairs (L=" << ds.line_len
            << ") to " << run.path("dataset") << "\n"
            << "measured -6 dB fractional bandwidths: narrow=" << bw_narrow
            << " wide=" << bw_wide << "\n";
  return kExitOk;
}

int cmd_train(const Run& run) {
  auto ds = load_dataset(run.path("dataset"));
  const auto sc = parse_stft(run.cfg);
  const auto mc = parse_model(run.cfg, sc, ds.line_len);
  auto tc = parse_train(run.cfg);
  tc.seed = run.seed;
  tc.checkpoint_path = run.path("checkpoint");
  if (run.has_path("log_csv")) tc.log_csv_path = run.path("log_csv");

  const bool resume =
      get_or(run.cfg.value("train", json::object()), "resume", false);
  model::ModelParams params(mc);
  if (resume) {
    try {
      params = io::load_checkpoint(tc.checkpoint_path);
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
    if (params.cfg.t != mc.t || params.cfg.f != mc.f ||
        params.cfg.dim != mc.dim)
      throw DataError("train: checkpoint incompatible with config");
  } else {
    params.init(run.seed);
  }

  loss::CurriculumState curriculum;
  curriculum.circular_phase =
      get_or(run.cfg.value("train", json::object()), "circular_phase", false);
  if (tc.epochs > 0) {
    auto report = train::train(ds, sc, params, curriculum, tc);
    const auto& last = report.epochs.back();
    std::cout << "train: " << report.epochs.size()
              << " epochs, final composite=" << last.mean_composite
              << " weights=(" << last.w_mag << "," << last.w_phase << ","
              << last.w_cplx << ")\n";
  } else {
    io::save_checkpoint(params, tc.checkpoint_path, json{{"epoch", -1}});
    std::cout << "train: 0 epochs, checkpoint written from "
              << (resume ? "resumed" : "initialized") << " weights\n";
  }

  // Report validation composite under equal fixed weights so a resumed run
  // can be checked against the original.
  std::vector<std::size_t> val_idx;
  for (std::size_t i = 0; i < ds.pairs.size(); ++i)
    if (ds.split[i] == sim::Split::val) val_idx.push_back(i);
  if (!val_idx.empty()) {
    loss::CurriculumState fixed;  // (0.5, 0.5, 0)
    double vsum = 0.0;
    for (std::size_t i : val_idx) {
      auto low = dsp::to_polar(dsp::stft(ds.pairs[i].low.samples, sc, ds.probe.fs));
      auto high = dsp::to_polar(dsp::stft(ds.pairs[i].high.samples, sc, ds.probe.fs));
      auto pred = model::forward(low, params);
      vsum += loss::composite_loss(
          loss::loss_terms(pred, high, curriculum.circular_phase), fixed);
    }
    std::cout << "val_composite=" << vsum / static_cast<double>(val_idx.size())
              << "\n";
  }
  return kExitOk;
}

int cmd_infer(const Run& run) {
  auto ds = load_dataset(run.path("dataset"));
  const auto sc = parse_stft(run.cfg);
  model::ModelParams params = [&] {
    try {
      return io::load_checkpoint(run.path("checkpoint"));
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
  }();
  if (params.cfg.t != sc.frames(ds.line_len) || params.cfg.f != sc.bins())
    throw DataError("infer: checkpoint grid does not match dataset/stft");

  sim::PairedDataset out = ds;
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    auto low = dsp::to_polar(dsp::stft(ds.pairs[i].low.samples, sc, ds.probe.fs));
    auto pred = model::forward(low, params);
    auto spec = dsp::from_polar(pred, sc, ds.probe.fs);
    out.pairs[i].high.samples = dsp::istft(spec, ds.line_len);
    out.pairs[i].high.band = sim::BandTag::high;
    for (double v : out.pairs[i].high.samples)
      if (!std::isfinite(v))
        throw train::NumericAbort("infer: non-finite sample in pair " +
                                  std::to_string(i));
  }
  json manifest;
  try {
    manifest = io::read_manifest(run.path("dataset"));
  } catch (const std::exception&) {
    manifest = json::object();
  }
  manifest["predicted_by"] = run.cfg;
  io::write_dataset(out, run.path("predictions"), manifest);
  std::cout << "infer: wrote " << out.pairs.size() << " predicted pairs to "
            << run.path("predictions") << "\n";
  return kExitOk;
}

json metrics_json(const metrics::MetricReport& r) {
  return json{{"mse", r.mse},
              {"psnr_db", std::isinf(r.psnr_db) ? json("inf") : json(r.psnr_db)},
              {"ssim", r.ssim}};
}

int cmd_evaluate(const Run& run) {
  const json j = run.cfg.value("eval", json::object());
  check_keys(j, "eval",
             {"dynamic_range_db", "truth_channel", "pred_channel",
              "input_channel", "render_channel", "rois"});
  const double dr = get_or(j, "dynamic_range_db", 60.0);
  auto truth_ds = load_dataset(run.path("truth"));
  auto pred_ds = load_dataset(run.path("predictions"));
  auto input_ds = load_dataset(run.path("input"));
  if (pred_ds.pairs.size() != truth_ds.pairs.size() ||
      input_ds.pairs.size() != truth_ds.pairs.size() ||
      pred_ds.line_len != truth_ds.line_len ||
      input_ds.line_len != truth_ds.line_len)
    throw DataError("evaluate: datasets are not aligned");

  auto truth = imaging::render_bmode(
      select_band(truth_ds,
                  parse_band(get_or<std::string>(j, "truth_channel", "high"),
                             "eval.truth_channel")),
      dr);
  auto pred = imaging::render_bmode(
      select_band(pred_ds,
                  parse_band(get_or<std::string>(j, "pred_channel", "high"),
                             "eval.pred_channel")),
      dr);
  auto input = imaging::render_bmode(
      select_band(input_ds,
                  parse_band(get_or<std::string>(j, "input_channel", "low"),
                             "eval.input_channel")),
      dr);

  json report{{"config", run.cfg}, {"dynamic_range_db", dr}};
  try {
    report["input_vs_truth"] =
        metrics_json(metrics::compare_images(input.pixels, truth.pixels, 1.0));
    report["pred_vs_truth"] =
        metrics_json(metrics::compare_images(pred.pixels, truth.pixels, 1.0));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }

  if (j.contains("rois")) {
    const json& rois = j.at("rois");
    check_keys(rois, "eval.rois", {"foreground", "background"});
    auto rect_indices = [&](const json& rect) {
      if (!rect.is_array() || rect.size() != 4)
        throw ConfigError("config: roi rects are [r0, r1, c0, c1]");
      std::vector<std::size_t> idx;
      for (std::size_t r = rect[0]; r < rect[1].get<std::size_t>(); ++r)
        for (std::size_t c = rect[2]; c < rect[3].get<std::size_t>(); ++c) {
          if (r >= truth.pixels.rows || c >= truth.pixels.cols)
            throw DataError("evaluate: ROI outside the image");
          idx.push_back(r * truth.pixels.cols + c);
        }
      return idx;
    };
    metrics::RoiMask mask;
    mask.foreground = rect_indices(rois.at("foreground"));
    mask.background = rect_indices(rois.at("background"));
    auto roi_of = [&](const imaging::BmodeImage& img) {
      auto s = metrics::cnr_snr(img.pixels, mask);
      return json{{"cnr", s.cnr}, {"snr_db", s.snr_db}};
    };
    report["roi"] = json{{"truth", roi_of(truth)},
                         {"pred", roi_of(pred)},
                         {"input", roi_of(input)}};
  }

  io::atomic_write(run.path("report"), report.dump(2) + "\n");
  if (run.has_path("image"))
    imaging::export_image(imaging::compose_triptych(truth, pred, input),
                          run.path("image"));
  std::cout << "evaluate: input_vs_truth mse="
            << report["input_vs_truth"]["mse"].get<double>()
            << " pred_vs_truth mse="
            << report["pred_vs_truth"]["mse"].get<double>() << "\n"
            << "report written to " << run.path("report") << "\n";
  return kExitOk;
}

int cmd_render(const Run& run) {
  const json j = run.cfg.value("eval", json::object());
  check_keys(j, "eval",
             {"dynamic_range_db", "truth_channel", "pred_channel",
              "input_channel", "render_channel", "rois"});
  auto ds = load_dataset(run.path("dataset"));
  const double dr = get_or(j, "dynamic_range_db", 60.0);
  const auto band = parse_band(
      get_or<std::string>(j, "render_channel", "high"), "eval.render_channel");
  try {
    auto img = imaging::render_bmode(select_band(ds, band), dr);
    imaging::export_image(img, run.path("image"));
    std::cout << "render: " << img.pixels.cols << "x" << img.pixels.rows
              << " image written to " << run.path("image") << "\n";
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RF spectral super-resolution pipeline"};
  app.require_subcommand(1);

  Options opt;
  std::uint64_t seed_flag = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config path");
    sub->add_option("--seed", seed_flag, "Seed override")
        ->each([&](const std::string&) { opt.seed = seed_flag; });
    sub->add_option("--out", opt.out_dir, "Output directory prefix");
    sub->add_flag("--deterministic", opt.deterministic,
                  "Force single-threaded deterministic execution");
    return sub;
  };
  auto* s_sim = add_common(app.add_subcommand("simulate", "Generate a paired dataset"));
  auto* s_train = add_common(app.add_subcommand("train", "Train the model"));
  auto* s_infer = add_common(app.add_subcommand("infer", "Predict wide-band lines"));
  auto* s_eval = add_common(app.add_subcommand("evaluate", "Metric report + images"));
  auto* s_render = add_common(app.add_subcommand("render", "Render a B-mode image"));

  CLI11_PARSE(app, argc, argv);

  try {
    const Run run = load_run(opt);
    if (s_sim->parsed()) return cmd_simulate(run);
    if (s_train->parsed()) return cmd_train(run);
    if (s_infer->parsed()) return cmd_infer(run);
    if (s_eval->parsed()) return cmd_evaluate(run);
    if (s_render->parsed()) return cmd_render(run);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const train::NumericAbort& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
