// plateforge command-line interface.
//
// Subcommands: generate, solve, fit-dmd, rollout, evaluate, spectra,
// export-wav. Exit codes: 0 success, 2 usage or configuration error, 3 data
// error, 4 numerical failure.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "plateforge/plateforge.hpp"

namespace fs = std::filesystem;
using namespace plateforge;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

// Flag > PLATEFORGE_SEED > config file.
RunConfig resolve_config(const CommonOpts& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  if (const char* env = std::getenv("PLATEFORGE_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
      throw ConfigError("PLATEFORGE_SEED is not a valid integer");
    cfg.seed = v;
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.jobs) cfg.jobs = *o.jobs;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required) {
  auto* copt = cmd->add_option("--config", o.config_path, "TOML run configuration");
  if (config_required) copt->required();
  cmd->add_option("--seed", o.seed, "override the run seed");
  cmd->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
}

std::vector<Trajectory> load_split(const DatasetManifest& manifest, const std::string& split,
                                   bool normalized) {
  std::vector<Trajectory> out;
  for (const auto* e : manifest.split_entries(split)) {
    Trajectory t = read_trajectory(manifest.resolve(*e));
    if (normalized) apply_normalization(t, manifest.normalization, NormDirection::Forward);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<const Trajectory*> pointers(const std::vector<Trajectory>& v) {
  std::vector<const Trajectory*> p;
  for (const auto& t : v) p.push_back(&t);
  return p;
}

ProbeSpec parse_probe(const std::string& probe, int ny, int nx) {
  if (probe == "center") return make_probe(ny, nx, ProbeSpec::Role::Center);
  if (probe == "edge") return make_probe(ny, nx, ProbeSpec::Role::Edge);
  // custom "iy,ix"
  const auto comma = probe.find(',');
  if (comma == std::string::npos)
    throw ConfigError("--probe must be center, edge, or iy,ix");
  ProbeSpec p;
  p.role = ProbeSpec::Role::Custom;
  p.iy = std::stoi(probe.substr(0, comma));
  p.ix = std::stoi(probe.substr(comma + 1));
  if (p.iy < 0 || p.iy >= ny || p.ix < 0 || p.ix >= nx)
    throw ValidationError("probe indices outside the grid");
  return p;
}

int parse_channel_index(const std::string& name) {
  if (name == "displacement") return kDisplacement;
  if (name == "velocity") return kVelocity;
  throw ConfigError("--channel must be displacement or velocity");
}

// ---------------------------------------------------------------------------

int cmd_generate(const CommonOpts& common, const std::string& out_dir, std::optional<int> count,
                 std::optional<double> duration, bool linear, std::optional<std::string> dtype) {
  RunConfig cfg = resolve_config(common);
  if (linear) cfg.plate.cnl_over_s0 = 0.0;
  if (count) cfg.dataset_count = *count;
  if (duration) cfg.dataset_duration = *duration;
  if (dtype) cfg.dtype = *dtype;
  GeneratorConfig gen = cfg.generator_config();
  gen.validate();
  DatasetManifest manifest = generate_dataset(gen, out_dir);
  validate_manifest(manifest);
  std::cout << "wrote " << manifest.trajectories.size() << " trajectories to " << out_dir
            << " (config " << cfg.config_hash() << ")\n";
  std::cout << "normalization: displacement_scale="
            << manifest.normalization.displacement_scale
            << " velocity_scale=" << manifest.normalization.velocity_scale << "\n";
  return 0;
}

int cmd_solve(const CommonOpts& common, const std::string& out_path, std::optional<int> steps,
              bool linear, std::optional<double> vmax, std::optional<double> sigma,
              std::optional<double> cx, std::optional<double> cy) {
  RunConfig cfg = resolve_config(common);
  if (linear) cfg.plate.cnl_over_s0 = 0.0;
  const ModalBasis basis = build_basis(cfg.plate, cfg.modes_x, cfg.modes_y);

  std::mt19937_64 rng(derive_seed(cfg.seed, 0));
  StrikeSample s = sample_strike(rng, cfg.strike, cfg.plate);
  if (vmax) s.vmax = *vmax;
  if (sigma) s.sigma = *sigma;
  if (cx) s.x0 = *cx;
  if (cy) s.y0 = *cy;
  const int frames = steps ? *steps : cfg.generator_config().frames();

  Trajectory traj = simulate(cfg.plate, basis, strike_field(s, cfg.plate), frames, cfg.oversample);
  traj.meta["seed"] = cfg.seed;
  traj.meta["params"] = cfg.resolved()["plate"];
  traj.meta["meta"] = {{"id", 0},
                       {"kind", "ground_truth"},
                       {"config_hash", cfg.config_hash()},
                       {"strike", {{"vmax", s.vmax}, {"sigma", s.sigma}, {"x0", s.x0}, {"y0", s.y0}}}};
  write_trajectory(traj, out_path, cfg.dtype);
  std::cout << "wrote " << frames << " frames to " << out_path << "\n";
  return 0;
}

int cmd_fit_dmd(const CommonOpts& common, const std::string& data_dir, const std::string& out_path,
                std::optional<int> rank, std::optional<int> sub_step,
                std::optional<int> pair_stride) {
  RunConfig cfg = resolve_config(common);
  if (rank) cfg.fit.rank = *rank;
  if (sub_step) cfg.fit.sub_step = *sub_step;
  if (pair_stride) cfg.fit.pair_stride = *pair_stride;

  DatasetManifest manifest = load_manifest((fs::path(data_dir) / "manifest.json").string());
  std::vector<Trajectory> train = load_split(manifest, "train", true);
  if (train.empty()) throw ConfigError("fit-dmd: dataset has no training split");

  DiagLTIModel model = fit_diag_lti(pointers(train), cfg.fit);
  model.meta["model_id"] = fs::path(out_path).stem().string();
  model.meta["config_hash"] = cfg.config_hash();
  model.meta["dataset_seed"] = manifest.master_seed;
  model.meta["normalization"] = manifest.normalization.to_json();
  save_model(model, out_path);

  for (const auto& w : model.meta["fit"]["warnings"])
    std::cerr << "warning: " << w.get<std::string>() << "\n";
  std::cout << "fitted rank " << model.latent_dim() << " model on "
            << model.meta["fit"]["n_pairs"] << " snapshot pairs -> " << out_path << "\n";
  return 0;
}

int cmd_rollout(const CommonOpts& common, const std::string& model_path,
                const std::string& data_dir, const std::string& out_dir, std::optional<int> block,
                std::optional<int> steps, const std::string& split, const std::string& dtype) {
  RunConfig cfg = resolve_config(common);
  const int block_len = block ? *block : cfg.block_lengths.back();
  const int total = steps ? *steps : cfg.eval.rollout_steps;

  DiagLTIModel model = load_model(model_path);
  DatasetManifest manifest = load_manifest((fs::path(data_dir) / "manifest.json").string());
  NormStats stats = manifest.normalization;
  fs::create_directories(out_dir);

  auto entries = manifest.split_entries(split);
  if (entries.empty()) throw ConfigError("rollout: no trajectories in split '" + split + "'");

  for (const auto* e : entries) {
    Trajectory truth = read_trajectory(manifest.resolve(*e));
    apply_normalization(truth, stats, NormDirection::Forward);
    DiagLTIPredictor predictor(model, cfg.jobs);
    Trajectory pred = autoregressive_rollout(predictor, truth.snapshot(0), block_len, total);
    pred.meta["normalization"] = stats.to_json();
    pred.meta["params"] = truth.meta.value("params", nlohmann::json());
    pred.meta["seed"] = e->seed;
    nlohmann::json& m = pred.meta["meta"];
    m["kind"] = "prediction";
    m["ref_id"] = e->id;
    m["ref_start_frame"] = 1;
    m["model_id"] = model.meta.value("model_id", fs::path(model_path).stem().string());
    m["config_hash"] = cfg.config_hash();
    char name[48];
    std::snprintf(name, sizeof name, "pred_%04d.plt1", e->id);
    write_trajectory(pred, (fs::path(out_dir) / name).string(), dtype);
    if (m.value("partial", false))
      std::cerr << "warning: rollout for id " << e->id << " is partial: "
                << m.value("error", std::string()) << "\n";
  }
  std::cout << "wrote " << entries.size() << " prediction trajectories (" << total
            << " frames, block " << block_len << ") to " << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& common, const std::string& truth_dir,
                 const std::string& pred_dir, const std::string& model_path,
                 const std::string& out_dir) {
  RunConfig cfg = resolve_config(common);
  if (pred_dir.empty() && model_path.empty())
    throw ConfigError("evaluate: provide --pred and/or --model");
  DatasetManifest manifest = load_manifest((fs::path(truth_dir) / "manifest.json").string());
  const ChannelSelect ch = channel_from_string(cfg.eval.channel);

  MetricReport report;
  report.meta = {{"config_hash", cfg.config_hash()},
                 {"channel", cfg.eval.channel},
                 {"physical_units", cfg.eval.physical_units},
                 {"stft_window", cfg.eval.stft_window},
                 {"stft_hop", cfg.eval.stft_hop},
                 {"stride", cfg.eval.stride},
                 {"dataset_seed", manifest.master_seed}};

  // Single-block protocol with the fitted model on the test split.
  if (!model_path.empty()) {
    DiagLTIModel model = load_model(model_path);
    const std::string model_id = model.meta.value("model_id", fs::path(model_path).stem().string());
    std::vector<Trajectory> test = load_split(manifest, "test", !cfg.eval.physical_units);
    if (cfg.eval.physical_units)
      throw ConfigError("evaluate --model runs on normalized data; drop physical_units");
    DiagLTIPredictor predictor(model, cfg.jobs);
    for (int L : cfg.block_lengths) {
      SingleBlockResult r =
          evaluate_single_block(predictor, pointers(test), L, cfg.eval.stride, ch);
      report.rows.push_back({model_id, manifest.master_seed, L, r.mean_rel_mse, r.mean_rel_mae});
      std::cout << model_id << " steps=" << L << " rel_mse=" << r.mean_rel_mse
                << " rel_mae=" << r.mean_rel_mae << " (" << r.n_samples << " samples)\n";
    }
  }

  // Stored predictions (from `rollout` or an external model).
  if (!pred_dir.empty()) {
    std::vector<std::string> files;
    for (const auto& de : fs::directory_iterator(pred_dir))
      if (de.path().extension() == ".plt1") files.push_back(de.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("evaluate: no .plt1 predictions in " + pred_dir);

    for (const auto& file : files) {
      Trajectory pred = load_external_predictions(file);
      const std::string truth_path = pair_prediction_with_truth(pred, manifest);
      Trajectory truth_full = read_trajectory(truth_path);
      const nlohmann::json& pm = pred.meta.at("meta");
      const std::string model_id = pm.value("model_id", std::string("external"));
      const int ref_id = pm.at("ref_id").get<int>();
      const int start = pm.value("ref_start_frame", 1);
      const bool pred_normalized =
          pred.meta.contains("normalization") && !pred.meta["normalization"].is_null();

      if (start + pred.frames > truth_full.frames)
        throw ShapeError("prediction longer than ground truth for id " + std::to_string(ref_id));
      Trajectory truth;
      truth.allocate(pred.frames, truth_full.ny, truth_full.nx);
      truth.fs = truth_full.fs;
      truth.dx = truth_full.dx;
      truth.dy = truth_full.dy;
      std::copy_n(truth_full.frame_ptr(start),
                  static_cast<std::size_t>(pred.frames) * truth_full.frame_stride(),
                  truth.data.data());

      // Both sides on the same scale: normalized by default, physical on request.
      if (cfg.eval.physical_units) {
        if (pred_normalized)
          apply_normalization(pred, NormStats::from_json(pred.meta["normalization"]),
                              NormDirection::Inverse);
      } else {
        apply_normalization(truth, manifest.normalization, NormDirection::Forward);
        if (!pred_normalized)
          apply_normalization(pred, manifest.normalization, NormDirection::Forward);
      }

      const std::string tag = std::to_string(ref_id);
      report.rows.push_back({model_id, manifest.master_seed, pred.frames,
                             relative_mse(pred, truth, ch), relative_mae(pred, truth, ch)});
      const int L = pm.value("block_len", cfg.block_lengths.front());
      if (pred.frames >= L)
        report.block_series.push_back({model_id + "_" + tag, blockwise_mae(pred, truth, L, ch)});

      const int nframes = std::min(4000, pred.frames);
      report.radial_curves.push_back(
          {"pred_" + tag, radial_spatial_power_spectrum(pred, nframes, kDisplacement)});
      report.radial_curves.push_back(
          {"truth_" + tag, radial_spatial_power_spectrum(truth, nframes, kDisplacement)});

      if (pred.frames >= cfg.eval.stft_window) {
        for (auto role : {ProbeSpec::Role::Center, ProbeSpec::Role::Edge}) {
          const ProbeSpec probe = make_probe(pred.ny, pred.nx, role);
          const std::string rolename = role == ProbeSpec::Role::Center ? "center" : "edge";
          report.spectrograms.push_back(
              {"pred_" + tag + "_" + rolename,
               spectrogram(pred, probe, kDisplacement, cfg.eval.stft_window, cfg.eval.stft_hop)});
          report.spectrograms.push_back(
              {"truth_" + tag + "_" + rolename,
               spectrogram(truth, probe, kDisplacement, cfg.eval.stft_window, cfg.eval.stft_hop)});
        }
      }
      std::cout << "evaluated " << fs::path(file).filename().string() << " against id " << ref_id
                << "\n";
    }
  }

  emit_report(report, out_dir);
  std::cout << "report written to " << out_dir << "\n";
  return 0;
}

int cmd_spectra(const CommonOpts& common, const std::string& traj_path, const std::string& probe_s,
                const std::string& channel_s, const std::string& out_dir, bool radial) {
  RunConfig cfg = resolve_config(common);
  Trajectory traj = read_trajectory(traj_path);
  const ProbeSpec probe = parse_probe(probe_s, traj.ny, traj.nx);
  const int channel = parse_channel_index(channel_s);
  fs::create_directories(out_dir);
  const std::string stem = fs::path(traj_path).stem().string();

  // Full-length Hann periodogram, zero padded for a fine frequency grid.
  Eigen::VectorXd sig = traj.probe_signal(probe.iy, probe.ix, channel);
  {
    int nfft = 1;
    while (nfft < sig.size()) nfft <<= 1;
    nfft *= 4;
    Eigen::VectorXd w = hann_window(static_cast<int>(sig.size()));
    Eigen::VectorXcd buf = Eigen::VectorXcd::Zero(nfft);
    for (Eigen::Index i = 0; i < sig.size(); ++i) buf[i] = Complex(sig[i] * w[i], 0.0);
    Fft1d fft(nfft);
    fft.forward(buf.data());
    std::string csv = "freq_hz,power\n";
    for (int b = 0; b <= nfft / 2; ++b)
      csv += detail::fmt_g(b * traj.fs / nfft) + "," + detail::fmt_g(std::norm(buf[b])) + "\n";
    detail::write_text((fs::path(out_dir) / (stem + "_spectrum.csv")).string(), csv);
  }

  MetricReport report;
  report.meta = {{"trajectory", stem},
                 {"probe", probe_s},
                 {"channel", channel_s},
                 {"config_hash", cfg.config_hash()},
                 {"stft_window", cfg.eval.stft_window},
                 {"stft_hop", cfg.eval.stft_hop}};
  report.spectrograms.push_back(
      {stem + "_" + probe_s,
       spectrogram(traj, probe, channel, cfg.eval.stft_window, cfg.eval.stft_hop)});
  if (radial)
    report.radial_curves.push_back(
        {stem, radial_spatial_power_spectrum(traj, std::min(4000, traj.frames), channel)});
  emit_report(report, out_dir);

  const double peak = estimate_peak_frequency(sig, traj.fs, 20.0, traj.fs / 2.0 - 1.0);
  std::cout << "peak frequency: " << peak << " Hz\n";
  std::cout << "spectra written to " << out_dir << "\n";
  return 0;
}

int cmd_export_wav(const std::string& traj_path, const std::string& probe_s,
                   const std::string& channel_s, const std::string& out_path) {
  Trajectory traj = read_trajectory(traj_path);
  const ProbeSpec probe = parse_probe(probe_s, traj.ny, traj.nx);
  const int channel = parse_channel_index(channel_s);
  WavExportInfo info = export_wav(traj, probe.iy, probe.ix, channel, out_path);
  if (info.silent) std::cerr << "warning: probe signal is silent\n";
  std::cout << "wrote " << out_path << " (peak " << info.peak_abs << ", gain " << info.gain
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plateforge: modal synthesis and surrogate evaluation for the nonlinear Berger plate"};
  app.require_subcommand(1);

  CommonOpts gen_o, solve_o, fit_o, roll_o, eval_o, spec_o;
  std::string out_dir, out_path, data_dir, model_path, pred_dir, truth_dir, traj_path;
  std::string probe = "center", channel = "displacement", split = "test", dtype = "f32";
  std::optional<int> count, steps, rank, sub_step, pair_stride, block;
  std::optional<double> duration, vmax, sigma, cx, cy;
  std::optional<std::string> dtype_opt;
  bool linear = false, radial = false;

  auto* g = app.add_subcommand("generate", "generate a trajectory dataset");
  add_common(g, gen_o, true);
  g->add_option("--out", out_dir, "output dataset directory")->required();
  g->add_option("--count", count, "number of trajectories");
  g->add_option("--duration", duration, "trajectory length in seconds");
  g->add_option("--dtype", dtype_opt, "storage precision (f32 or f64)");
  g->add_flag("--linear", linear, "force the linear plate (cnl_over_s0 = 0)");

  auto* s = app.add_subcommand("solve", "simulate a single trajectory");
  add_common(s, solve_o, true);
  s->add_option("--out", out_path, "output .plt1 path")->required();
  s->add_option("--steps", steps, "frames to emit");
  s->add_option("--vmax", vmax, "strike peak velocity (m/s)");
  s->add_option("--sigma", sigma, "strike width (m)");
  s->add_option("--cx", cx, "strike center x (m)");
  s->add_option("--cy", cy, "strike center y (m)");
  s->add_flag("--linear", linear, "force the linear plate");

  auto* f = app.add_subcommand("fit-dmd", "fit the diagonal LTI surrogate by exact DMD");
  add_common(f, fit_o, true);
  f->add_option("--data", data_dir, "dataset directory with manifest.json")->required();
  f->add_option("--out", out_path, "output model path")->required();
  f->add_option("--rank", rank, "latent dimension");
  f->add_option("--sub-step", sub_step, "frames per latent step");
  f->add_option("--pair-stride", pair_stride, "subsampling stride for snapshot pairs");

  auto* r = app.add_subcommand("rollout", "autoregressive block rollout on a dataset split");
  add_common(r, roll_o, true);
  r->add_option("--model", model_path, "fitted model file")->required();
  r->add_option("--data", data_dir, "dataset directory")->required();
  r->add_option("--out", out_dir, "output prediction directory")->required();
  r->add_option("--block", block, "block length per predictor call");
  r->add_option("--steps", steps, "total frames to generate");
  r->add_option("--split", split, "dataset split to roll out (default test)");
  r->add_option("--dtype", dtype, "prediction storage precision");

  auto* e = app.add_subcommand("evaluate", "metric battery on predictions and/or a model");
  add_common(e, eval_o, true);
  e->add_option("--truth", truth_dir, "ground-truth dataset directory")->required();
  e->add_option("--pred", pred_dir, "directory of prediction .plt1 files");
  e->add_option("--model", model_path, "model file for the single-block protocol");
  e->add_option("--out", out_dir, "report output directory")->required();

  auto* sp = app.add_subcommand("spectra", "probe spectrum and spectrogram of a trajectory");
  add_common(sp, spec_o, false);
  sp->add_option("--traj", traj_path, "input .plt1 trajectory")->required();
  sp->add_option("--probe", probe, "center, edge, or iy,ix");
  sp->add_option("--channel", channel, "displacement or velocity");
  sp->add_option("--out", out_dir, "output directory")->required();
  sp->add_flag("--radial", radial, "also emit the radial spatial power spectrum");

  auto* w = app.add_subcommand("export-wav", "write a probe signal as 16-bit PCM WAV");
  w->add_option("--traj", traj_path, "input .plt1 trajectory")->required();
  w->add_option("--probe", probe, "center, edge, or iy,ix");
  w->add_option("--channel", channel, "displacement or velocity");
  w->add_option("--out", out_path, "output .wav path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& help) {
    return app.exit(help);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  try {
    if (g->parsed()) return cmd_generate(gen_o, out_dir, count, duration, linear, dtype_opt);
    if (s->parsed()) return cmd_solve(solve_o, out_path, steps, linear, vmax, sigma, cx, cy);
    if (f->parsed()) return cmd_fit_dmd(fit_o, data_dir, out_path, rank, sub_step, pair_stride);
    if (r->parsed())
      return cmd_rollout(roll_o, model_path, data_dir, out_dir, block, steps, split, dtype);
    if (e->parsed()) return cmd_evaluate(eval_o, truth_dir, pred_dir, model_path, out_dir);
    if (sp->parsed()) return cmd_spectra(spec_o, traj_path, probe, channel, out_dir, radial);
    if (w->parsed()) return cmd_export_wav(traj_path, probe, channel, out_path);
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const InstabilityError& err) {
    std::cerr << "numerical error: " << err.what() << "\n";
    return 4;
  } catch (const RegimeError& err) {
    std::cerr << "numerical error: " << err.what() << "\n";
    return 4;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
  return 0;
}
