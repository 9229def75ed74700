// Dataset generation: randomized Gaussian strikes, trajectory synthesis,
// per-channel normalization statistics, and the JSON manifest.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "plateforge/common.hpp"
#include "plateforge/plate.hpp"
#include "plateforge/rng.hpp"
#include "plateforge/solver.hpp"
#include "plateforge/threading.hpp"
#include "plateforge/trajectory.hpp"
#include "plateforge/trajectory_io.hpp"

namespace plateforge {

// Randomized excitation: a Gaussian velocity bump, zero displacement.
struct StrikeConfig {
  double vmax_lo = 5.0, vmax_hi = 25.0;    // m/s
  double sigma_lo = 0.02, sigma_hi = 0.1;  // m
  double center_margin = 0.05;             // m, inset of strike centers from the edges

  void validate(const PlateParams& p) const {
    if (!(vmax_lo > 0 && vmax_lo <= vmax_hi)) throw ValidationError("StrikeConfig: bad vmax range");
    if (!(sigma_lo > 0 && sigma_lo <= sigma_hi))
      throw ValidationError("StrikeConfig: bad sigma range");
    if (!(center_margin >= 0 && center_margin < std::min(p.Lx, p.Ly) / 2))
      throw ValidationError("StrikeConfig: center_margin out of range");
  }
};

struct StrikeSample {
  double vmax = 0, sigma = 0, x0 = 0, y0 = 0;
};

// Draw order is pinned (vmax, sigma, x0, y0) so a recorded seed reproduces
// the strike bit-exactly.
inline StrikeSample sample_strike(std::mt19937_64& rng, const StrikeConfig& strike,
                                  const PlateParams& params) {
  strike.validate(params);
  StrikeSample s;
  s.vmax = uniform_range(rng, strike.vmax_lo, strike.vmax_hi);
  s.sigma = uniform_range(rng, strike.sigma_lo, strike.sigma_hi);
  s.x0 = uniform_range(rng, strike.center_margin, params.Lx - strike.center_margin);
  s.y0 = uniform_range(rng, strike.center_margin, params.Ly - strike.center_margin);
  return s;
}

inline FieldSnapshot strike_field(const StrikeSample& s, const PlateParams& params) {
  FieldSnapshot f;
  f.displacement = Grid::Zero(params.Ny, params.Nx);
  f.velocity.resize(params.Ny, params.Nx);
  for (int j = 0; j < params.Ny; ++j) {
    const double y = j * params.dy;
    for (int i = 0; i < params.Nx; ++i) {
      const double x = i * params.dx;
      if (i == 0 || i == params.Nx - 1 || j == 0 || j == params.Ny - 1) {
        f.velocity(j, i) = 0.0;  // simply supported edges stay pinned
      } else {
        const double r2 = (x - s.x0) * (x - s.x0) + (y - s.y0) * (y - s.y0);
        f.velocity(j, i) = s.vmax * std::exp(-r2 / (2.0 * s.sigma * s.sigma));
      }
    }
  }
  return f;
}

inline FieldSnapshot sample_initial_condition(std::mt19937_64& rng, const StrikeConfig& strike,
                                              const PlateParams& params) {
  return strike_field(sample_strike(rng, strike, params), params);
}

enum class NormDirection { Forward, Inverse };

// Per-channel scale factors; data is divided by these on the forward pass.
struct NormStats {
  double displacement_scale = 1.0;
  double velocity_scale = 1.0;
  std::string computed_on = "train";

  void validate() const {
    if (!(displacement_scale > 0) || !(velocity_scale > 0))
      throw ValidationError("NormStats: scales must be > 0");
  }

  nlohmann::json to_json() const {
    return {{"displacement_scale", displacement_scale},
            {"velocity_scale", velocity_scale},
            {"computed_on", computed_on}};
  }
  static NormStats from_json(const nlohmann::json& j) {
    NormStats s;
    s.displacement_scale = j.at("displacement_scale").get<double>();
    s.velocity_scale = j.at("velocity_scale").get<double>();
    s.computed_on = j.value("computed_on", "train");
    s.validate();
    return s;
  }
};

inline void apply_normalization(Trajectory& traj, const NormStats& stats, NormDirection dir) {
  stats.validate();
  const bool already = traj.meta.contains("normalization") && !traj.meta["normalization"].is_null();
  if (dir == NormDirection::Forward && already)
    throw ConfigError("apply_normalization: trajectory is already normalized");
  if (dir == NormDirection::Inverse && !already)
    throw ConfigError("apply_normalization: trajectory is not normalized");
  const double fd = dir == NormDirection::Forward ? 1.0 / stats.displacement_scale
                                                  : stats.displacement_scale;
  const double fv =
      dir == NormDirection::Forward ? 1.0 / stats.velocity_scale : stats.velocity_scale;
  const long npts = traj.npts();
  for (int t = 0; t < traj.frames; ++t) {
    Eigen::Map<Eigen::VectorXd>(traj.channel_ptr(t, kDisplacement), npts) *= fd;
    Eigen::Map<Eigen::VectorXd>(traj.channel_ptr(t, kVelocity), npts) *= fv;
  }
  traj.meta["normalization"] =
      dir == NormDirection::Forward ? stats.to_json() : nlohmann::json(nullptr);
}

struct ManifestEntry {
  std::string path;  // relative to the manifest directory
  int id = 0;
  std::uint64_t seed = 0;
  std::string split;  // train | val | test
};

struct DatasetManifest {
  std::uint64_t master_seed = 0;
  std::string config_hash;
  nlohmann::json config = nlohmann::json::object();
  NormStats normalization;
  std::vector<ManifestEntry> trajectories;
  std::string root_dir;  // directory holding the manifest, set on load/save

  std::vector<const ManifestEntry*> split_entries(const std::string& split) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : trajectories)
      if (e.split == split) out.push_back(&e);
    return out;
  }

  std::string resolve(const ManifestEntry& e) const {
    return (std::filesystem::path(root_dir) / e.path).string();
  }

  nlohmann::json to_json() const {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& e : trajectories)
      t.push_back({{"path", e.path}, {"id", e.id}, {"seed", e.seed}, {"split", e.split}});
    return {{"format", "plateforge-manifest"}, {"version", 1},
            {"master_seed", master_seed},      {"config_hash", config_hash},
            {"config", config},                {"normalization", normalization.to_json()},
            {"trajectories", t}};
  }

  static DatasetManifest from_json(const nlohmann::json& j, const std::string& root_dir) {
    if (j.value("format", "") != "plateforge-manifest" || j.value("version", -1) != 1)
      throw FormatError("not a plateforge manifest");
    DatasetManifest m;
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.config_hash = j.value("config_hash", "");
    m.config = j.value("config", nlohmann::json::object());
    m.normalization = NormStats::from_json(j.at("normalization"));
    for (const auto& e : j.at("trajectories"))
      m.trajectories.push_back({e.at("path").get<std::string>(), e.at("id").get<int>(),
                                e.at("seed").get<std::uint64_t>(),
                                e.at("split").get<std::string>()});
    m.root_dir = root_dir;
    return m;
  }
};

inline void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open file: " + path);
  out << m.to_json().dump(2) << "\n";
  if (!out.flush()) throw Error("write failed: " + path);
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw FormatError("malformed manifest JSON: " + path);
  return DatasetManifest::from_json(j, std::filesystem::path(path).parent_path().string());
}

// Split assignment is a pure function of (count, fractions, index): the first
// block of indices trains, the next validates, the rest tests.
inline std::string split_for_index(int index, int count, double train_fraction,
                                   double val_fraction) {
  const int n_train = static_cast<int>(std::llround(count * train_fraction));
  const int n_val = static_cast<int>(std::llround(count * val_fraction));
  if (index < n_train) return "train";
  if (index < n_train + n_val) return "val";
  return "test";
}

struct GeneratorConfig {
  PlateParams params = PlateParams::berger_defaults();
  int mx = 15, my = 15;
  StrikeConfig strike;
  int count = 100;
  double duration = 1.0;  // seconds
  double train_fraction = 0.8, val_fraction = 0.1;
  int oversample = 8;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string dtype = "f32";
  nlohmann::json config_echo = nlohmann::json::object();  // resolved run config
  std::string config_hash;

  int frames() const { return static_cast<int>(std::llround(duration * params.fs)); }

  void validate() const {
    params.validate();
    strike.validate(params);
    if (count < 1) throw ValidationError("GeneratorConfig: count must be >= 1");
    if (!(duration > 0)) throw ValidationError("GeneratorConfig: duration must be > 0");
    if (oversample < 1) throw ValidationError("GeneratorConfig: oversample must be >= 1");
    if (!(train_fraction >= 0 && val_fraction >= 0 && train_fraction + val_fraction <= 1.0))
      throw ValidationError("GeneratorConfig: bad split fractions");
    if (dtype != "f32" && dtype != "f64") throw ValidationError("GeneratorConfig: bad dtype");
  }
};

namespace detail {

struct ChannelAccum {
  double sum = 0.0, sum_sq = 0.0;
  long count = 0;
};

// Kahan-compensated accumulation over one reconstructed chunk.
inline void accumulate(ChannelAccum& a, const double* x, long n) {
  double cs = 0.0, cq = 0.0;
  double s = 0.0, q = 0.0;
  for (long i = 0; i < n; ++i) {
    double ys = x[i] - cs;
    double ts = s + ys;
    cs = (ts - s) - ys;
    s = ts;
    double v = x[i] * x[i];
    double yq = v - cq;
    double tq = q + yq;
    cq = (tq - q) - yq;
    q = tq;
  }
  a.sum += s;
  a.sum_sq += q;
  a.count += n;
}

}  // namespace detail

inline std::string trajectory_filename(int index) {
  char b[32];
  std::snprintf(b, sizeof b, "traj_%04d.plt1", index);
  return b;
}

// Generates `count` trajectories into out_dir plus manifest.json. Trajectories
// are stored in physical units; the manifest carries the normalization scales
// computed over the training split.
inline DatasetManifest generate_dataset(const GeneratorConfig& config, const std::string& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  const ModalBasis basis = build_basis(config.params, config.mx, config.my);
  const int frames = config.frames();
  const long npts = config.params.npts();

  struct PerTraj {
    detail::ChannelAccum disp, vel;
    StrikeSample strike;
    double min_tnl = 0.0;
  };
  std::vector<PerTraj> stats(static_cast<std::size_t>(config.count));

  parallel_for(config.count, config.jobs, [&](long i) {
    const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(seed);
    const StrikeSample strike = sample_strike(rng, config.strike, config.params);
    const FieldSnapshot ic = strike_field(strike, config.params);
    ModalState s0{project_field(ic.displacement, basis), project_field(ic.velocity, basis)};

    ModalTrajectory mt;
    try {
      mt = simulate_modal(config.params, basis, s0, frames, config.oversample);
    } catch (const InstabilityError& e) {
      throw InstabilityError("trajectory " + std::to_string(i) + ": " + e.what(), e.step_index);
    }

    const std::string split =
        split_for_index(static_cast<int>(i), config.count, config.train_fraction,
                        config.val_fraction);
    nlohmann::json meta;
    meta["params"] = {{"rho2", config.params.rho2},
                      {"D", config.params.D},
                      {"T0", config.params.T0},
                      {"d1", config.params.d1},
                      {"d3", config.params.d3},
                      {"cnl_over_s0", config.params.cnl_over_s0},
                      {"Lx", config.params.Lx},
                      {"Ly", config.params.Ly},
                      {"modes_x", config.mx},
                      {"modes_y", config.my},
                      {"oversample", config.oversample}};
    meta["seed"] = seed;
    meta["meta"] = {{"id", static_cast<int>(i)},
                    {"kind", "ground_truth"},
                    {"split", split},
                    {"config_hash", config.config_hash},
                    {"strike",
                     {{"vmax", strike.vmax},
                      {"sigma", strike.sigma},
                      {"x0", strike.x0},
                      {"y0", strike.y0}}},
                    {"min_tnl", mt.min_tnl}};

    const std::string rel = trajectory_filename(static_cast<int>(i));
    const std::string path = (std::filesystem::path(out_dir) / rel).string();
    TrajectoryWriter writer(path, frames, config.params.Ny, config.params.Nx, config.params.fs,
                            config.params.dx, config.params.dy, meta, config.dtype);

    PerTraj& ps = stats[static_cast<std::size_t>(i)];
    ps.strike = strike;
    ps.min_tnl = mt.min_tnl;
    constexpr int chunk = 512;
    std::vector<double> planar(static_cast<std::size_t>(chunk) * kChannels * npts);
    for (int t0 = 0; t0 < frames; t0 += chunk) {
      const int n = std::min(chunk, frames - t0);
      Eigen::MatrixXd gd = reconstruct_frames(mt.u.middleCols(t0, n), basis);
      Eigen::MatrixXd gv = reconstruct_frames(mt.v.middleCols(t0, n), basis);
      for (int j = 0; j < n; ++j) {
        double* dst = planar.data() + static_cast<std::size_t>(j) * kChannels * npts;
        Eigen::Map<Eigen::VectorXd>(dst, npts) = gd.col(j);
        Eigen::Map<Eigen::VectorXd>(dst + npts, npts) = gv.col(j);
      }
      writer.append_frames(planar.data(), n);
      if (split == "train") {
        for (int j = 0; j < n; ++j) {
          const double* dst = planar.data() + static_cast<std::size_t>(j) * kChannels * npts;
          detail::accumulate(ps.disp, dst, npts);
          detail::accumulate(ps.vel, dst + npts, npts);
        }
      }
    }
    writer.finalize();
  });

  // Combine training-split moments in index order; population standard
  // deviation about the mean.
  detail::ChannelAccum disp, vel;
  for (int i = 0; i < config.count; ++i) {
    if (split_for_index(i, config.count, config.train_fraction, config.val_fraction) != "train")
      continue;
    disp.sum += stats[static_cast<std::size_t>(i)].disp.sum;
    disp.sum_sq += stats[static_cast<std::size_t>(i)].disp.sum_sq;
    disp.count += stats[static_cast<std::size_t>(i)].disp.count;
    vel.sum += stats[static_cast<std::size_t>(i)].vel.sum;
    vel.sum_sq += stats[static_cast<std::size_t>(i)].vel.sum_sq;
    vel.count += stats[static_cast<std::size_t>(i)].vel.count;
  }
  if (disp.count == 0) throw ConfigError("generate_dataset: empty training split");
  auto stddev = [](const detail::ChannelAccum& a) {
    const double mean = a.sum / static_cast<double>(a.count);
    const double var = a.sum_sq / static_cast<double>(a.count) - mean * mean;
    return std::sqrt(std::max(var, 0.0));
  };

  DatasetManifest manifest;
  manifest.master_seed = config.seed;
  manifest.config_hash = config.config_hash;
  manifest.config = config.config_echo;
  manifest.normalization.displacement_scale = stddev(disp);
  manifest.normalization.velocity_scale = stddev(vel);
  manifest.normalization.computed_on = "train";
  manifest.normalization.validate();
  manifest.root_dir = out_dir;
  for (int i = 0; i < config.count; ++i)
    manifest.trajectories.push_back(
        {trajectory_filename(i), i, derive_seed(config.seed, static_cast<std::uint64_t>(i)),
         split_for_index(i, config.count, config.train_fraction, config.val_fraction)});

  save_manifest(manifest, (std::filesystem::path(out_dir) / "manifest.json").string());
  return manifest;
}

// Recomputes normalization scales by streaming over the manifest's training
// files; matches the scales embedded at generation time up to storage
// precision.
inline NormStats compute_norm_stats(const DatasetManifest& manifest) {
  auto train = manifest.split_entries("train");
  if (train.empty()) throw ConfigError("compute_norm_stats: manifest has no training split");
  detail::ChannelAccum disp, vel;
  for (const auto* e : train) {
    TrajectoryReader r(manifest.resolve(*e));
    const long npts = static_cast<long>(r.ny()) * r.nx();
    constexpr int chunk = 512;
    std::vector<double> planar(static_cast<std::size_t>(chunk) * kChannels * npts);
    int left = r.frames();
    while (left > 0) {
      const int n = std::min(chunk, left);
      r.read_frames(planar.data(), n);
      for (int j = 0; j < n; ++j) {
        const double* dst = planar.data() + static_cast<std::size_t>(j) * kChannels * npts;
        detail::accumulate(disp, dst, npts);
        detail::accumulate(vel, dst + npts, npts);
      }
      left -= n;
    }
  }
  auto stddev = [](const detail::ChannelAccum& a) {
    const double mean = a.sum / static_cast<double>(a.count);
    return std::sqrt(std::max(a.sum_sq / static_cast<double>(a.count) - mean * mean, 0.0));
  };
  NormStats s;
  s.displacement_scale = stddev(disp);
  s.velocity_scale = stddev(vel);
  s.computed_on = "train";
  s.validate();
  return s;
}

// Cheap structural check that every manifest entry exists and has a
// consistent header.
inline void validate_manifest(const DatasetManifest& manifest) {
  for (const auto& e : manifest.trajectories) {
    TrajectoryReader r(manifest.resolve(e));
    const auto& meta = r.meta();
    if (meta.contains("meta") && meta["meta"].value("id", -1) != e.id)
      throw FormatError("manifest id mismatch for " + e.path);
  }
}

}  // namespace plateforge
