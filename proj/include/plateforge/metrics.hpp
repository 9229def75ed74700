// Evaluation battery: relative errors, block protocols, probe spectrograms,
// and radially averaged spatial power spectra.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "plateforge/common.hpp"
#include "plateforge/fft.hpp"
#include "plateforge/surrogate.hpp"
#include "plateforge/trajectory.hpp"

namespace plateforge {

namespace detail {

struct ErrorAccum {
  double sq_num = 0, sq_den = 0, abs_num = 0, abs_den = 0;

  void add(const double* pred, const double* truth, long n) {
    for (long i = 0; i < n; ++i) {
      const double d = pred[i] - truth[i];
      sq_num += d * d;
      sq_den += truth[i] * truth[i];
      abs_num += std::abs(d);
      abs_den += std::abs(truth[i]);
    }
  }

  double rel_mse() const {
    if (!(sq_den > 0)) throw MetricError("relative MSE undefined: ground truth has zero norm");
    return sq_num / sq_den;
  }
  double rel_mae() const {
    if (!(abs_den > 0)) throw MetricError("relative MAE undefined: ground truth has zero norm");
    return abs_num / abs_den;
  }
};

// Accumulates one aligned frame range. Channel blocks are contiguous in the
// planar layout, so a channel restriction is a sub-span.
inline void accumulate_frames(ErrorAccum& acc, const Trajectory& pred, int p0,
                              const Trajectory& truth, int t0, int n, ChannelSelect ch) {
  if (pred.ny != truth.ny || pred.nx != truth.nx)
    throw ShapeError("metric: prediction and truth grids differ");
  if (p0 < 0 || t0 < 0 || p0 + n > pred.frames || t0 + n > truth.frames)
    throw ShapeError("metric: frame range out of bounds");
  const long npts = pred.npts();
  for (int k = 0; k < n; ++k) {
    switch (ch) {
      case ChannelSelect::Both:
        acc.add(pred.frame_ptr(p0 + k), truth.frame_ptr(t0 + k), kChannels * npts);
        break;
      case ChannelSelect::Displacement:
        acc.add(pred.channel_ptr(p0 + k, kDisplacement), truth.channel_ptr(t0 + k, kDisplacement),
                npts);
        break;
      case ChannelSelect::Velocity:
        acc.add(pred.channel_ptr(p0 + k, kVelocity), truth.channel_ptr(t0 + k, kVelocity), npts);
        break;
    }
  }
}

}  // namespace detail

// ||pred - truth||_2^2 / ||truth||_2^2 over every entry of the compared block.
inline double relative_mse(const Eigen::Ref<const Eigen::VectorXd>& pred,
                           const Eigen::Ref<const Eigen::VectorXd>& truth) {
  if (pred.size() != truth.size()) throw ShapeError("relative_mse: length mismatch");
  detail::ErrorAccum acc;
  acc.add(pred.data(), truth.data(), pred.size());
  return acc.rel_mse();
}

// ||pred - truth||_1 / ||truth||_1.
inline double relative_mae(const Eigen::Ref<const Eigen::VectorXd>& pred,
                           const Eigen::Ref<const Eigen::VectorXd>& truth) {
  if (pred.size() != truth.size()) throw ShapeError("relative_mae: length mismatch");
  detail::ErrorAccum acc;
  acc.add(pred.data(), truth.data(), pred.size());
  return acc.rel_mae();
}

inline double relative_mse(const Trajectory& pred, const Trajectory& truth,
                           ChannelSelect ch = ChannelSelect::Both) {
  if (pred.frames != truth.frames) throw ShapeError("relative_mse: frame count mismatch");
  detail::ErrorAccum acc;
  detail::accumulate_frames(acc, pred, 0, truth, 0, pred.frames, ch);
  return acc.rel_mse();
}

inline double relative_mae(const Trajectory& pred, const Trajectory& truth,
                           ChannelSelect ch = ChannelSelect::Both) {
  if (pred.frames != truth.frames) throw ShapeError("relative_mae: frame count mismatch");
  detail::ErrorAccum acc;
  detail::accumulate_frames(acc, pred, 0, truth, 0, pred.frames, ch);
  return acc.rel_mae();
}

// ---------------------------------------------------------------------------
// Single-block protocol: starts every `stride` frames, one snapshot in,
// block_len frames out, error against ground truth.

struct SingleBlockResult {
  int block_len = 0;
  int stride = 0;
  long n_samples = 0;
  double mean_rel_mse = 0, mean_rel_mae = 0;
  double std_rel_mse = 0, std_rel_mae = 0;  // across evaluation samples
};

inline SingleBlockResult evaluate_single_block(Predictor& predictor,
                                               const std::vector<const Trajectory*>& test_set,
                                               int block_len, int stride = 100,
                                               ChannelSelect ch = ChannelSelect::Both) {
  if (test_set.empty()) throw ConfigError("evaluate_single_block: empty test set");
  if (block_len < 1 || stride < 1)
    throw ValidationError("evaluate_single_block: block_len and stride must be >= 1");
  const int fstride = predictor.frame_stride();

  std::vector<double> mses, maes;
  for (const Trajectory* traj : test_set) {
    const int horizon = block_len * fstride;
    for (int start = 0; start + horizon < traj->frames; start += stride) {
      Trajectory block = predictor.predict(traj->snapshot(start), block_len);
      detail::ErrorAccum acc;
      if (fstride == 1) {
        detail::accumulate_frames(acc, block, 0, *traj, start + 1, block_len, ch);
      } else {
        for (int j = 0; j < block_len; ++j)
          detail::accumulate_frames(acc, block, j, *traj, start + (j + 1) * fstride, 1, ch);
      }
      mses.push_back(acc.rel_mse());
      maes.push_back(acc.rel_mae());
    }
  }
  if (mses.empty())
    throw ConfigError("evaluate_single_block: trajectories shorter than one block");

  auto mean_std = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::pair<double, double>(m, std::sqrt(s / static_cast<double>(v.size())));
  };
  SingleBlockResult r;
  r.block_len = block_len;
  r.stride = stride;
  r.n_samples = static_cast<long>(mses.size());
  std::tie(r.mean_rel_mse, r.std_rel_mse) = mean_std(mses);
  std::tie(r.mean_rel_mae, r.std_rel_mae) = mean_std(maes);
  return r;
}

// ---------------------------------------------------------------------------
// Per-block relative MAE of an aligned prediction.

struct BlockSeries {
  int block_len = 0;
  std::vector<double> t_start_s;
  std::vector<double> rel_mae;
};

inline BlockSeries blockwise_mae(const Trajectory& pred, const Trajectory& truth, int block_len,
                                 ChannelSelect ch = ChannelSelect::Both) {
  if (pred.frames != truth.frames) throw ShapeError("blockwise_mae: trajectory length mismatch");
  if (block_len < 1 || pred.frames < block_len)
    throw ValidationError("blockwise_mae: trajectory shorter than one block");
  BlockSeries s;
  s.block_len = block_len;
  const int nblocks = pred.frames / block_len;
  for (int b = 0; b < nblocks; ++b) {
    detail::ErrorAccum acc;
    detail::accumulate_frames(acc, pred, b * block_len, truth, b * block_len, block_len, ch);
    s.t_start_s.push_back(b * block_len / pred.fs);
    s.rel_mae.push_back(acc.rel_mae());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Probe spectrogram.

struct ProbeSpec {
  enum class Role { Center, Edge, Custom };
  Role role = Role::Custom;
  int iy = 0, ix = 0;
};

// center: nearest grid point to the plate middle; edge: one cell in from the
// midpoint of the bottom (y = 0) boundary.
inline ProbeSpec make_probe(int ny, int nx, ProbeSpec::Role role) {
  ProbeSpec p;
  p.role = role;
  switch (role) {
    case ProbeSpec::Role::Center:
      p.iy = ny / 2;
      p.ix = nx / 2;
      break;
    case ProbeSpec::Role::Edge:
      p.iy = 1;
      p.ix = nx / 2;
      break;
    case ProbeSpec::Role::Custom:
      break;
  }
  return p;
}

struct Spectrogram {
  Eigen::MatrixXd magnitude;  // (n_bins x n_frames), one-sided
  Eigen::VectorXd freqs_hz;   // bin centers
  Eigen::VectorXd times_s;    // window centers
  int window_len = 0, hop = 0;
  double fs = 0;
};

inline Eigen::VectorXd hann_window(int n) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);  // periodic form
  return w;
}

inline Spectrogram stft_magnitude(const Eigen::VectorXd& signal, double fs, int window_len,
                                  int hop) {
  if (window_len < 2 || hop < 1) throw ValidationError("stft: degenerate window or hop");
  if (window_len > signal.size())
    throw ValidationError("stft: window longer than the signal");
  const Eigen::VectorXd w = hann_window(window_len);
  const int n_frames = static_cast<int>((signal.size() - window_len) / hop) + 1;
  const int n_bins = window_len / 2 + 1;

  Spectrogram sg;
  sg.window_len = window_len;
  sg.hop = hop;
  sg.fs = fs;
  sg.magnitude.resize(n_bins, n_frames);
  sg.freqs_hz.resize(n_bins);
  for (int b = 0; b < n_bins; ++b) sg.freqs_hz[b] = b * fs / window_len;
  sg.times_s.resize(n_frames);

  Fft1d fft(window_len);
  Eigen::VectorXcd buf(window_len);
  for (int f = 0; f < n_frames; ++f) {
    const int start = f * hop;
    sg.times_s[f] = (start + window_len / 2.0) / fs;
    for (int i = 0; i < window_len; ++i) buf[i] = Complex(signal[start + i] * w[i], 0.0);
    fft.forward(buf.data());
    for (int b = 0; b < n_bins; ++b) sg.magnitude(b, f) = std::abs(buf[b]);
  }
  return sg;
}

inline Spectrogram spectrogram(const Trajectory& traj, const ProbeSpec& probe, int channel,
                               int window_len, int hop) {
  return stft_magnitude(traj.probe_signal(probe.iy, probe.ix, channel), traj.fs, window_len, hop);
}

// Periodogram peak with parabolic interpolation, restricted to [fmin, fmax].
inline double estimate_peak_frequency(const Eigen::VectorXd& signal, double fs, double fmin,
                                      double fmax, int pad_factor = 8) {
  if (signal.size() < 4) throw ValidationError("estimate_peak_frequency: signal too short");
  const int n = static_cast<int>(signal.size());
  int nfft = 1;
  while (nfft < n) nfft <<= 1;
  nfft *= std::max(1, pad_factor);

  const Eigen::VectorXd w = hann_window(n);
  Eigen::VectorXcd buf = Eigen::VectorXcd::Zero(nfft);
  for (int i = 0; i < n; ++i) buf[i] = Complex(signal[i] * w[i], 0.0);
  Fft1d fft(nfft);
  fft.forward(buf.data());

  const double df = fs / nfft;
  const int lo = std::max(1, static_cast<int>(std::ceil(fmin / df)));
  const int hi = std::min(nfft / 2 - 1, static_cast<int>(std::floor(fmax / df)));
  if (lo >= hi) throw ValidationError("estimate_peak_frequency: empty frequency band");
  int peak = lo;
  double best = -1;
  for (int b = lo; b <= hi; ++b) {
    const double m = std::abs(buf[b]);
    if (m > best) {
      best = m;
      peak = b;
    }
  }
  const double m0 = std::log(std::abs(buf[peak - 1]) + 1e-300);
  const double m1 = std::log(std::abs(buf[peak]) + 1e-300);
  const double m2 = std::log(std::abs(buf[peak + 1]) + 1e-300);
  const double denom = m0 - 2 * m1 + m2;
  const double delta = std::abs(denom) > 1e-300 ? 0.5 * (m0 - m2) / denom : 0.0;
  return (peak + std::clamp(delta, -0.5, 0.5)) * df;
}

// ---------------------------------------------------------------------------
// Radially averaged spatial power spectrum. Wavenumbers are in cycles per
// metre; power is |DFT|^2 / (Nx*Ny) so the binned total matches the spatial
// mean-square through Parseval.

struct RadialSpectrum {
  Eigen::VectorXd k_centers;  // cycles/m
  Eigen::VectorXd power;
  double bin_width = 0;
  double total_power = 0;
};

namespace detail {

struct RadialBinner {
  std::vector<int> bin_of;  // per (ky, kx) grid element
  int n_bins = 0;
  double bin_width = 0;

  RadialBinner(int ny, int nx, double dx, double dy) {
    const double Lx = dx * (nx - 1), Ly = dy * (ny - 1);
    bin_width = 1.0 / std::max(Lx, Ly);
    bin_of.resize(static_cast<std::size_t>(ny) * nx);
    for (int iy = 0; iy < ny; ++iy) {
      const double ky = (iy <= ny / 2 ? iy : iy - ny) / (dy * ny);
      for (int ix = 0; ix < nx; ++ix) {
        const double kx = (ix <= nx / 2 ? ix : ix - nx) / (dx * nx);
        const double k = std::sqrt(kx * kx + ky * ky);
        const int b = static_cast<int>(k / bin_width);
        bin_of[static_cast<std::size_t>(iy) * nx + ix] = b;
        n_bins = std::max(n_bins, b + 1);
      }
    }
  }
};

}  // namespace detail

inline RadialSpectrum radial_spectrum_of_field(const Grid& field, double dx, double dy) {
  const int ny = static_cast<int>(field.rows()), nx = static_cast<int>(field.cols());
  detail::RadialBinner binner(ny, nx, dx, dy);
  Fft2d fft(ny, nx);
  const Eigen::MatrixXcd F = fft.forward(field);

  RadialSpectrum rs;
  rs.bin_width = binner.bin_width;
  rs.power = Eigen::VectorXd::Zero(binner.n_bins);
  const double norm = 1.0 / (static_cast<double>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const double p = std::norm(F(iy, ix)) * norm;
      rs.power[binner.bin_of[static_cast<std::size_t>(iy) * nx + ix]] += p;
      rs.total_power += p;
    }
  rs.k_centers.resize(binner.n_bins);
  for (int b = 0; b < binner.n_bins; ++b) rs.k_centers[b] = (b + 0.5) * binner.bin_width;
  return rs;
}

// Time average over the first `nframes` frames of one channel.
inline RadialSpectrum radial_spatial_power_spectrum(const Trajectory& traj, int nframes,
                                                    int channel = kDisplacement) {
  if (nframes < 1 || nframes > traj.frames)
    throw ValidationError("radial_spatial_power_spectrum: bad frame count");
  detail::RadialBinner binner(traj.ny, traj.nx, traj.dx, traj.dy);
  Fft2d fft(traj.ny, traj.nx);

  RadialSpectrum rs;
  rs.bin_width = binner.bin_width;
  rs.power = Eigen::VectorXd::Zero(binner.n_bins);
  const double norm = 1.0 / (static_cast<double>(traj.nx) * traj.ny);
  for (int t = 0; t < nframes; ++t) {
    const Eigen::MatrixXcd F = fft.forward(traj.grid(t, channel));
    for (int iy = 0; iy < traj.ny; ++iy)
      for (int ix = 0; ix < traj.nx; ++ix) {
        const double p = std::norm(F(iy, ix)) * norm;
        rs.power[binner.bin_of[static_cast<std::size_t>(iy) * traj.nx + ix]] += p;
        rs.total_power += p;
      }
  }
  rs.power /= static_cast<double>(nframes);
  rs.total_power /= static_cast<double>(nframes);
  rs.k_centers.resize(binner.n_bins);
  for (int b = 0; b < binner.n_bins; ++b) rs.k_centers[b] = (b + 0.5) * binner.bin_width;
  return rs;
}

inline double energy_fraction_beyond(const RadialSpectrum& rs, double k_cutoff) {
  if (!(rs.total_power > 0)) return 0.0;
  double beyond = 0;
  for (Eigen::Index b = 0; b < rs.k_centers.size(); ++b)
    if (rs.k_centers[b] - 0.5 * rs.bin_width >= k_cutoff) beyond += rs.power[b];
  return beyond / rs.total_power;
}

// ---------------------------------------------------------------------------
// Report assembly and emission.

struct TableRow {
  std::string model_id;
  std::uint64_t seed = 0;
  int steps = 0;
  double rel_mse = 0, rel_mae = 0;
};

struct NamedBlockSeries {
  std::string model_id;
  BlockSeries series;
};

struct NamedRadialCurve {
  std::string label;
  RadialSpectrum spectrum;
};

struct NamedSpectrogram {
  std::string label;
  Spectrogram spectrogram;
};

struct MetricReport {
  std::vector<TableRow> rows;
  std::vector<NamedBlockSeries> block_series;
  std::vector<NamedRadialCurve> radial_curves;
  std::vector<NamedSpectrogram> spectrograms;
  nlohmann::json meta = nlohmann::json::object();
};

namespace detail {

inline std::string fmt_g(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.12g", v);
  return b;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open file: " + path);
  out << text;
  if (!out.flush()) throw Error("write failed: " + path);
}

// Minimal deterministic line plot; y is clamped to the data range.
inline std::string svg_line_plot(const std::vector<double>& x,
                                 const std::vector<std::vector<double>>& ys,
                                 const std::vector<std::string>& labels, const std::string& title,
                                 const std::string& xlabel, const std::string& ylabel,
                                 bool log_y = false) {
  const int W = 720, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (double v : x) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  auto ty = [&](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
  for (const auto& s : ys)
    for (double v : s) {
      ymin = std::min(ymin, ty(v));
      ymax = std::max(ymax, ty(v));
    }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) ymax = ymin + 1;
  auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (ty(v) - ymin) / (ymax - ymin) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(W) + "\" height=\"" +
       std::to_string(H) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + std::to_string(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
       title + "</text>\n";
  s += "<text x=\"" + std::to_string(W / 2) + "\" y=\"" + std::to_string(H - 12) +
       "\" text-anchor=\"middle\" font-size=\"12\">" + xlabel + "</text>\n";
  s += "<text x=\"16\" y=\"" + std::to_string(H / 2) + "\" text-anchor=\"middle\" font-size=\"12\" "
       "transform=\"rotate(-90 16 " + std::to_string(H / 2) + ")\">" + ylabel + "</text>\n";
  s += "<rect x=\"" + std::to_string(ml) + "\" y=\"" + std::to_string(mt) + "\" width=\"" +
       std::to_string(W - ml - mr) + "\" height=\"" + std::to_string(H - mt - mb) +
       "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (std::size_t si = 0; si < ys.size(); ++si) {
    s += "<polyline fill=\"none\" stroke=\"" + std::string(colors[si % 6]) +
         "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < x.size() && i < ys[si].size(); ++i)
      s += fmt_g(px(x[i])) + "," + fmt_g(py(ys[si][i])) + " ";
    s += "\"/>\n";
    if (si < labels.size())
      s += "<text x=\"" + std::to_string(ml + 10) + "\" y=\"" +
           std::to_string(mt + 16 + 14 * static_cast<int>(si)) + "\" font-size=\"11\" fill=\"" +
           colors[si % 6] + "\">" + labels[si] + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace detail

// Writes report.json, the Table-1-shaped table.csv (mean and across-seed std
// per model/steps), one CSV per block series and radial curve, and SVG plots.
inline void emit_report(const MetricReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  nlohmann::json j;
  j["meta"] = report.meta;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows)
    j["rows"].push_back({{"model", r.model_id},
                         {"seed", r.seed},
                         {"steps", r.steps},
                         {"rel_mse", r.rel_mse},
                         {"rel_mae", r.rel_mae}});
  j["block_series"] = nlohmann::json::array();
  for (const auto& b : report.block_series)
    j["block_series"].push_back({{"model", b.model_id},
                                 {"block_len", b.series.block_len},
                                 {"t_start_s", b.series.t_start_s},
                                 {"rel_mae", b.series.rel_mae}});
  j["radial_curves"] = nlohmann::json::array();
  for (const auto& rc : report.radial_curves) {
    std::vector<double> k(rc.spectrum.k_centers.data(),
                          rc.spectrum.k_centers.data() + rc.spectrum.k_centers.size());
    std::vector<double> p(rc.spectrum.power.data(),
                          rc.spectrum.power.data() + rc.spectrum.power.size());
    j["radial_curves"].push_back({{"label", rc.label},
                                  {"k_cycles_per_m", k},
                                  {"power", p},
                                  {"bin_width", rc.spectrum.bin_width},
                                  {"total_power", rc.spectrum.total_power}});
  }
  detail::write_text((fs::path(out_dir) / "report.json").string(), j.dump(2) + "\n");

  // table.csv aggregates runs (seeds) per (model, steps), preserving first
  // appearance order; std columns are empty with fewer than two runs.
  {
    std::string csv = "model,steps,rel_mse,rel_mse_std,rel_mae,rel_mae_std\n";
    std::vector<std::pair<std::string, int>> groups;
    for (const auto& r : report.rows) {
      std::pair<std::string, int> g{r.model_id, r.steps};
      if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    }
    for (const auto& g : groups) {
      std::vector<double> mse, mae;
      for (const auto& r : report.rows)
        if (r.model_id == g.first && r.steps == g.second) {
          mse.push_back(r.rel_mse);
          mae.push_back(r.rel_mae);
        }
      auto mean = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v) m += x;
        return m / static_cast<double>(v.size());
      };
      auto pstd = [&](const std::vector<double>& v, double m) {
        double s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / static_cast<double>(v.size()));
      };
      const double m_mse = mean(mse), m_mae = mean(mae);
      csv += g.first + "," + std::to_string(g.second) + "," + detail::fmt_g(m_mse) + ",";
      csv += (mse.size() > 1 ? detail::fmt_g(pstd(mse, m_mse)) : std::string());
      csv += "," + detail::fmt_g(m_mae) + ",";
      csv += (mae.size() > 1 ? detail::fmt_g(pstd(mae, m_mae)) : std::string());
      csv += "\n";
    }
    detail::write_text((fs::path(out_dir) / "table.csv").string(), csv);
  }

  for (const auto& b : report.block_series) {
    std::string csv = "t_start_s,rel_mae\n";
    for (std::size_t i = 0; i < b.series.t_start_s.size(); ++i)
      csv += detail::fmt_g(b.series.t_start_s[i]) + "," + detail::fmt_g(b.series.rel_mae[i]) + "\n";
    const std::string stem = "blockwise_" + b.model_id + "_" + std::to_string(b.series.block_len);
    detail::write_text((fs::path(out_dir) / (stem + ".csv")).string(), csv);
    detail::write_text(
        (fs::path(out_dir) / (stem + ".svg")).string(),
        detail::svg_line_plot(b.series.t_start_s, {b.series.rel_mae}, {b.model_id},
                              "Relative MAE per block (L=" + std::to_string(b.series.block_len) +
                                  ")",
                              "block start (s)", "relative MAE", true));
  }

  for (const auto& rc : report.radial_curves) {
    std::string csv = "k_cycles_per_m,power\n";
    for (Eigen::Index i = 0; i < rc.spectrum.k_centers.size(); ++i)
      csv += detail::fmt_g(rc.spectrum.k_centers[i]) + "," + detail::fmt_g(rc.spectrum.power[i]) +
             "\n";
    detail::write_text((fs::path(out_dir) / ("radial_" + rc.label + ".csv")).string(), csv);
    std::vector<double> k(rc.spectrum.k_centers.data(),
                          rc.spectrum.k_centers.data() + rc.spectrum.k_centers.size());
    std::vector<double> p(rc.spectrum.power.data(),
                          rc.spectrum.power.data() + rc.spectrum.power.size());
    detail::write_text((fs::path(out_dir) / ("radial_" + rc.label + ".svg")).string(),
                       detail::svg_line_plot(k, {p}, {rc.label}, "Radial spatial power spectrum",
                                             "wavenumber (cycles/m)", "power", true));
  }

  // Spectrograms: first column is the bin frequency, one column per frame.
  for (const auto& ns : report.spectrograms) {
    const Spectrogram& sg = ns.spectrogram;
    std::string csv = "freq_hz";
    for (Eigen::Index f = 0; f < sg.times_s.size(); ++f)
      csv += ",t" + detail::fmt_g(sg.times_s[f]);
    csv += "\n";
    for (Eigen::Index b = 0; b < sg.freqs_hz.size(); ++b) {
      csv += detail::fmt_g(sg.freqs_hz[b]);
      for (Eigen::Index f = 0; f < sg.times_s.size(); ++f)
        csv += "," + detail::fmt_g(sg.magnitude(b, f));
      csv += "\n";
    }
    detail::write_text((fs::path(out_dir) / ("spectrogram_" + ns.label + ".csv")).string(), csv);
  }
}

}  // namespace plateforge
