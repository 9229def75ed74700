#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "plateforge/metrics.hpp"

using namespace plateforge;
using Catch::Approx;

TEST_CASE("relative error identities", "[metrics]") {
  std::mt19937_64 rng(1);
  Eigen::VectorXd truth(500);
  for (auto& x : truth.reshaped()) x = 2 * uniform01(rng) - 1;

  CHECK(relative_mse(truth, truth) == 0.0);
  CHECK(relative_mae(truth, truth) == 0.0);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(500);
  CHECK(relative_mse(zero, truth) == Approx(1.0).epsilon(1e-15));
  CHECK(relative_mae(zero, truth) == Approx(1.0).epsilon(1e-15));

  CHECK(relative_mse(2.0 * truth, truth) == Approx(1.0).epsilon(1e-12));
  CHECK(relative_mae(2.0 * truth, truth) == Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(relative_mse(truth, zero), MetricError);
  CHECK_THROWS_AS(relative_mae(truth, zero), MetricError);
  CHECK_THROWS_AS(relative_mse(truth, Eigen::VectorXd::Zero(10)), ShapeError);
}

TEST_CASE("relative errors match a naive double loop on large inputs", "[metrics]") {
  std::mt19937_64 rng(2);
  const long n = 1000000;
  Eigen::VectorXd pred(n), truth(n);
  for (long i = 0; i < n; ++i) {
    truth[i] = 2 * uniform01(rng) - 1;
    pred[i] = truth[i] + 0.01 * (2 * uniform01(rng) - 1);
  }

  long double sq_num = 0, sq_den = 0, abs_num = 0, abs_den = 0;
  for (long i = 0; i < n; ++i) {
    const long double d = static_cast<long double>(pred[i]) - truth[i];
    sq_num += d * d;
    sq_den += static_cast<long double>(truth[i]) * truth[i];
    abs_num += fabsl(d);
    abs_den += fabsl(truth[i]);
  }
  CHECK(relative_mse(pred, truth) ==
        Approx(static_cast<double>(sq_num / sq_den)).epsilon(1e-12));
  CHECK(relative_mae(pred, truth) ==
        Approx(static_cast<double>(abs_num / abs_den)).epsilon(1e-12));
}

TEST_CASE("relative errors are scale invariant", "[metrics]") {
  std::mt19937_64 rng(3);
  Eigen::VectorXd pred(2000), truth(2000);
  for (long i = 0; i < 2000; ++i) {
    truth[i] = 2 * uniform01(rng) - 1;
    pred[i] = truth[i] + 0.1 * (2 * uniform01(rng) - 1);
  }
  const double base_mse = relative_mse(pred, truth);
  const double base_mae = relative_mae(pred, truth);
  for (double c : {1e-6, 3.7, 1e5}) {
    CHECK(relative_mse(c * pred, c * truth) == Approx(base_mse).epsilon(1e-12));
    CHECK(relative_mae(c * pred, c * truth) == Approx(base_mae).epsilon(1e-12));
  }
}

namespace {

Trajectory noise_trajectory(int frames, int ny, int nx, double fs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Trajectory t;
  t.allocate(frames, ny, nx);
  t.fs = fs;
  t.dx = 0.4 / (nx - 1);
  t.dy = 0.36 / (ny - 1);
  for (auto& x : t.data) x = 2 * uniform01(rng) - 1;
  return t;
}

}  // namespace

TEST_CASE("blockwise mae partitions as expected", "[metrics]") {
  const Trajectory truth = noise_trajectory(4000, 5, 7, 16000.0, 10);
  Trajectory pred = truth;
  const BlockSeries zero_series = blockwise_mae(pred, truth, 49);
  CHECK(zero_series.rel_mae.size() == 81);  // floor(4000 / 49)
  for (double e : zero_series.rel_mae) CHECK(e == 0.0);
  CHECK(zero_series.t_start_s[1] == Approx(49.0 / 16000.0));
  // the first 250 ms at 16 kHz span 4000 frames
  CHECK(zero_series.t_start_s.back() < 0.25);

  // consistency with independent per-block evaluation
  std::mt19937_64 rng(11);
  for (auto& x : pred.data) x += 0.05 * (2 * uniform01(rng) - 1);
  const BlockSeries s = blockwise_mae(pred, truth, 100);
  for (int b = 0; b < 3; ++b) {
    detail::ErrorAccum acc;
    detail::accumulate_frames(acc, pred, b * 100, truth, b * 100, 100, ChannelSelect::Both);
    CHECK(s.rel_mae[b] == Approx(acc.rel_mae()).epsilon(1e-14));
  }

  CHECK_THROWS_AS(blockwise_mae(pred, truth, 5000), ValidationError);
}

TEST_CASE("single-block evaluation with an oracle predictor is exact", "[metrics]") {
  // a predictor that replays the trajectory itself
  struct Replay final : Predictor {
    const Trajectory* traj;
    int cursor = 0;
    explicit Replay(const Trajectory* t) : traj(t) {}
    Trajectory predict(const FieldSnapshot&, int L) override {
      Trajectory out;
      out.allocate(L, traj->ny, traj->nx);
      out.fs = traj->fs;
      for (int j = 0; j < L; ++j)
        Eigen::Map<Eigen::VectorXd>(out.frame_ptr(j), out.frame_stride()) =
            traj->snapshot_vector(cursor + 1 + j);
      cursor += 100;  // matches the evaluation stride
      return out;
    }
  };

  const Trajectory truth = noise_trajectory(1200, 4, 5, 16000.0, 12);
  Replay oracle(&truth);
  const SingleBlockResult r = evaluate_single_block(oracle, {&truth}, 49, 100);
  CHECK(r.n_samples == (1200 - 1 - 49) / 100 + 1);
  CHECK(r.mean_rel_mse == 0.0);
  CHECK(r.mean_rel_mae == 0.0);

  CHECK_THROWS_AS(evaluate_single_block(oracle, {}, 49, 100), ConfigError);
}

TEST_CASE("spectrogram finds a damped tone and respects Parseval", "[metrics]") {
  const double fs = 16000.0;
  const int n = 16000;
  Eigen::VectorXd sig(n);
  for (int k = 0; k < n; ++k)
    sig[k] = std::exp(-2.27 * k / fs) * std::sin(2 * std::numbers::pi * 103.2 * k / fs);

  const Spectrogram sg = stft_magnitude(sig, fs, 512, 128);
  CHECK(sg.freqs_hz[1] == Approx(fs / 512));

  // ridge within one bin of the tone for every frame with signal
  for (int f = 0; f < std::min<int>(20, static_cast<int>(sg.times_s.size())); ++f) {
    Eigen::Index peak;
    sg.magnitude.col(f).maxCoeff(&peak);
    CHECK(std::abs(sg.freqs_hz[peak] - 103.2) <= fs / 512);
  }

  // Parseval per frame: sum |X|^2 over the full spectrum equals N * windowed
  // energy; reassemble the two-sided sum from the one-sided magnitudes.
  const Eigen::VectorXd w = hann_window(512);
  for (int f : {0, 5, 17}) {
    double lhs = 0;
    for (int b = 0; b < sg.magnitude.rows(); ++b) {
      const double m2 = sg.magnitude(b, f) * sg.magnitude(b, f);
      lhs += (b == 0 || b == 256) ? m2 : 2 * m2;
    }
    double rhs = 0;
    for (int i = 0; i < 512; ++i) {
      const double v = sig[f * 128 + i] * w[i];
      rhs += v * v;
    }
    CHECK(lhs / 512.0 == Approx(rhs).epsilon(1e-6));
  }

  const Spectrogram zero = stft_magnitude(Eigen::VectorXd::Zero(2048), fs, 512, 128);
  CHECK(zero.magnitude.cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(stft_magnitude(sig, fs, 1, 128), ValidationError);
  CHECK_THROWS_AS(stft_magnitude(Eigen::VectorXd::Zero(100), fs, 512, 128), ValidationError);
}

TEST_CASE("peak estimation resolves a damped oscillation", "[metrics]") {
  const double fs = 16000.0;
  Eigen::VectorXd sig(8000);
  for (int k = 0; k < 8000; ++k)
    sig[k] = std::exp(-2.27 * k / fs) * std::sin(2 * std::numbers::pi * 103.2 * k / fs);
  CHECK(estimate_peak_frequency(sig, fs, 50, 400) == Approx(103.2).margin(0.5));
}

TEST_CASE("radial spectrum concentrates a single mode in its bin", "[metrics]") {
  const PlateParams p = testutil::full_params();
  Grid field(p.Ny, p.Nx);
  const double pi = std::numbers::pi;
  for (int j = 0; j < p.Ny; ++j)
    for (int i = 0; i < p.Nx; ++i)
      field(j, i) = std::sin(3 * pi * i * p.dx / p.Lx) * std::sin(2 * pi * j * p.dy / p.Ly);

  const RadialSpectrum rs = radial_spectrum_of_field(field, p.dx, p.dy);
  CHECK(rs.bin_width == Approx(2.5));

  const double k_mode = std::sqrt(std::pow(3 / (2 * p.Lx), 2) + std::pow(2 / (2 * p.Ly), 2));
  CHECK(k_mode == Approx(4.6667).margin(0.001));
  const int bin = static_cast<int>(k_mode / rs.bin_width);
  double inside = 0;
  for (int b = std::max(0, bin - 1); b <= bin + 1 && b < rs.power.size(); ++b)
    inside += rs.power[b];
  CHECK(inside >= 0.95 * rs.total_power);

  // binning partitions the total spectral power
  CHECK(rs.power.sum() == Approx(rs.total_power).epsilon(1e-9));
}

TEST_CASE("radial spectrum of a zero trajectory is zero", "[metrics]") {
  Trajectory t;
  t.allocate(8, 37, 41);
  t.fs = 16000;
  t.dx = t.dy = 0.01;
  const RadialSpectrum rs = radial_spatial_power_spectrum(t, 8, kDisplacement);
  CHECK(rs.power.cwiseAbs().maxCoeff() == 0.0);
  CHECK(rs.total_power == 0.0);
}

TEST_CASE("trajectory radial spectrum averages frames and partitions power", "[metrics]") {
  const Trajectory t = noise_trajectory(16, 37, 41, 16000.0, 13);
  const RadialSpectrum rs = radial_spatial_power_spectrum(t, 16, kVelocity);
  CHECK(rs.power.sum() == Approx(rs.total_power).epsilon(1e-9));

  // averaging: a single frame and its 16-fold repetition agree
  Trajectory rep;
  rep.allocate(16, 37, 41);
  rep.fs = t.fs;
  rep.dx = t.dx;
  rep.dy = t.dy;
  for (int k = 0; k < 16; ++k)
    Eigen::Map<Eigen::VectorXd>(rep.frame_ptr(k), rep.frame_stride()) = t.snapshot_vector(0);
  const RadialSpectrum one = radial_spatial_power_spectrum(t, 1, kVelocity);
  const RadialSpectrum avg = radial_spatial_power_spectrum(rep, 16, kVelocity);
  CHECK((one.power - avg.power).cwiseAbs().maxCoeff() <=
        1e-12 * one.power.maxCoeff());
}

TEST_CASE("probe construction picks center and near-edge points", "[metrics]") {
  const ProbeSpec c = make_probe(37, 41, ProbeSpec::Role::Center);
  CHECK(c.iy == 18);
  CHECK(c.ix == 20);
  const ProbeSpec e = make_probe(37, 41, ProbeSpec::Role::Edge);
  CHECK(e.iy == 1);
  CHECK(e.ix == 20);
}

TEST_CASE("report emission is deterministic and carries the table layout", "[metrics]") {
  MetricReport report;
  report.meta = {{"config_hash", "cafe"}};
  report.rows.push_back({"dmd", 1, 49, 1e-4, 2e-3});
  report.rows.push_back({"dmd", 2, 49, 3e-4, 4e-3});
  report.rows.push_back({"dmd", 1, 199, 5e-4, 6e-3});
  BlockSeries bs;
  bs.block_len = 49;
  bs.t_start_s = {0.0, 49.0 / 16000};
  bs.rel_mae = {0.1, 0.2};
  report.block_series.push_back({"dmd", bs});

  const std::string dir_a = testutil::temp_dir("metrics_report_a");
  const std::string dir_b = testutil::temp_dir("metrics_report_b");
  emit_report(report, dir_a);
  emit_report(report, dir_b);

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };
  for (const char* f : {"report.json", "table.csv", "blockwise_dmd_49.csv"})
    CHECK(slurp(dir_a + "/" + f) == slurp(dir_b + "/" + f));

  const std::string table = slurp(dir_a + "/table.csv");
  CHECK(table.find("model,steps,rel_mse,rel_mse_std,rel_mae,rel_mae_std") == 0);
  CHECK(table.find("dmd,49,0.0002,0.0001,0.003,0.001") != std::string::npos);
  CHECK(table.find("dmd,199,0.0005,,0.006,") != std::string::npos);  // single run: empty std

  const std::string blockcsv = slurp(dir_a + "/blockwise_dmd_49.csv");
  CHECK(blockcsv.rfind("t_start_s,rel_mae", 0) == 0);
}
