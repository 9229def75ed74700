// 16-bit PCM mono WAV export of probe signals.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>

#include "plateforge/common.hpp"
#include "plateforge/trajectory.hpp"
#include "plateforge/trajectory_io.hpp"

namespace plateforge {

struct WavExportInfo {
  double peak_abs = 0.0;  // largest |sample| of the source signal
  double gain = 1.0;      // multiplier applied before quantization
  bool silent = false;
};

inline void write_wav_pcm16(const std::string& path, const Eigen::VectorXd& unit_signal, int fs) {
  auto f = detail::open_file(path, "wb");
  const std::uint32_t nsamples = static_cast<std::uint32_t>(unit_signal.size());
  const std::uint32_t data_bytes = nsamples * 2;
  const std::uint32_t byte_rate = static_cast<std::uint32_t>(fs) * 2;

  auto put32 = [&](std::uint32_t v) { std::fwrite(&v, 4, 1, f.get()); };
  auto put16 = [&](std::uint16_t v) { std::fwrite(&v, 2, 1, f.get()); };

  std::fwrite("RIFF", 1, 4, f.get());
  put32(36 + data_bytes);
  std::fwrite("WAVE", 1, 4, f.get());
  std::fwrite("fmt ", 1, 4, f.get());
  put32(16);
  put16(1);  // PCM
  put16(1);  // mono
  put32(static_cast<std::uint32_t>(fs));
  put32(byte_rate);
  put16(2);   // block align
  put16(16);  // bits per sample
  std::fwrite("data", 1, 4, f.get());
  put32(data_bytes);

  for (Eigen::Index i = 0; i < unit_signal.size(); ++i) {
    double x = unit_signal[i];
    if (x > 1.0) x = 1.0;
    if (x < -1.0) x = -1.0;
    const auto s = static_cast<std::int16_t>(std::lrint(x * 32767.0));
    std::fwrite(&s, 2, 1, f.get());
  }
  if (std::fflush(f.get()) != 0) throw Error("write failed: " + path);
}

// Peak-normalizes the probe signal and writes it as PCM16. The gain that maps
// physical units to full scale goes into "<path>.scale.txt". A silent signal
// produces a valid silent file with gain 1.
inline WavExportInfo export_wav(const Trajectory& traj, int iy, int ix, int channel,
                                const std::string& path) {
  Eigen::VectorXd sig = traj.probe_signal(iy, ix, channel);
  WavExportInfo info;
  info.peak_abs = sig.size() ? sig.cwiseAbs().maxCoeff() : 0.0;
  info.silent = !(info.peak_abs > 0.0);
  info.gain = info.silent ? 1.0 : 1.0 / info.peak_abs;
  write_wav_pcm16(path, sig * info.gain, static_cast<int>(std::lround(traj.fs)));

  auto side = detail::open_file(path + ".scale.txt", "wb");
  std::string text = "peak_abs = " + [&] {
    char b[32];
    std::snprintf(b, sizeof b, "%.17g", info.peak_abs);
    return std::string(b);
  }() + "\ngain = " + [&] {
    char b[32];
    std::snprintf(b, sizeof b, "%.17g", info.gain);
    return std::string(b);
  }() + "\n";
  if (std::fwrite(text.data(), 1, text.size(), side.get()) != text.size())
    throw Error("write failed: " + path + ".scale.txt");
  return info;
}

}  // namespace plateforge
