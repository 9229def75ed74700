// PLT1 trajectory file format.
//
//   bytes 0..7   magic "PLTRAJ01"
//   bytes 8..11  uint32 little-endian JSON header length
//   header       UTF-8 JSON: {version, T, Ny, Nx, channels, dtype, fs, dx, dy,
//                             params, seed, normalization, ...}
//   payload      (T, Ny, Nx, channel) row-major, little-endian f32 or f64
//
// Everything in the header besides the structural keys round-trips through
// Trajectory::meta unchanged.
#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "plateforge/common.hpp"
#include "plateforge/trajectory.hpp"

namespace plateforge {

constexpr char kTrajectoryMagic[8] = {'P', 'L', 'T', 'R', 'A', 'J', '0', '1'};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("cannot open file: " + path);
  return f;
}

inline const char* structural_header_keys[] = {"version", "T", "Ny", "Nx", "channels", "dtype"};

}  // namespace detail

class TrajectoryWriter {
 public:
  // meta must already carry fs/dx/dy copies via the trajectory fields passed
  // here; params/seed/normalization default to null when absent.
  TrajectoryWriter(const std::string& path, int T, int ny, int nx, double fs, double dx, double dy,
                   nlohmann::json meta, const std::string& dtype = "f32")
      : path_(path), T_(T), ny_(ny), nx_(nx), f64_(dtype == "f64") {
    if (T < 1 || ny < 2 || nx < 2) throw ValidationError("TrajectoryWriter: bad dimensions");
    if (dtype != "f32" && dtype != "f64")
      throw ValidationError("TrajectoryWriter: dtype must be f32 or f64");
    nlohmann::json header = std::move(meta);
    header["version"] = 1;
    header["T"] = T;
    header["Ny"] = ny;
    header["Nx"] = nx;
    header["channels"] = nlohmann::json::array({"displacement", "velocity"});
    header["dtype"] = dtype;
    header["fs"] = fs;
    header["dx"] = dx;
    header["dy"] = dy;
    if (!header.contains("params")) header["params"] = nullptr;
    if (!header.contains("seed")) header["seed"] = nullptr;
    if (!header.contains("normalization")) header["normalization"] = nullptr;

    file_ = detail::open_file(path, "wb");
    const std::string htext = header.dump();
    const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
    if (std::fwrite(kTrajectoryMagic, 1, 8, file_.get()) != 8 ||
        std::fwrite(&hlen, 4, 1, file_.get()) != 1 ||
        std::fwrite(htext.data(), 1, htext.size(), file_.get()) != htext.size())
      throw Error("write failed: " + path);
  }

  // Appends frames given in planar layout (frame-major, then channel, then
  // iy * Nx + ix); the file itself interleaves channels per grid point.
  void append_frames(const double* planar, int nframes) {
    const long npts = static_cast<long>(ny_) * nx_;
    if (f64_) {
      buf64_.resize(static_cast<std::size_t>(npts) * kChannels);
      for (int t = 0; t < nframes; ++t) {
        const double* d = planar + static_cast<std::size_t>(t) * kChannels * npts;
        const double* v = d + npts;
        for (long j = 0; j < npts; ++j) {
          buf64_[static_cast<std::size_t>(2 * j)] = d[j];
          buf64_[static_cast<std::size_t>(2 * j + 1)] = v[j];
        }
        if (std::fwrite(buf64_.data(), 8, buf64_.size(), file_.get()) != buf64_.size())
          throw Error("write failed: " + path_);
      }
    } else {
      buf32_.resize(static_cast<std::size_t>(npts) * kChannels);
      for (int t = 0; t < nframes; ++t) {
        const double* d = planar + static_cast<std::size_t>(t) * kChannels * npts;
        const double* v = d + npts;
        for (long j = 0; j < npts; ++j) {
          buf32_[static_cast<std::size_t>(2 * j)] = static_cast<float>(d[j]);
          buf32_[static_cast<std::size_t>(2 * j + 1)] = static_cast<float>(v[j]);
        }
        if (std::fwrite(buf32_.data(), 4, buf32_.size(), file_.get()) != buf32_.size())
          throw Error("write failed: " + path_);
      }
    }
    written_ += nframes;
  }

  void finalize() {
    if (written_ != T_)
      throw Error("TrajectoryWriter: frame count mismatch on " + path_ + " (wrote " +
                  std::to_string(written_) + " of " + std::to_string(T_) + ")");
    if (std::fflush(file_.get()) != 0) throw Error("write failed: " + path_);
    file_.reset();
  }

 private:
  std::string path_;
  int T_, ny_, nx_;
  bool f64_;
  long written_ = 0;
  detail::FilePtr file_;
  std::vector<float> buf32_;
  std::vector<double> buf64_;
};

class TrajectoryReader {
 public:
  explicit TrajectoryReader(const std::string& path) : path_(path) {
    file_ = detail::open_file(path, "rb");
    char magic[8];
    if (std::fread(magic, 1, 8, file_.get()) != 8 || std::memcmp(magic, kTrajectoryMagic, 8) != 0)
      throw FormatError("not a PLT1 trajectory file (bad magic): " + path);
    std::uint32_t hlen = 0;
    if (std::fread(&hlen, 4, 1, file_.get()) != 1)
      throw FormatError("truncated header length: " + path);
    std::string htext(hlen, '\0');
    if (hlen == 0 || std::fread(htext.data(), 1, hlen, file_.get()) != hlen)
      throw FormatError("truncated JSON header: " + path);
    nlohmann::json header = nlohmann::json::parse(htext, nullptr, false);
    if (header.is_discarded()) throw FormatError("malformed JSON header: " + path);

    const int version = header.value("version", -1);
    if (version != 1) throw FormatError("unsupported PLT1 version: " + path);
    T_ = header.value("T", -1);
    ny_ = header.value("Ny", -1);
    nx_ = header.value("Nx", -1);
    const std::string dtype = header.value("dtype", "");
    if (dtype == "f32")
      f64_ = false;
    else if (dtype == "f64")
      f64_ = true;
    else
      throw FormatError("unsupported dtype '" + dtype + "': " + path);
    if (T_ < 1 || ny_ < 2 || nx_ < 2)
      throw FormatError("invalid dimensions in header: " + path);
    fs_ = header.value("fs", 0.0);
    dx_ = header.value("dx", 0.0);
    dy_ = header.value("dy", 0.0);

    meta_ = std::move(header);
    for (const char* k : detail::structural_header_keys) meta_.erase(k);
    meta_.erase("fs");
    meta_.erase("dx");
    meta_.erase("dy");

    const std::size_t esize = f64_ ? 8 : 4;
    payload_off_ = 12 + hlen;
    const std::uintmax_t expect = static_cast<std::uintmax_t>(T_) * ny_ * nx_ * kChannels * esize;
    std::error_code ec;
    const std::uintmax_t fsize = std::filesystem::file_size(path, ec);
    if (ec) throw Error("cannot stat file: " + path);
    if (fsize != payload_off_ + expect)
      throw FormatError("payload size mismatch (truncated or trailing data): " + path);
  }

  int frames() const { return T_; }
  int ny() const { return ny_; }
  int nx() const { return nx_; }
  double fs() const { return fs_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  const nlohmann::json& meta() const { return meta_; }

  // Reads the next `nframes` frames into planar storage (see TrajectoryWriter).
  void read_frames(double* planar, int nframes) {
    const long npts = static_cast<long>(ny_) * nx_;
    const std::size_t per = static_cast<std::size_t>(npts) * kChannels;
    if (cursor_ + nframes > T_) throw FormatError("read past end of trajectory: " + path_);
    if (f64_) {
      buf64_.resize(per);
      for (int t = 0; t < nframes; ++t) {
        if (std::fread(buf64_.data(), 8, per, file_.get()) != per)
          throw FormatError("truncated payload: " + path_);
        double* d = planar + static_cast<std::size_t>(t) * per;
        double* v = d + npts;
        for (long j = 0; j < npts; ++j) {
          d[j] = buf64_[static_cast<std::size_t>(2 * j)];
          v[j] = buf64_[static_cast<std::size_t>(2 * j + 1)];
        }
      }
    } else {
      buf32_.resize(per);
      for (int t = 0; t < nframes; ++t) {
        if (std::fread(buf32_.data(), 4, per, file_.get()) != per)
          throw FormatError("truncated payload: " + path_);
        double* d = planar + static_cast<std::size_t>(t) * per;
        double* v = d + npts;
        for (long j = 0; j < npts; ++j) {
          d[j] = buf32_[static_cast<std::size_t>(2 * j)];
          v[j] = buf32_[static_cast<std::size_t>(2 * j + 1)];
        }
      }
    }
    cursor_ += nframes;
  }

 private:
  std::string path_;
  detail::FilePtr file_;
  int T_ = 0, ny_ = 0, nx_ = 0;
  double fs_ = 0, dx_ = 0, dy_ = 0;
  bool f64_ = false;
  int cursor_ = 0;
  std::uintmax_t payload_off_ = 0;
  nlohmann::json meta_;
  std::vector<float> buf32_;
  std::vector<double> buf64_;
};

inline void write_trajectory(const Trajectory& traj, const std::string& path,
                             const std::string& dtype = "f32") {
  TrajectoryWriter w(path, traj.frames, traj.ny, traj.nx, traj.fs, traj.dx, traj.dy, traj.meta,
                     dtype);
  w.append_frames(traj.data.data(), traj.frames);
  w.finalize();
}

inline Trajectory read_trajectory(const std::string& path) {
  TrajectoryReader r(path);
  Trajectory traj;
  traj.allocate(r.frames(), r.ny(), r.nx());
  traj.fs = r.fs();
  traj.dx = r.dx();
  traj.dy = r.dy();
  r.read_frames(traj.data.data(), r.frames());
  traj.meta = r.meta();
  return traj;
}

}  // namespace plateforge
