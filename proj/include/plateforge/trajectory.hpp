// In-memory trajectory containers.
#pragma once

#include <Eigen/Dense>

#include <vector>

#include "json.hpp"
#include "plateforge/common.hpp"
#include "plateforge/plate.hpp"

namespace plateforge {

constexpr int kDisplacement = 0;
constexpr int kVelocity = 1;
constexpr int kChannels = 2;

enum class ChannelSelect { Both, Displacement, Velocity };

inline const char* channel_name(ChannelSelect c) {
  switch (c) {
    case ChannelSelect::Both: return "both";
    case ChannelSelect::Displacement: return "displacement";
    default: return "velocity";
  }
}

// Grid-space trajectory. Data is stored planar per frame: the displacement
// grid followed by the velocity grid, each flattened as iy * Nx + ix. A frame
// block is therefore the flattened (displacement, velocity) snapshot vector
// used by the surrogate module.
struct Trajectory {
  int frames = 0;
  int ny = 0;
  int nx = 0;
  double fs = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  std::vector<double> data;
  nlohmann::json meta = nlohmann::json::object();

  long npts() const { return static_cast<long>(ny) * nx; }
  long frame_stride() const { return kChannels * npts(); }

  void allocate(int T, int Ny, int Nx) {
    frames = T;
    ny = Ny;
    nx = Nx;
    data.assign(static_cast<std::size_t>(T) * kChannels * Ny * Nx, 0.0);
  }

  double* frame_ptr(int t) { return data.data() + static_cast<std::size_t>(t) * frame_stride(); }
  const double* frame_ptr(int t) const {
    return data.data() + static_cast<std::size_t>(t) * frame_stride();
  }
  double* channel_ptr(int t, int c) { return frame_ptr(t) + static_cast<std::size_t>(c) * npts(); }
  const double* channel_ptr(int t, int c) const {
    return frame_ptr(t) + static_cast<std::size_t>(c) * npts();
  }

  Eigen::Map<Grid> grid(int t, int c) { return {channel_ptr(t, c), ny, nx}; }
  Eigen::Map<const Grid> grid(int t, int c) const { return {channel_ptr(t, c), ny, nx}; }
  Eigen::Map<Grid> disp(int t) { return grid(t, kDisplacement); }
  Eigen::Map<const Grid> disp(int t) const { return grid(t, kDisplacement); }
  Eigen::Map<Grid> vel(int t) { return grid(t, kVelocity); }
  Eigen::Map<const Grid> vel(int t) const { return grid(t, kVelocity); }

  // Whole flattened (displacement, velocity) snapshot of one frame.
  Eigen::Map<const Eigen::VectorXd> snapshot_vector(int t) const {
    return {frame_ptr(t), frame_stride()};
  }

  FieldSnapshot snapshot(int t) const { return {Grid(disp(t)), Grid(vel(t))}; }

  void set_frame(int t, const Grid& d, const Grid& v) {
    if (d.rows() != ny || d.cols() != nx || v.rows() != ny || v.cols() != nx)
      throw ShapeError("Trajectory::set_frame: grid shape mismatch");
    disp(t) = d;
    vel(t) = v;
  }

  // Signal of a single grid point over time.
  Eigen::VectorXd probe_signal(int iy, int ix, int channel) const {
    if (iy < 0 || iy >= ny || ix < 0 || ix >= nx || channel < 0 || channel >= kChannels)
      throw ValidationError("Trajectory::probe_signal: probe outside the grid");
    Eigen::VectorXd s(frames);
    const long off = static_cast<long>(channel) * npts() + static_cast<long>(iy) * nx + ix;
    for (int t = 0; t < frames; ++t) s[t] = data[static_cast<std::size_t>(t) * frame_stride() + off];
    return s;
  }
};

// Modal-space trajectory: columns are time steps.
struct ModalTrajectory {
  Eigen::MatrixXd u;  // (M x T) modal displacements
  Eigen::MatrixXd v;  // (M x T) modal velocities
  double fs = 0.0;
  double min_tnl = 0.0;  // smallest nonlinear tension seen during integration

  int frames() const { return static_cast<int>(u.cols()); }
};

}  // namespace plateforge
