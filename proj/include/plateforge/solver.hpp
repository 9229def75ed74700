// Time evolution of the modal coordinates.
//
// Each mode follows a damped oscillator coupled to all others through the
// amplitude-dependent tension T_NL. The linear part has a closed-form
// solution used as the oracle; the coupled system integrates with classical
// RK4 at an oversampled internal rate.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "plateforge/common.hpp"
#include "plateforge/plate.hpp"
#include "plateforge/trajectory.hpp"

namespace plateforge {

struct ModalState {
  Eigen::VectorXd u;  // modal displacements
  Eigen::VectorXd v;  // modal velocities

  void validate(int M) const {
    if (u.size() != M || v.size() != M)
      throw ShapeError("ModalState: vector lengths do not match mode count");
  }
};

// Per-mode decay rate sigma and undamped angular frequency squared.
inline double modal_sigma(const PlateParams& p, double lambda) {
  return (p.d3 * lambda + p.d1) / (2.0 * p.rho2);
}
inline double modal_omega0_sq(const PlateParams& p, double lambda) {
  return lambda * (lambda * p.D + p.T0) / p.rho2;
}

// Exact underdamped solution of the linear modal oscillator and its velocity.
inline std::pair<double, double> linear_modal_response(const PlateParams& params, double lambda,
                                                       double u0, double v0, double t) {
  const double sigma = modal_sigma(params, lambda);
  const double w0sq = modal_omega0_sq(params, lambda);
  if (sigma * sigma >= w0sq)
    throw RegimeError("linear_modal_response: mode is not underdamped (sigma^2 >= omega0^2)");
  const double wd = std::sqrt(w0sq - sigma * sigma);
  const double A = u0;
  const double B = (v0 + sigma * u0) / wd;
  const double e = std::exp(-sigma * t);
  const double c = std::cos(wd * t), s = std::sin(wd * t);
  const double u = e * (A * c + B * s);
  const double v = e * ((B * wd - sigma * A) * c - (A * wd + sigma * B) * s);
  return {u, v};
}

// Precomputed coefficient arrays shared by every derivative evaluation.
struct ModalDynamics {
  Eigen::ArrayXd lambda;
  Eigen::ArrayXd damp_over_rho;   // (d3*lambda + d1) / rho2
  Eigen::ArrayXd stiff_over_rho;  // lambda*(lambda*D + T0) / rho2
  Eigen::ArrayXd lam_over_rho;    // lambda / rho2
  Eigen::ArrayXd tension_w;       // lambda / ||K||^2
  double half_cnl = 0.0;          // (C_NL / S0) / 2

  ModalDynamics(const ModalBasis& basis, const PlateParams& params) {
    lambda = basis.lambdas.array();
    damp_over_rho = (params.d3 * lambda + params.d1) / params.rho2;
    stiff_over_rho = lambda * (lambda * params.D + params.T0) / params.rho2;
    lam_over_rho = lambda / params.rho2;
    tension_w = lambda / basis.norms_sq.array();
    half_cnl = 0.5 * params.cnl_over_s0;
  }

  double tension(const Eigen::ArrayXd& u) const { return half_cnl * (tension_w * u * u).sum(); }

  // du = v; dv = -(d3 L + d1)/rho v - L(LD + T0)/rho u - L T_NL / rho u
  void derivatives(const Eigen::ArrayXd& u, const Eigen::ArrayXd& v, Eigen::ArrayXd& du,
                   Eigen::ArrayXd& dv) const {
    du = v;
    dv = -damp_over_rho * v - stiff_over_rho * u - (tension(u) * lam_over_rho) * u;
  }
};

// Deflection-dependent tension correction, always >= 0.
inline double nonlinear_tension(const ModalState& state, const ModalBasis& basis,
                                const PlateParams& params) {
  state.validate(basis.mode_count());
  return 0.5 * params.cnl_over_s0 *
         (basis.lambdas.array() * state.u.array().square() / basis.norms_sq.array()).sum();
}

inline ModalState modal_derivatives(const ModalState& state, const ModalBasis& basis,
                                    const PlateParams& params) {
  state.validate(basis.mode_count());
  ModalDynamics dyn(basis, params);
  Eigen::ArrayXd du, dv;
  dyn.derivatives(state.u.array(), state.v.array(), du, dv);
  return {du.matrix(), dv.matrix()};
}

namespace detail {

// One classical RK4 step into (u_out, v_out); scratch arrays are caller-owned
// so the hot loop does not allocate.
struct Rk4Scratch {
  Eigen::ArrayXd k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v, tu, tv;
  explicit Rk4Scratch(int M)
      : k1u(M), k1v(M), k2u(M), k2v(M), k3u(M), k3v(M), k4u(M), k4v(M), tu(M), tv(M) {}
};

inline void rk4_step_into(const ModalDynamics& dyn, const Eigen::ArrayXd& u, const Eigen::ArrayXd& v,
                          double dt, Eigen::ArrayXd& u_out, Eigen::ArrayXd& v_out, Rk4Scratch& s) {
  dyn.derivatives(u, v, s.k1u, s.k1v);
  s.tu = u + 0.5 * dt * s.k1u;
  s.tv = v + 0.5 * dt * s.k1v;
  dyn.derivatives(s.tu, s.tv, s.k2u, s.k2v);
  s.tu = u + 0.5 * dt * s.k2u;
  s.tv = v + 0.5 * dt * s.k2v;
  dyn.derivatives(s.tu, s.tv, s.k3u, s.k3v);
  s.tu = u + dt * s.k3u;
  s.tv = v + dt * s.k3v;
  dyn.derivatives(s.tu, s.tv, s.k4u, s.k4v);
  u_out = u + (dt / 6.0) * (s.k1u + 2.0 * s.k2u + 2.0 * s.k3u + s.k4u);
  v_out = v + (dt / 6.0) * (s.k1v + 2.0 * s.k2v + 2.0 * s.k3v + s.k4v);
}

}  // namespace detail

inline ModalState rk4_step(const ModalState& state, double dt, const ModalBasis& basis,
                           const PlateParams& params, long step_index = -1) {
  state.validate(basis.mode_count());
  if (!(dt > 0)) throw ValidationError("rk4_step: dt must be > 0");
  ModalDynamics dyn(basis, params);
  detail::Rk4Scratch scratch(basis.mode_count());
  Eigen::ArrayXd u_out(basis.mode_count()), v_out(basis.mode_count());
  detail::rk4_step_into(dyn, state.u.array(), state.v.array(), dt, u_out, v_out, scratch);
  if (!u_out.isFinite().all() || !v_out.isFinite().all())
    throw InstabilityError("rk4_step: non-finite state", step_index);
  return {u_out.matrix(), v_out.matrix()};
}

// Integrates the modal system and emits `frames` states at the output rate,
// column 0 being the initial state. Internal step is 1/(fs*oversample).
inline ModalTrajectory simulate_modal(const PlateParams& params, const ModalBasis& basis,
                                      const ModalState& initial, int frames, int oversample) {
  params.validate();
  initial.validate(basis.mode_count());
  if (frames < 1) throw ValidationError("simulate_modal: frames must be >= 1");
  if (oversample < 1) throw ValidationError("simulate_modal: oversample must be >= 1");

  const int M = basis.mode_count();
  const double dt = 1.0 / (params.fs * oversample);
  ModalDynamics dyn(basis, params);
  detail::Rk4Scratch scratch(M);

  ModalTrajectory traj;
  traj.fs = params.fs;
  traj.u.resize(M, frames);
  traj.v.resize(M, frames);
  traj.u.col(0) = initial.u;
  traj.v.col(0) = initial.v;
  traj.min_tnl = dyn.tension(initial.u.array());

  Eigen::ArrayXd u = initial.u.array(), v = initial.v.array();
  Eigen::ArrayXd un(M), vn(M);
  long step = 0;
  for (int f = 1; f < frames; ++f) {
    for (int k = 0; k < oversample; ++k, ++step) {
      detail::rk4_step_into(dyn, u, v, dt, un, vn, scratch);
      u.swap(un);
      v.swap(vn);
      const double tnl = dyn.tension(u);
      if (tnl < traj.min_tnl) traj.min_tnl = tnl;
    }
    if (!u.isFinite().all() || !v.isFinite().all())
      throw InstabilityError("simulate_modal: non-finite state at internal step " +
                                 std::to_string(step),
                             step);
    traj.u.col(f) = u.matrix();
    traj.v.col(f) = v.matrix();
  }
  return traj;
}

// Full-grid synthesis: project the initial condition, integrate, reconstruct.
// Frame 0 equals the band-limited projection of the initial condition.
inline Trajectory simulate(const PlateParams& params, const ModalBasis& basis,
                           const FieldSnapshot& initial, int frames, int oversample) {
  ModalState s0{project_field(initial.displacement, basis), project_field(initial.velocity, basis)};
  ModalTrajectory mt = simulate_modal(params, basis, s0, frames, oversample);

  Trajectory traj;
  traj.allocate(frames, params.Ny, params.Nx);
  traj.fs = params.fs;
  traj.dx = params.dx;
  traj.dy = params.dy;
  const long npts = params.npts();
  constexpr int chunk = 512;
  for (int t0 = 0; t0 < frames; t0 += chunk) {
    const int n = std::min(chunk, frames - t0);
    Eigen::MatrixXd gd = reconstruct_frames(mt.u.middleCols(t0, n), basis);
    Eigen::MatrixXd gv = reconstruct_frames(mt.v.middleCols(t0, n), basis);
    for (int j = 0; j < n; ++j) {
      Eigen::Map<Eigen::VectorXd>(traj.channel_ptr(t0 + j, kDisplacement), npts) = gd.col(j);
      Eigen::Map<Eigen::VectorXd>(traj.channel_ptr(t0 + j, kVelocity), npts) = gv.col(j);
    }
  }
  traj.meta["min_tnl"] = mt.min_tnl;
  return traj;
}

// Discrete energy of the modal state; non-increasing along damped
// trajectories of the modal system (kinetic + linear potential + quartic
// tension potential (C/8) S^2 with S = sum lambda u^2 / ||K||^2).
inline double modal_energy(const ModalState& state, const ModalBasis& basis,
                           const PlateParams& params) {
  state.validate(basis.mode_count());
  const auto u = state.u.array(), v = state.v.array();
  const auto lam = basis.lambdas.array();
  const auto nrm = basis.norms_sq.array();
  const double quad =
      ((0.5 * params.rho2 * v * v + 0.5 * lam * (lam * params.D + params.T0) * u * u) / nrm).sum();
  const double S = (lam * u * u / nrm).sum();
  return quad + 0.125 * params.cnl_over_s0 * S * S;
}

inline double modal_energy_at(const ModalTrajectory& mt, int t, const ModalBasis& basis,
                              const PlateParams& params) {
  return modal_energy({mt.u.col(t), mt.v.col(t)}, basis, params);
}

// Single grid point of the reconstructed field over time, without building
// the full grid trajectory.
inline Eigen::VectorXd modal_probe_signal(const ModalTrajectory& mt, const ModalBasis& basis,
                                          int iy, int ix, int channel) {
  const PlateParams& p = basis.params;
  if (iy < 0 || iy >= p.Ny || ix < 0 || ix >= p.Nx)
    throw ValidationError("modal_probe_signal: probe outside the grid");
  Eigen::VectorXd w =
      basis.grid_shapes.row(static_cast<long>(iy) * p.Nx + ix).transpose().array() /
      basis.norms_sq.array();
  const Eigen::MatrixXd& coords = (channel == kVelocity) ? mt.v : mt.u;
  return coords.transpose() * w;
}

}  // namespace plateforge
