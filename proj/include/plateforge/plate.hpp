// Modal basis of the simply supported rectangular plate.
//
// Eigenfunctions are sine products K(x,y) = sin(m pi x / Lx) sin(n pi y / Ly)
// with Laplacian eigenvalues lambda = (m pi / Lx)^2 + (n pi / Ly)^2. Fields
// move between the (Ny x Nx) grid and modal coordinates through quadrature
// projection and weighted reconstruction.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "plateforge/common.hpp"

namespace plateforge {

// Physical and discretization constants of the Berger plate.
struct PlateParams {
  double rho2 = 0.2622;      // areal density, kg/m^2
  double D = 2.198e-3;       // bending stiffness, N*m
  double T0 = 800.0;         // static tension, N/m
  double d1 = 0.5;           // frequency-independent damping, kg/(m^2 s)
  double d3 = 0.005;         // frequency-dependent damping, kg m^2/s
  double cnl_over_s0 = 0.0;  // nonlinear tension coefficient over rest area, N/m
  double Lx = 0.4;           // m
  double Ly = 0.36;          // m
  int Nx = 41;
  int Ny = 37;
  double dx = 0.01;  // m
  double dy = 0.01;  // m
  double fs = 16000.0;  // output sampling rate, Hz

  long npts() const { return static_cast<long>(Nx) * Ny; }

  void validate() const {
    if (!(rho2 > 0)) throw ValidationError("PlateParams: rho2 must be > 0");
    if (T0 < 0 || D < 0 || d1 < 0 || d3 < 0 || cnl_over_s0 < 0)
      throw ValidationError("PlateParams: T0, D, d1, d3, cnl_over_s0 must be >= 0");
    if (Nx < 2 || Ny < 2) throw ValidationError("PlateParams: grid needs at least 2 points per axis");
    if (!(Lx > 0 && Ly > 0 && dx > 0 && dy > 0)) throw ValidationError("PlateParams: lengths must be > 0");
    if (std::abs(dx * (Nx - 1) - Lx) > 1e-9 * Lx) throw ValidationError("PlateParams: dx*(Nx-1) != Lx");
    if (std::abs(dy * (Ny - 1) - Ly) > 1e-9 * Ly) throw ValidationError("PlateParams: dy*(Ny-1) != Ly");
    if (!(fs > 0)) throw ValidationError("PlateParams: fs must be > 0");
  }

  // Mylar membrane tuned to ~100 Hz; the dataset defaults.
  static PlateParams berger_defaults() {
    PlateParams p;
    p.cnl_over_s0 = 5.0e4;
    return p;
  }
};

struct ModeIndex {
  int m = 1;  // half-wave count along x
  int n = 1;  // half-wave count along y
};

// Displacement and velocity on the grid at one time instant.
struct FieldSnapshot {
  Grid displacement;  // m
  Grid velocity;      // m/s
};

class ModalBasis {
 public:
  PlateParams params;
  int Mx = 0, My = 0;
  std::vector<ModeIndex> modes;  // lexicographic in (m, n)
  Eigen::VectorXd lambdas;       // 1/m^2
  Eigen::VectorXd norms_sq;      // continuous L2 norms squared, m^2
  Eigen::MatrixXd grid_shapes;   // (Ny*Nx) x M, column k = flattened K_k

  int mode_count() const { return static_cast<int>(modes.size()); }
};

inline double eigenfunction_value(const PlateParams& p, ModeIndex eta, double x, double y) {
  if (x < 0 || x > p.Lx || y < 0 || y > p.Ly)
    throw ValidationError("eigenfunction_value: coordinates outside the plate domain");
  if (eta.m < 1 || eta.n < 1) throw ValidationError("eigenfunction_value: mode indices must be >= 1");
  const double pi = std::numbers::pi;
  return std::sin(eta.m * pi * x / p.Lx) * std::sin(eta.n * pi * y / p.Ly);
}

inline double eigenfunction_value(const ModalBasis& basis, ModeIndex eta, double x, double y) {
  return eigenfunction_value(basis.params, eta, x, y);
}

inline ModalBasis build_basis(const PlateParams& params, int Mx, int My) {
  params.validate();
  if (Mx < 1 || My < 1) throw ValidationError("build_basis: Mx and My must be >= 1");

  ModalBasis b;
  b.params = params;
  b.Mx = Mx;
  b.My = My;
  const int M = Mx * My;
  b.modes.reserve(static_cast<std::size_t>(M));
  b.lambdas.resize(M);
  b.norms_sq.resize(M);
  b.grid_shapes.resize(params.npts(), M);

  const double pi = std::numbers::pi;
  // Grid samples at integer fractions i/(N-1) of the side length; the edge
  // samples are exact zeros so reconstructed fields honor the boundary
  // condition bit-exactly.
  Eigen::MatrixXd sx(params.Nx, Mx), sy(params.Ny, My);
  for (int m = 1; m <= Mx; ++m)
    for (int i = 0; i < params.Nx; ++i)
      sx(i, m - 1) = (i == 0 || i == params.Nx - 1) ? 0.0
                                                    : std::sin(pi * m * i / double(params.Nx - 1));
  for (int n = 1; n <= My; ++n)
    for (int j = 0; j < params.Ny; ++j)
      sy(j, n - 1) = (j == 0 || j == params.Ny - 1) ? 0.0
                                                    : std::sin(pi * n * j / double(params.Ny - 1));

  int k = 0;
  for (int m = 1; m <= Mx; ++m) {
    for (int n = 1; n <= My; ++n, ++k) {
      b.modes.push_back({m, n});
      const double kx = m * pi / params.Lx;
      const double ky = n * pi / params.Ly;
      b.lambdas[k] = kx * kx + ky * ky;
      b.norms_sq[k] = params.Lx * params.Ly / 4.0;
      for (int j = 0; j < params.Ny; ++j)
        for (int i = 0; i < params.Nx; ++i)
          b.grid_shapes(static_cast<long>(j) * params.Nx + i, k) = sy(j, n - 1) * sx(i, m - 1);
    }
  }
  return b;
}

// Quadrature projection onto the basis: v_k = sum(field * K_k) * dx * dy.
// Fields produced by this toolkit vanish on the boundary, so the uniform
// weight equals the trapezoid rule.
inline Eigen::VectorXd project_field(const Grid& field, const ModalBasis& basis) {
  if (field.rows() != basis.params.Ny || field.cols() != basis.params.Nx)
    throw ShapeError("project_field: field shape does not match the basis grid");
  return basis.grid_shapes.transpose() * flatten(field) * (basis.params.dx * basis.params.dy);
}

// Weighted modal sum back to the grid: u = sum_k coords_k K_k / ||K_k||^2.
inline Grid reconstruct_field(const Eigen::VectorXd& coords, const ModalBasis& basis) {
  if (coords.size() != basis.mode_count())
    throw ShapeError("reconstruct_field: coordinate vector length does not match mode count");
  Eigen::VectorXd w = coords.array() / basis.norms_sq.array();
  Eigen::VectorXd flat = basis.grid_shapes * w;
  Grid out(basis.params.Ny, basis.params.Nx);
  Eigen::Map<Eigen::VectorXd>(out.data(), out.size()) = flat;
  return out;
}

// Reconstructs many frames at once: coords is (M x T), output is (Ny*Nx x T).
inline Eigen::MatrixXd reconstruct_frames(const Eigen::MatrixXd& coords, const ModalBasis& basis) {
  if (coords.rows() != basis.mode_count())
    throw ShapeError("reconstruct_frames: coordinate rows do not match mode count");
  return basis.grid_shapes * (coords.array().colwise() / basis.norms_sq.array()).matrix();
}

}  // namespace plateforge
