// Shared fixtures for the unit suite.
#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "plateforge/plateforge.hpp"

namespace testutil {

// The membrane configuration used throughout the dataset recipe.
inline plateforge::PlateParams full_params(double cnl = 0.0) {
  plateforge::PlateParams p = plateforge::PlateParams::berger_defaults();
  p.cnl_over_s0 = cnl;
  return p;
}

// A small, fast configuration for tests that exercise plumbing rather than
// the physics at scale.
inline plateforge::PlateParams small_params(double cnl = 0.0) {
  plateforge::PlateParams p;
  p.rho2 = 0.2622;
  p.D = 2.198e-3;
  p.T0 = 800.0;
  p.d1 = 0.5;
  p.d3 = 0.005;
  p.cnl_over_s0 = cnl;
  p.Lx = 0.4;
  p.Ly = 0.36;
  p.Nx = 13;
  p.Ny = 11;
  p.dx = p.Lx / (p.Nx - 1);
  p.dy = p.Ly / (p.Ny - 1);
  p.fs = 4000.0;
  return p;
}

inline std::string temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("plateforge_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

inline plateforge::Grid random_grid(int ny, int nx, std::mt19937_64& rng, double scale = 1.0) {
  plateforge::Grid g(ny, nx);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) g(j, i) = scale * (2.0 * plateforge::uniform01(rng) - 1.0);
  return g;
}

}  // namespace testutil
