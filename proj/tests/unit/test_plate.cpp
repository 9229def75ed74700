#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "plateforge/plate.hpp"

using namespace plateforge;
using Catch::Approx;

namespace {

// Independent quadrature oracle: plain double loop with freshly computed
// sines, no shared code with project_field.
double brute_force_projection(const Grid& field, const PlateParams& p, int m, int n) {
  const double pi = std::numbers::pi;
  double acc = 0.0;
  for (int j = 0; j < p.Ny; ++j)
    for (int i = 0; i < p.Nx; ++i)
      acc += field(j, i) * std::sin(m * pi * i * p.dx / p.Lx) * std::sin(n * pi * j * p.dy / p.Ly);
  return acc * p.dx * p.dy;
}

}  // namespace

TEST_CASE("basis has 225 modes with the documented eigenvalues", "[plate]") {
  const PlateParams p = testutil::full_params();
  const ModalBasis b = build_basis(p, 15, 15);
  REQUIRE(b.mode_count() == 225);

  const double pi = std::numbers::pi;
  const double lam11 = (pi / 0.4) * (pi / 0.4) + (pi / 0.36) * (pi / 0.36);
  CHECK(b.modes[0].m == 1);
  CHECK(b.modes[0].n == 1);
  CHECK(b.lambdas[0] == Approx(lam11).epsilon(1e-14));
  CHECK(b.lambdas[0] == Approx(137.84).epsilon(1e-4));

  for (int k = 0; k < b.mode_count(); ++k) CHECK(b.norms_sq[k] == Approx(0.036).epsilon(1e-14));

  // ordering is lexicographic in (m, n)
  CHECK(b.modes[1].m == 1);
  CHECK(b.modes[1].n == 2);
  CHECK(b.modes[15].m == 2);
  CHECK(b.modes[15].n == 1);
}

TEST_CASE("lambda grows along each mode axis", "[plate]") {
  const ModalBasis b = build_basis(testutil::full_params(), 15, 15);
  for (int m = 1; m <= 15; ++m)
    for (int n = 1; n <= 15; ++n) {
      const int k = (m - 1) * 15 + (n - 1);
      if (n < 15) CHECK(b.lambdas[k] < b.lambdas[k + 1]);
      if (m < 15) CHECK(b.lambdas[k] < b.lambdas[k + 15]);
    }
}

TEST_CASE("eigenfunction values at salient points", "[plate]") {
  const PlateParams p = testutil::full_params();
  const ModalBasis b = build_basis(p, 3, 3);

  CHECK(eigenfunction_value(b, {1, 1}, p.Lx / 2, p.Ly / 2) == Approx(1.0).margin(1e-12));
  CHECK(eigenfunction_value(b, {2, 1}, p.Lx / 2, p.Ly / 2) == Approx(0.0).margin(1e-12));
  CHECK(eigenfunction_value(b, {3, 2}, 0.0, p.Ly / 3) == 0.0);
  CHECK(eigenfunction_value(b, {2, 3}, p.Lx, p.Ly / 5) == Approx(0.0).margin(1e-12));
  CHECK_THROWS_AS(eigenfunction_value(b, {1, 1}, -0.01, 0.1), ValidationError);
  CHECK_THROWS_AS(eigenfunction_value(b, {1, 1}, 0.1, p.Ly + 0.01), ValidationError);
}

TEST_CASE("discrete orthogonality on the production grid", "[plate]") {
  const PlateParams p = testutil::full_params();
  const ModalBasis b = build_basis(p, 15, 15);
  const double quad = p.dx * p.dy;
  // Gram matrix of sampled shapes; off-diagonal terms must vanish.
  Eigen::MatrixXd G = b.grid_shapes.transpose() * b.grid_shapes * quad;
  double max_off = 0.0, max_diag_err = 0.0;
  for (int a = 0; a < b.mode_count(); ++a) {
    max_diag_err = std::max(max_diag_err, std::abs(G(a, a) - 0.036));
    for (int c = a + 1; c < b.mode_count(); ++c) max_off = std::max(max_off, std::abs(G(a, c)));
  }
  CHECK(max_off <= 1e-6 * 0.036);
  CHECK(max_diag_err <= 1e-9);
}

TEST_CASE("projecting a sampled eigenfunction isolates its coefficient", "[plate]") {
  const PlateParams p = testutil::full_params();
  const ModalBasis b = build_basis(p, 15, 15);
  Grid k11(p.Ny, p.Nx);
  Eigen::Map<Eigen::VectorXd>(k11.data(), k11.size()) = b.grid_shapes.col(0);

  const Eigen::VectorXd coeff = project_field(k11, b);
  CHECK(coeff[0] == Approx(0.036).epsilon(1e-9));
  for (int k = 1; k < b.mode_count(); ++k) CHECK(std::abs(coeff[k]) <= 1e-6);
}

TEST_CASE("projection of a zero field is zero", "[plate]") {
  const PlateParams p = testutil::small_params();
  const ModalBasis b = build_basis(p, 3, 3);
  const Eigen::VectorXd coeff = project_field(Grid::Zero(p.Ny, p.Nx), b);
  CHECK(coeff.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projection matches the brute-force quadrature oracle", "[plate]") {
  const PlateParams p = testutil::full_params();
  const ModalBasis b = build_basis(p, 15, 15);

  // centered Gaussian bump, sigma 0.05 m, peak 10 m/s
  Grid field(p.Ny, p.Nx);
  for (int j = 0; j < p.Ny; ++j)
    for (int i = 0; i < p.Nx; ++i) {
      const double x = i * p.dx - p.Lx / 2, y = j * p.dy - p.Ly / 2;
      field(j, i) = 10.0 * std::exp(-(x * x + y * y) / (2 * 0.05 * 0.05));
    }

  const Eigen::VectorXd coeff = project_field(field, b);
  for (int k = 0; k < b.mode_count(); k += 17) {
    const double oracle = brute_force_projection(field, p, b.modes[k].m, b.modes[k].n);
    CHECK(coeff[k] == Approx(oracle).epsilon(1e-12).margin(1e-15));
  }
}

TEST_CASE("reconstruction inverts projection for band-limited fields", "[plate]") {
  const PlateParams p = testutil::full_params();
  const ModalBasis b = build_basis(p, 15, 15);
  std::mt19937_64 rng(7);

  // single-coefficient reconstruction reproduces the sampled shape
  Eigen::VectorXd one = Eigen::VectorXd::Zero(b.mode_count());
  one[0] = 0.036;
  const Grid shape = reconstruct_field(one, b);
  Grid expected(p.Ny, p.Nx);
  Eigen::Map<Eigen::VectorXd>(expected.data(), expected.size()) = b.grid_shapes.col(0);
  CHECK((shape - expected).cwiseAbs().maxCoeff() <= 1e-12);

  // random field in the span of the basis
  Eigen::VectorXd coeff(b.mode_count());
  for (int k = 0; k < b.mode_count(); ++k) coeff[k] = 2.0 * uniform01(rng) - 1.0;
  const Grid field = reconstruct_field(coeff, b);
  const Grid back = reconstruct_field(project_field(field, b), b);
  const double rel = (back - field).norm() / field.norm();
  CHECK(rel <= 1e-6);

  CHECK(reconstruct_field(Eigen::VectorXd::Zero(b.mode_count()), b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projection and reconstruction are linear maps", "[plate]") {
  const PlateParams p = testutil::small_params();
  const ModalBasis b = build_basis(p, 3, 3);
  std::mt19937_64 rng(11);
  const Grid a = testutil::random_grid(p.Ny, p.Nx, rng);
  const Grid c = testutil::random_grid(p.Ny, p.Nx, rng);
  const double alpha = 0.37, beta = -1.91;

  const Eigen::VectorXd lhs = project_field(alpha * a + beta * c, b);
  const Eigen::VectorXd rhs = alpha * project_field(a, b) + beta * project_field(c, b);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff() + 1e-18);

  Eigen::VectorXd ca(b.mode_count()), cb(b.mode_count());
  for (int k = 0; k < b.mode_count(); ++k) {
    ca[k] = 2.0 * uniform01(rng) - 1.0;
    cb[k] = 2.0 * uniform01(rng) - 1.0;
  }
  const Grid lhs2 = reconstruct_field(alpha * ca + beta * cb, b);
  const Grid rhs2 = alpha * reconstruct_field(ca, b) + beta * reconstruct_field(cb, b);
  CHECK((lhs2 - rhs2).cwiseAbs().maxCoeff() <= 1e-12 * rhs2.cwiseAbs().maxCoeff() + 1e-18);
}

TEST_CASE("invalid parameters and shapes are rejected", "[plate]") {
  PlateParams p = testutil::full_params();
  p.rho2 = 0.0;
  CHECK_THROWS_AS(build_basis(p, 2, 2), ValidationError);
  p = testutil::full_params();
  p.dx = 0.011;  // breaks dx*(Nx-1) = Lx
  CHECK_THROWS_AS(build_basis(p, 2, 2), ValidationError);
  p = testutil::full_params();
  CHECK_THROWS_AS(build_basis(p, 0, 2), ValidationError);

  const ModalBasis b = build_basis(p, 2, 2);
  CHECK_THROWS_AS(project_field(Grid::Zero(p.Ny, p.Nx + 1), b), ShapeError);
  CHECK_THROWS_AS(reconstruct_field(Eigen::VectorXd::Zero(5), b), ShapeError);
}

TEST_CASE("reconstructed fields vanish on the boundary", "[plate]") {
  const PlateParams p = testutil::full_params();
  const ModalBasis b = build_basis(p, 15, 15);
  std::mt19937_64 rng(3);
  Eigen::VectorXd coeff(b.mode_count());
  for (int k = 0; k < b.mode_count(); ++k) coeff[k] = 2.0 * uniform01(rng) - 1.0;
  const Grid g = reconstruct_field(coeff, b);
  CHECK(g.row(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.row(p.Ny - 1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.col(p.Nx - 1).cwiseAbs().maxCoeff() == 0.0);
}
