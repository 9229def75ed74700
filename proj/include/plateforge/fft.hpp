// Thin RAII wrappers over FFTW complex transforms.
//
// FFTW's planner is not thread safe, so plan creation and destruction are
// serialized behind a global mutex. Execution uses per-object buffers and is
// safe as long as each object stays on one thread at a time.
#pragma once

#include <fftw3.h>

#include <Eigen/Dense>

#include <complex>
#include <cstring>
#include <mutex>

#include "plateforge/common.hpp"

namespace plateforge {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class Fft1d {
 public:
  explicit Fft1d(int n) : n_(n) {
    if (n <= 0) throw ValidationError("Fft1d: size must be positive");
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n)));
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_1d(n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  ~Fft1d() {
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(buf_);
  }
  Fft1d(const Fft1d&) = delete;
  Fft1d& operator=(const Fft1d&) = delete;

  int size() const { return n_; }

  // In-place unnormalized forward DFT of n complex samples.
  void forward(Complex* data) {
    // std::complex<double> is layout-compatible with fftw_complex
    std::memcpy(static_cast<void*>(buf_), static_cast<const void*>(data),
                sizeof(Complex) * static_cast<std::size_t>(n_));
    fftw_execute(plan_);
    std::memcpy(static_cast<void*>(data), static_cast<const void*>(buf_),
                sizeof(Complex) * static_cast<std::size_t>(n_));
  }

  Eigen::VectorXcd forward(const Eigen::VectorXcd& in) {
    if (in.size() != n_) throw ShapeError("Fft1d: input length mismatch");
    Eigen::VectorXcd out = in;
    forward(out.data());
    return out;
  }

 private:
  int n_;
  fftw_complex* buf_;
  fftw_plan plan_;
};

class Fft2d {
 public:
  Fft2d(int ny, int nx) : ny_(ny), nx_(nx) {
    if (ny <= 0 || nx <= 0) throw ValidationError("Fft2d: sizes must be positive");
    buf_ = static_cast<fftw_complex*>(
        fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nx)));
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_2d(ny, nx, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  ~Fft2d() {
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(buf_);
  }
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  // Unnormalized 2-D DFT of a real (Ny x Nx) grid. Output element (ky, kx).
  Eigen::MatrixXcd forward(const Grid& g) {
    if (g.rows() != ny_ || g.cols() != nx_) throw ShapeError("Fft2d: grid shape mismatch");
    auto* b = reinterpret_cast<Complex*>(buf_);
    const double* src = g.data();
    for (long i = 0; i < static_cast<long>(ny_) * nx_; ++i) b[i] = Complex(src[i], 0.0);
    fftw_execute(plan_);
    Eigen::MatrixXcd out(ny_, nx_);
    for (int iy = 0; iy < ny_; ++iy)
      for (int ix = 0; ix < nx_; ++ix) out(iy, ix) = b[static_cast<long>(iy) * nx_ + ix];
    return out;
  }

 private:
  int ny_, nx_;
  fftw_complex* buf_;
  fftw_plan plan_;
};

}  // namespace plateforge
