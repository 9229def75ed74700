// Diagonal-LTI surrogate of the plate dynamics.
//
// A linear encoder maps a flattened (displacement, velocity) snapshot to a
// complex latent vector that evolves as x_{k+1} = Lambda x_k with Lambda
// diagonal; a linear decoder maps back to the grid. The operator is fitted by
// exact DMD on snapshot pairs, eigenvalue radii are clipped to [0, 1], and
// rollouts run through a blocked associative scan.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "plateforge/common.hpp"
#include "plateforge/dataset.hpp"
#include "plateforge/solver.hpp"
#include "plateforge/threading.hpp"
#include "plateforge/trajectory.hpp"
#include "plateforge/trajectory_io.hpp"

namespace plateforge {

class DiagLTIModel {
 public:
  Eigen::MatrixXcd encoder;  // (M_lat x N_flat)
  Eigen::MatrixXcd decoder;  // (N_flat x M_lat)
  int ny = 0, nx = 0;
  double fs = 0.0, dx = 0.0, dy = 0.0;
  int sub_step = 1;  // latent step advances this many frames
  nlohmann::json meta = nlohmann::json::object();

  int latent_dim() const { return static_cast<int>(encoder.rows()); }
  long flat_dim() const { return static_cast<long>(encoder.cols()); }

  const Eigen::VectorXd& eigen_r() const { return eigen_r_; }
  const Eigen::VectorXd& eigen_theta() const { return eigen_theta_; }

  Eigen::VectorXcd eigenvalues() const {
    Eigen::VectorXcd lam(eigen_r_.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      lam[i] = std::polar(eigen_r_[i], eigen_theta_[i]);
    return lam;
  }

  // Stores eigenvalues in clipped polar form: r in [0, 1], theta in (-pi, pi].
  void set_eigenvalues(const Eigen::VectorXcd& lam) {
    eigen_r_.resize(lam.size());
    eigen_theta_.resize(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      eigen_r_[i] = std::min(std::abs(lam[i]), 1.0);
      eigen_theta_[i] = std::arg(lam[i]);
    }
  }
  void set_eigenvalues_polar(const Eigen::VectorXd& r, const Eigen::VectorXd& theta) {
    if (r.size() != theta.size()) throw ShapeError("DiagLTIModel: r/theta length mismatch");
    eigen_r_ = r.cwiseMax(0.0).cwiseMin(1.0);
    eigen_theta_ = theta;
  }

  Eigen::VectorXcd encode(const Eigen::Ref<const Eigen::VectorXd>& snapshot) const {
    if (snapshot.size() != flat_dim()) throw ShapeError("DiagLTIModel::encode: length mismatch");
    return encoder * snapshot.cast<Complex>();
  }

  Eigen::VectorXcd encode(const FieldSnapshot& s) const {
    if (s.displacement.rows() != ny || s.displacement.cols() != nx || s.velocity.rows() != ny ||
        s.velocity.cols() != nx)
      throw ShapeError("DiagLTIModel::encode: snapshot grid mismatch");
    Eigen::VectorXd flat(flat_dim());
    const long npts = static_cast<long>(ny) * nx;
    flat.head(npts) = flatten(s.displacement);
    flat.tail(npts) = flatten(s.velocity);
    return encoder * flat.cast<Complex>();
  }

  // Real part of the decoded latents, (N_flat x L). Decoded states of a
  // well-formed model are real up to numerical residue.
  Eigen::MatrixXd decode_real(const Eigen::MatrixXcd& latents) const {
    if (latents.rows() != latent_dim()) throw ShapeError("DiagLTIModel::decode: rows mismatch");
    return decoder.real() * latents.real() - decoder.imag() * latents.imag();
  }

  Eigen::MatrixXd decode_imag(const Eigen::MatrixXcd& latents) const {
    if (latents.rows() != latent_dim()) throw ShapeError("DiagLTIModel::decode: rows mismatch");
    return decoder.real() * latents.imag() + decoder.imag() * latents.real();
  }

 private:
  Eigen::VectorXd eigen_r_, eigen_theta_;
};

// Blocked inclusive scan of elementwise complex products along columns.
// Chunk boundaries are fixed so the result does not depend on the number of
// worker threads.
inline void inclusive_scan_columns(Eigen::MatrixXcd& a, int jobs = 1) {
  const int L = static_cast<int>(a.cols());
  if (L <= 1) return;
  constexpr int kChunk = 128;
  const int nchunks = (L + kChunk - 1) / kChunk;

  parallel_for(nchunks, jobs, [&](long c) {
    const int lo = static_cast<int>(c) * kChunk;
    const int hi = std::min(lo + kChunk, L);
    for (int j = lo + 1; j < hi; ++j) a.col(j).array() *= a.col(j - 1).array();
  });

  Eigen::MatrixXcd carry(a.rows(), nchunks);
  carry.col(0).setOnes();
  for (int c = 1; c < nchunks; ++c)
    carry.col(c).array() =
        carry.col(c - 1).array() * a.col(std::min(c * kChunk, L) - 1).array();

  parallel_for(nchunks - 1, jobs, [&](long ci) {
    const int c = static_cast<int>(ci) + 1;
    const int lo = c * kChunk;
    const int hi = std::min(lo + kChunk, L);
    for (int j = lo; j < hi; ++j) a.col(j).array() *= carry.col(c).array();
  });
}

// Latent rollout x_k = Lambda^k x0 for k = 1..L, computed via the scan.
inline Eigen::MatrixXcd lti_rollout_scan(const DiagLTIModel& model, const Eigen::VectorXcd& x0,
                                         int L, int jobs = 1) {
  if (L < 1) throw ValidationError("lti_rollout_scan: L must be >= 1");
  if (x0.size() != model.latent_dim()) throw ShapeError("lti_rollout_scan: x0 length mismatch");
  const Eigen::VectorXcd lam = model.eigenvalues();
  Eigen::MatrixXcd seq(lam.size(), L);
  seq.colwise() = lam;
  inclusive_scan_columns(seq, jobs);
  seq.array().colwise() *= x0.array();
  return seq;
}

// Sequential recurrence, kept as the oracle for the scan kernel.
inline Eigen::MatrixXcd lti_rollout_sequential(const DiagLTIModel& model,
                                               const Eigen::VectorXcd& x0, int L) {
  if (L < 1) throw ValidationError("lti_rollout_sequential: L must be >= 1");
  const Eigen::VectorXcd lam = model.eigenvalues();
  Eigen::MatrixXcd seq(lam.size(), L);
  Eigen::VectorXcd x = x0;
  for (int k = 0; k < L; ++k) {
    x.array() *= lam.array();
    seq.col(k) = x;
  }
  return seq;
}

// Encode -> scan rollout -> decode: the next L frames after the input
// snapshot, one latent step (= sub_step frames) apart.
inline Trajectory predict_block(const DiagLTIModel& model, const FieldSnapshot& snapshot, int L,
                                int jobs = 1) {
  const Eigen::VectorXcd x0 = model.encode(snapshot);
  const Eigen::MatrixXcd latents = lti_rollout_scan(model, x0, L, jobs);
  const Eigen::MatrixXd frames = model.decode_real(latents);

  Trajectory out;
  out.allocate(L, model.ny, model.nx);
  out.fs = model.fs;
  out.dx = model.dx;
  out.dy = model.dy;
  const long stride = out.frame_stride();
  for (int t = 0; t < L; ++t)
    Eigen::Map<Eigen::VectorXd>(out.frame_ptr(t), stride) = frames.col(t);
  out.meta["meta"] = {{"kind", "prediction_block"}, {"frame_stride", model.sub_step}};
  return out;
}

struct FitOptions {
  int rank = 450;
  int sub_step = 1;     // fit pairs (k, k + sub_step)
  int pair_stride = 1;  // take every pair_stride-th pair from each trajectory
  double sv_rel_tol = 1e-12;
};

// Exact DMD over snapshot pairs drawn from the given trajectories.
inline DiagLTIModel fit_diag_lti(const std::vector<const Trajectory*>& trajectories,
                                 const FitOptions& opt) {
  if (trajectories.empty()) throw ConfigError("fit_diag_lti: no trajectories");
  if (opt.rank < 1) throw ConfigError("fit_diag_lti: rank must be >= 1");
  if (opt.sub_step < 1 || opt.pair_stride < 1)
    throw ConfigError("fit_diag_lti: sub_step and pair_stride must be >= 1");

  const Trajectory& first = *trajectories.front();
  const long n_flat = first.frame_stride();
  long n_pairs = 0;
  for (const Trajectory* t : trajectories) {
    if (t->ny != first.ny || t->nx != first.nx)
      throw ShapeError("fit_diag_lti: trajectories have mixed grid shapes");
    const long avail = t->frames - opt.sub_step;
    if (avail > 0) n_pairs += (avail - 1) / opt.pair_stride + 1;
  }
  if (n_pairs < 1) throw ConfigError("fit_diag_lti: no snapshot pairs (trajectories too short)");
  if (opt.rank > n_pairs)
    throw ConfigError("fit_diag_lti: rank " + std::to_string(opt.rank) +
                      " exceeds the number of snapshot pairs (" + std::to_string(n_pairs) + ")");
  if (opt.rank > n_flat)
    throw ConfigError("fit_diag_lti: rank exceeds the flattened snapshot dimension");

  Eigen::MatrixXd X(n_flat, n_pairs), Xp(n_flat, n_pairs);
  long col = 0;
  for (const Trajectory* t : trajectories) {
    for (long k = 0; k + opt.sub_step < t->frames; k += opt.pair_stride, ++col) {
      X.col(col) = t->snapshot_vector(static_cast<int>(k));
      Xp.col(col) = t->snapshot_vector(static_cast<int>(k + opt.sub_step));
    }
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (!(sv[0] > 0)) throw ConfigError("fit_diag_lti: snapshot matrix is identically zero");
  int numerical_rank = 0;
  while (numerical_rank < sv.size() && sv[numerical_rank] > opt.sv_rel_tol * sv[0])
    ++numerical_rank;
  nlohmann::json warnings = nlohmann::json::array();
  int r = opt.rank;
  if (numerical_rank < r) {
    warnings.push_back("rank truncated from " + std::to_string(r) + " to " +
                       std::to_string(numerical_rank) +
                       " (singular values below tolerance)");
    r = numerical_rank;
  }

  const Eigen::MatrixXd U = svd.matrixU().leftCols(r);
  const Eigen::MatrixXd V = svd.matrixV().leftCols(r);
  const Eigen::VectorXd S = sv.head(r);
  const Eigen::MatrixXd a_tilde =
      U.transpose() * Xp * V * S.cwiseInverse().asDiagonal();

  Eigen::EigenSolver<Eigen::MatrixXd> es(a_tilde);
  if (es.info() != Eigen::Success) throw Error("fit_diag_lti: eigendecomposition failed");
  const Eigen::MatrixXcd W = es.eigenvectors();

  DiagLTIModel model;
  model.encoder = W.partialPivLu().solve(U.transpose().cast<Complex>());
  model.decoder = U.cast<Complex>() * W;
  model.set_eigenvalues(es.eigenvalues());
  model.ny = first.ny;
  model.nx = first.nx;
  model.fs = first.fs;
  model.dx = first.dx;
  model.dy = first.dy;
  model.sub_step = opt.sub_step;
  model.meta["fit"] = {{"requested_rank", opt.rank},
                       {"effective_rank", r},
                       {"n_pairs", n_pairs},
                       {"pair_stride", opt.pair_stride},
                       {"sub_step", opt.sub_step},
                       {"sigma_max", sv[0]},
                       {"sigma_min_kept", S[r - 1]},
                       {"warnings", warnings}};
  return model;
}

// ---------------------------------------------------------------------------
// Predictor contract: next L frames from a single snapshot.

struct Predictor {
  virtual ~Predictor() = default;
  virtual Trajectory predict(const FieldSnapshot& input, int L) = 0;
  // Frames advanced per predicted step (1 unless a sub-stepped model).
  virtual int frame_stride() const { return 1; }
};

class DiagLTIPredictor final : public Predictor {
 public:
  explicit DiagLTIPredictor(const DiagLTIModel& model, int jobs = 1)
      : model_(model), jobs_(jobs) {}
  Trajectory predict(const FieldSnapshot& input, int L) override {
    return predict_block(model_, input, L, jobs_);
  }
  int frame_stride() const override { return model_.sub_step; }

 private:
  const DiagLTIModel& model_;
  int jobs_;
};

// The reference solver wrapped as a Predictor; optionally converts between
// normalized and physical units at the boundary.
class ReferencePredictor final : public Predictor {
 public:
  ReferencePredictor(const PlateParams& params, const ModalBasis& basis, int oversample,
                     const NormStats* stats = nullptr)
      : params_(params), basis_(basis), oversample_(oversample) {
    if (stats) stats_ = std::make_unique<NormStats>(*stats);
  }

  Trajectory predict(const FieldSnapshot& input, int L) override {
    FieldSnapshot phys = input;
    if (stats_) {
      phys.displacement *= stats_->displacement_scale;
      phys.velocity *= stats_->velocity_scale;
    }
    Trajectory full = simulate(params_, basis_, phys, L + 1, oversample_);
    Trajectory out;
    out.allocate(L, full.ny, full.nx);
    out.fs = full.fs;
    out.dx = full.dx;
    out.dy = full.dy;
    for (int t = 0; t < L; ++t)
      Eigen::Map<Eigen::VectorXd>(out.frame_ptr(t), out.frame_stride()) =
          full.snapshot_vector(t + 1);
    if (stats_) {
      NormStats s = *stats_;
      // frames were produced in physical units; bring them back
      for (int t = 0; t < L; ++t) {
        out.disp(t) /= s.displacement_scale;
        out.vel(t) /= s.velocity_scale;
      }
    }
    out.meta["meta"] = {{"kind", "prediction_block"}, {"frame_stride", 1}};
    return out;
  }

 private:
  PlateParams params_;
  const ModalBasis& basis_;
  int oversample_;
  std::unique_ptr<NormStats> stats_;
};

// Repeatedly feeds the last predicted frame back into the predictor and
// concatenates the blocks, truncated to total_steps frames. A predictor
// failure keeps the completed prefix, labeled partial.
inline Trajectory autoregressive_rollout(Predictor& predictor, const FieldSnapshot& initial,
                                         int block_len, int total_steps) {
  if (block_len < 1 || total_steps < block_len)
    throw ValidationError("autoregressive_rollout: need total_steps >= block_len >= 1");

  Trajectory out;
  nlohmann::json boundaries = nlohmann::json::array();
  int produced = 0;
  int calls = 0;
  FieldSnapshot input = initial;
  std::string error_msg;
  bool partial = false;

  while (produced < total_steps) {
    Trajectory block;
    try {
      block = predictor.predict(input, block_len);
      ++calls;
    } catch (const std::exception& e) {
      partial = true;
      error_msg = e.what();
      break;
    }
    if (block.frames != block_len || (out.frames > 0 && (block.ny != out.ny || block.nx != out.nx)))
      throw ShapeError("autoregressive_rollout: predictor violated the block contract");
    if (out.frames == 0) {
      out.allocate(total_steps, block.ny, block.nx);
      out.fs = block.fs;
      out.dx = block.dx;
      out.dy = block.dy;
    }
    boundaries.push_back(produced);
    const int take = std::min(block_len, total_steps - produced);
    for (int t = 0; t < take; ++t)
      Eigen::Map<Eigen::VectorXd>(out.frame_ptr(produced + t), out.frame_stride()) =
          block.snapshot_vector(t);
    produced += take;
    if (produced < total_steps) input = block.snapshot(block_len - 1);
  }

  if (partial && produced < total_steps) {
    Trajectory prefix;
    if (produced > 0) {
      prefix.allocate(produced, out.ny, out.nx);
      prefix.fs = out.fs;
      prefix.dx = out.dx;
      prefix.dy = out.dy;
      std::copy(out.data.begin(),
                out.data.begin() + static_cast<std::ptrdiff_t>(produced) * out.frame_stride(),
                prefix.data.begin());
    }
    prefix.meta["meta"] = {{"kind", "prediction"},      {"block_len", block_len},
                           {"block_boundaries", boundaries}, {"predictor_calls", calls},
                           {"partial", true},           {"error", error_msg},
                           {"frame_stride", predictor.frame_stride()}};
    return prefix;
  }

  out.meta["meta"] = {{"kind", "prediction"},      {"block_len", block_len},
                      {"block_boundaries", boundaries}, {"predictor_calls", calls},
                      {"partial", false},          {"frame_stride", predictor.frame_stride()}};
  return out;
}

// ---------------------------------------------------------------------------
// Model files: magic, little-endian JSON-length, JSON header, f64 payload
// (r, theta, encoder, decoder; complex stored re/im, column-major).

constexpr char kModelMagic[8] = {'P', 'F', 'M', 'O', 'D', 'E', 'L', '1'};

inline void save_model(const DiagLTIModel& model, const std::string& path) {
  const Eigen::VectorXd& r = model.eigen_r();
  const Eigen::VectorXd& th = model.eigen_theta();
  std::uint64_t h = fnv1a64(r.data(), sizeof(double) * static_cast<std::size_t>(r.size()));
  h = fnv1a64(th.data(), sizeof(double) * static_cast<std::size_t>(th.size()), h);

  nlohmann::json header = {{"format", "plateforge-dmd"},
                           {"version", 1},
                           {"m_lat", model.latent_dim()},
                           {"n_flat", model.flat_dim()},
                           {"ny", model.ny},
                           {"nx", model.nx},
                           {"fs", model.fs},
                           {"dx", model.dx},
                           {"dy", model.dy},
                           {"sub_step", model.sub_step},
                           {"dtype", "f64"},
                           {"layout", "col-major"},
                           {"eigenvalue_hash", hex64(h)},
                           {"meta", model.meta}};
  auto f = detail::open_file(path, "wb");
  const std::string htext = header.dump();
  const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
  auto put = [&](const void* p, std::size_t n) {
    if (std::fwrite(p, 1, n, f.get()) != n) throw Error("write failed: " + path);
  };
  put(kModelMagic, 8);
  put(&hlen, 4);
  put(htext.data(), htext.size());
  put(r.data(), sizeof(double) * static_cast<std::size_t>(r.size()));
  put(th.data(), sizeof(double) * static_cast<std::size_t>(th.size()));
  put(model.encoder.data(), sizeof(Complex) * static_cast<std::size_t>(model.encoder.size()));
  put(model.decoder.data(), sizeof(Complex) * static_cast<std::size_t>(model.decoder.size()));
}

inline DiagLTIModel load_model(const std::string& path) {
  auto f = detail::open_file(path, "rb");
  char magic[8];
  if (std::fread(magic, 1, 8, f.get()) != 8 || std::memcmp(magic, kModelMagic, 8) != 0)
    throw FormatError("not a plateforge model file (bad magic): " + path);
  std::uint32_t hlen = 0;
  if (std::fread(&hlen, 4, 1, f.get()) != 1 || hlen == 0)
    throw FormatError("truncated model header: " + path);
  std::string htext(hlen, '\0');
  if (std::fread(htext.data(), 1, hlen, f.get()) != hlen)
    throw FormatError("truncated model header: " + path);
  nlohmann::json header = nlohmann::json::parse(htext, nullptr, false);
  if (header.is_discarded()) throw FormatError("malformed model header: " + path);
  if (header.value("format", "") != "plateforge-dmd" || header.value("version", -1) != 1)
    throw FormatError("unsupported model format: " + path);

  const int m_lat = header.at("m_lat").get<int>();
  const long n_flat = header.at("n_flat").get<long>();
  if (m_lat < 1 || n_flat < 1) throw FormatError("invalid model dimensions: " + path);

  DiagLTIModel model;
  model.ny = header.at("ny").get<int>();
  model.nx = header.at("nx").get<int>();
  model.fs = header.at("fs").get<double>();
  model.dx = header.value("dx", 0.0);
  model.dy = header.value("dy", 0.0);
  model.sub_step = header.value("sub_step", 1);
  model.meta = header.value("meta", nlohmann::json::object());

  auto get = [&](void* p, std::size_t n) {
    if (std::fread(p, 1, n, f.get()) != n) throw FormatError("truncated model payload: " + path);
  };
  Eigen::VectorXd r(m_lat), th(m_lat);
  get(r.data(), sizeof(double) * static_cast<std::size_t>(m_lat));
  get(th.data(), sizeof(double) * static_cast<std::size_t>(m_lat));
  model.encoder.resize(m_lat, n_flat);
  model.decoder.resize(n_flat, m_lat);
  get(model.encoder.data(), sizeof(Complex) * static_cast<std::size_t>(model.encoder.size()));
  get(model.decoder.data(), sizeof(Complex) * static_cast<std::size_t>(model.decoder.size()));
  model.set_eigenvalues_polar(r, th);
  return model;
}

// ---------------------------------------------------------------------------
// External predictions.

inline Trajectory load_external_predictions(const std::string& path) {
  Trajectory t = read_trajectory(path);
  const nlohmann::json& m = t.meta.value("meta", nlohmann::json::object());
  const std::string kind = m.value("kind", "");
  if (kind != "prediction" && kind != "prediction_block")
    throw FormatError("load_external_predictions: file lacks prediction metadata: " + path);
  if (!m.contains("ref_id"))
    throw FormatError("load_external_predictions: prediction has no ref_id: " + path);
  return t;
}

// Resolves the ground-truth file a prediction refers to, checking shape
// compatibility against the stored header.
inline std::string pair_prediction_with_truth(const Trajectory& pred,
                                              const DatasetManifest& manifest) {
  const int ref_id = pred.meta.at("meta").at("ref_id").get<int>();
  for (const auto& e : manifest.trajectories) {
    if (e.id != ref_id) continue;
    const std::string path = manifest.resolve(e);
    TrajectoryReader r(path);
    if (r.ny() != pred.ny || r.nx() != pred.nx)
      throw ShapeError("prediction grid does not match ground truth for id " +
                       std::to_string(ref_id));
    return path;
  }
  throw ValidationError("no ground-truth trajectory with id " + std::to_string(ref_id));
}

}  // namespace plateforge
