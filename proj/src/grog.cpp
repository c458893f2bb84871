#include "hr/grog.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace hr {

namespace {

using Mat = Eigen::MatrixXcd;

Mat to_eigen(const CArray& a) {
  Mat m(a.dim(0), a.dim(1));
  for (int64_t i = 0; i < a.dim(0); ++i)
    for (int64_t j = 0; j < a.dim(1); ++j) m(i, j) = a.at(i, j);
  return m;
}

CArray from_eigen(const Mat& m) {
  CArray a({m.rows(), m.cols()});
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.at(i, j) = m(i, j);
  return a;
}

// principal matrix log via eigendecomposition; returns false when the
// eigenvalue spread fails the conditioning threshold
bool matrix_log(const Mat& g, Mat& out) {
  Eigen::ComplexEigenSolver<Mat> es(g);
  if (es.info() != Eigen::Success) return false;
  const auto& ev = es.eigenvalues();
  double peak = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) peak = std::max(peak, std::abs(ev(i)));
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i)) < 1e-8 * peak) return false;
  Mat logd = Mat::Zero(ev.size(), ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) logd(i, i) = std::log(ev(i));
  out = es.eigenvectors() * logd * es.eigenvectors().inverse();
  return true;
}

}  // namespace

GrogOperators GrogOperators::identity(int64_t ncoils) {
  GrogOperators ops;
  ops.ncoils_ = ncoils;
  ops.gx_ = CArray({ncoils, ncoils});
  ops.gy_ = CArray({ncoils, ncoils});
  for (int64_t c = 0; c < ncoils; ++c) {
    ops.gx_.at(c, c) = 1.0;
    ops.gy_.at(c, c) = 1.0;
  }
  ops.ex_.identity = true;
  ops.ey_.identity = true;
  return ops;
}

CArray GrogOperators::power(const Eig& e, double d, int64_t n) {
  CArray out({n, n});
  if (e.identity) {
    for (int64_t c = 0; c < n; ++c) out.at(c, c) = 1.0;
    return out;
  }
  // V diag(lambda^d) V^-1 with the principal branch of lambda^d
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j) {
      cplx acc = 0;
      for (int64_t k = 0; k < n; ++k)
        acc += e.v.at(i, k) * std::exp(d * std::log(e.lambda[static_cast<size_t>(k)])) * e.vinv.at(k, j);
      out.at(i, j) = acc;
    }
  return out;
}

CArray GrogOperators::fractional_shift(double dx, double dy) const {
  CArray px = power(ex_, dx, ncoils_);
  CArray py = power(ey_, dy, ncoils_);
  CArray out({ncoils_, ncoils_});
  for (int64_t i = 0; i < ncoils_; ++i)
    for (int64_t j = 0; j < ncoils_; ++j) {
      cplx acc = 0;
      for (int64_t k = 0; k < ncoils_; ++k) acc += px.at(i, k) * py.at(k, j);
      out.at(i, j) = acc;
    }
  return out;
}

GrogOperators calibrate_grog(const CArray& samples, const Trajectory& traj, int matrix_size) {
  if (samples.ndim() != 3 || samples.dim(1) != traj.readout_count ||
      samples.dim(2) != traj.samples_per_readout)
    throw std::invalid_argument("calibrate_grog: samples " + shape_str(samples.shape()) +
                                " do not match trajectory");
  const int64_t ncoils = samples.dim(0);
  if (ncoils < 2)
    throw std::invalid_argument(
        "calibrate_grog: single-coil data has no coil diversity; use GrogOperators::identity for "
        "nearest-neighbor gridding");
  const int64_t nspokes = traj.readout_count;
  const int64_t s = traj.samples_per_readout;
  if (nspokes < 2 || s < 3) throw std::invalid_argument("calibrate_grog: need >= 2 spokes and >= 3 samples");
  if (matrix_size < 2) throw std::invalid_argument("calibrate_grog: matrix_size must be >= 2");

  // per-spoke shift operators with their per-step displacement expressed in
  // grid cells (one cell = 1/matrix cycles/pixel), so G_x and G_y come out
  // in unit-cell shifts
  double sum_xx = 0, sum_xy = 0, sum_yy = 0;
  Mat rhs_x = Mat::Zero(ncoils, ncoils), rhs_y = Mat::Zero(ncoils, ncoils);
  int64_t used = 0;
  std::vector<std::pair<double, double>> dirs;
  const int64_t nsamp = traj.sample_count();
  for (int64_t r = 0; r < nspokes; ++r) {
    const double dx = (traj.kx[static_cast<size_t>(r * s + 1)] - traj.kx[static_cast<size_t>(r * s)]) * matrix_size;
    const double dy = (traj.ky[static_cast<size_t>(r * s + 1)] - traj.ky[static_cast<size_t>(r * s)]) * matrix_size;
    Mat s0(ncoils, s - 1), s1(ncoils, s - 1);
    for (int64_t c = 0; c < ncoils; ++c)
      for (int64_t j = 0; j + 1 < s; ++j) {
        s0(c, j) = samples[c * nsamp + r * s + j];
        s1(c, j) = samples[c * nsamp + r * s + j + 1];
      }
    Mat gram = s0 * s0.adjoint();
    const double reg = 1e-10 * gram.trace().real() / static_cast<double>(ncoils);
    gram += reg * Mat::Identity(ncoils, ncoils);
    Mat g = s1 * s0.adjoint() * gram.inverse();
    Mat lg;
    if (!matrix_log(g, lg)) continue;  // conditioning threshold rejection
    sum_xx += dx * dx;
    sum_xy += dx * dy;
    sum_yy += dy * dy;
    rhs_x += dx * lg;
    rhs_y += dy * lg;
    dirs.emplace_back(dx, dy);
    ++used;
  }
  const double det = sum_xx * sum_yy - sum_xy * sum_xy;
  if (used < 2 || std::abs(det) < 1e-12 * (sum_xx + sum_yy) * (sum_xx + sum_yy))
    throw std::invalid_argument("calibrate_grog: rank-deficient calibration (need >= 2 distinct spoke angles)");

  // 2x2 normal equations, entrywise identical for every matrix element
  Mat lx = (sum_yy * rhs_x - sum_xy * rhs_y) / det;
  Mat ly = (sum_xx * rhs_y - sum_xy * rhs_x) / det;

  GrogOperators ops;
  ops.ncoils_ = ncoils;
  ops.matrix_ = matrix_size;
  auto expm = [&](const Mat& l, GrogOperators::Eig& eig) {
    Eigen::ComplexEigenSolver<Mat> es(l);
    if (es.info() != Eigen::Success) throw std::runtime_error("calibrate_grog: eigendecomposition failed");
    Mat expd = Mat::Zero(ncoils, ncoils);
    eig.lambda.resize(static_cast<size_t>(ncoils));
    for (int64_t i = 0; i < ncoils; ++i) {
      const cplx lam = std::exp(es.eigenvalues()(i));
      eig.lambda[static_cast<size_t>(i)] = lam;
      expd(i, i) = lam;
    }
    eig.v = from_eigen(es.eigenvectors());
    eig.vinv = from_eigen(es.eigenvectors().inverse());
    return from_eigen(es.eigenvectors() * expd * es.eigenvectors().inverse());
  };
  ops.gx_ = expm(lx, ops.ex_);
  ops.gy_ = expm(ly, ops.ey_);
  return ops;
}

GrogPrepared prepare_grog(const CArray& samples, const Trajectory& traj, const GrogOperators& ops,
                          int matrix_size) {
  if (samples.ndim() != 3 || samples.dim(1) != traj.readout_count ||
      samples.dim(2) != traj.samples_per_readout)
    throw std::invalid_argument("prepare_grog: samples " + shape_str(samples.shape()) +
                                " do not match trajectory");
  if (samples.dim(0) != ops.ncoils())
    throw std::invalid_argument("prepare_grog: coil count mismatch with operators");
  if (ops.matrix() != 0 && ops.matrix() != matrix_size)
    throw std::invalid_argument("prepare_grog: operators calibrated for matrix " +
                                std::to_string(ops.matrix()) + ", gridding onto " +
                                std::to_string(matrix_size));
  const int64_t ncoils = samples.dim(0);
  const int64_t m = matrix_size;
  const int64_t s = traj.samples_per_readout;
  const int64_t nsamp = traj.sample_count();

  GrogPrepared prep;
  prep.ncoils = ncoils;
  prep.frames = traj.frame_count();
  prep.matrix = matrix_size;
  prep.cell.resize(static_cast<size_t>(nsamp));
  prep.frame.resize(static_cast<size_t>(nsamp));
  prep.weight.resize(static_cast<size_t>(nsamp));
  prep.shifted.resize(static_cast<size_t>(nsamp * ncoils));

  std::vector<cplx> sv(static_cast<size_t>(ncoils));
  for (int64_t r = 0; r < traj.readout_count; ++r) {
    for (int64_t j = 0; j < s; ++j) {
      const size_t idx = static_cast<size_t>(r * s + j);
      const double px = traj.kx[idx] * m;
      const double py = traj.ky[idx] * m;
      const int64_t cx = static_cast<int64_t>(std::lround(px));
      const int64_t cy = static_cast<int64_t>(std::lround(py));
      const double dx = static_cast<double>(cx) - px;
      const double dy = static_cast<double>(cy) - py;
      const int64_t gx = ((cx + m / 2) % m + m) % m;  // +0.5 aliases to -0.5
      const int64_t gy = ((cy + m / 2) % m + m) % m;
      prep.cell[idx] = static_cast<int32_t>(gy * m + gx);
      prep.frame[idx] = static_cast<int32_t>(traj.frame_of(r));
      prep.weight[idx] = (1.0 - std::abs(dx)) * (1.0 - std::abs(dy));
      for (int64_t c = 0; c < ncoils; ++c) sv[static_cast<size_t>(c)] = samples[c * nsamp + static_cast<int64_t>(idx)];
      if (dx == 0.0 && dy == 0.0) {
        for (int64_t c = 0; c < ncoils; ++c) prep.shifted[idx * static_cast<size_t>(ncoils) + static_cast<size_t>(c)] = sv[static_cast<size_t>(c)];
      } else {
        CArray gsh = ops.fractional_shift(dx, dy);
        for (int64_t i = 0; i < ncoils; ++i) {
          cplx a = 0;
          for (int64_t k = 0; k < ncoils; ++k) a += gsh.at(i, k) * sv[static_cast<size_t>(k)];
          prep.shifted[idx * static_cast<size_t>(ncoils) + static_cast<size_t>(i)] = a;
        }
      }
    }
  }
  return prep;
}

GriddedKSpace grid_prepared(const GrogPrepared& prep, const RArray* sample_mask) {
  if (sample_mask && sample_mask->numel() != prep.sample_count())
    throw std::invalid_argument("grid_prepared: sample mask size mismatch");
  const int64_t m = prep.matrix;
  const int64_t ncoils = prep.ncoils;
  const int64_t frames = prep.frames;
  const int64_t npix = m * m;
  GriddedKSpace out;
  out.data = CArray({frames, ncoils, m, m});
  out.mask = RArray({frames, m, m});
  out.weights = RArray({frames, m, m});
  CArray acc({frames, ncoils, m, m});
  RArray wsum({frames, m, m});
  for (int64_t i = 0; i < prep.sample_count(); ++i) {
    if (sample_mask && (*sample_mask)[i] == 0.0) continue;
    const int64_t t = prep.frame[static_cast<size_t>(i)];
    const int64_t cell = prep.cell[static_cast<size_t>(i)];
    const double w = prep.weight[static_cast<size_t>(i)];
    wsum[t * npix + cell] += w;
    const cplx* sv = prep.shifted.data() + static_cast<size_t>(i * ncoils);
    for (int64_t c = 0; c < ncoils; ++c) acc[(t * ncoils + c) * npix + cell] += w * sv[c];
  }

  // collision-averaged values; W saturates toward 1 for well-covered cells
  double wmean = 0;
  int64_t occupied = 0;
  for (double v : wsum.vec())
    if (v > 0) {
      wmean += v;
      ++occupied;
    }
  if (occupied == 0) throw std::runtime_error("grid_prepared: no samples deposited");
  wmean /= static_cast<double>(occupied);
  for (int64_t t = 0; t < frames; ++t)
    for (int64_t i = 0; i < npix; ++i) {
      const double w = wsum[t * npix + i];
      if (w <= 0) continue;
      out.mask[t * npix + i] = 1.0;
      out.weights[t * npix + i] = w / (w + wmean);
      for (int64_t c = 0; c < ncoils; ++c)
        out.data[(t * ncoils + c) * npix + i] = acc[(t * ncoils + c) * npix + i] / w;
    }
  return out;
}

GriddedKSpace grog_grid(const CArray& samples, const Trajectory& traj, const GrogOperators& ops,
                        int matrix_size, const RArray* sample_mask) {
  if (sample_mask && (sample_mask->ndim() != 2 || sample_mask->dim(0) != traj.readout_count ||
                      sample_mask->dim(1) != traj.samples_per_readout))
    throw std::invalid_argument("grog_grid: sample mask must be [R, S]");
  GrogPrepared prep = prepare_grog(samples, traj, ops, matrix_size);
  return grid_prepared(prep, sample_mask);
}

}  // namespace hr
