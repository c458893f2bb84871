#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <set>

#include "doctest.h"
#include "hr/coils.hpp"
#include "hr/fft.hpp"
#include "hr/grog.hpp"
#include "hr/nufft.hpp"
#include "test_util.hpp"

using namespace hr;

namespace {

using Mat = Eigen::MatrixXcd;

// mostly anti-Hermitian log, matching the near-unitary shift operators seen
// on real data; keeps the propagated calibration chain well conditioned
Mat random_log(std::mt19937_64& rng, int64_t n, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  Mat m(n, n);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j) m(i, j) = cplx(d(rng), d(rng));
  Mat anti = 0.5 * (m - m.adjoint());
  Mat herm = 0.5 * (m + m.adjoint());
  return anti + 0.05 * herm;
}

Mat expm(const Mat& l) {
  Eigen::ComplexEigenSolver<Mat> es(l);
  Mat d = Mat::Zero(l.rows(), l.cols());
  for (Eigen::Index i = 0; i < l.rows(); ++i) d(i, i) = std::exp(es.eigenvalues()(i));
  return es.eigenvectors() * d * es.eigenvectors().inverse();
}

double frob_diff(const CArray& a, const Mat& b) {
  double s = 0;
  for (int64_t i = 0; i < a.dim(0); ++i)
    for (int64_t j = 0; j < a.dim(1); ++j) s += std::norm(a.at(i, j) - b(i, j));
  return std::sqrt(s);
}

// synthesize spoke data consistent with the log-linear shift model:
// s_{j+1} = exp(dx*Lx + dy*Ly) s_j, displacements in grid cells
CArray model_consistent_samples(const Trajectory& traj, int m, const Mat& lx, const Mat& ly,
                                std::mt19937_64& rng) {
  const int64_t nc = lx.rows();
  const int64_t s = traj.samples_per_readout;
  CArray out({nc, traj.readout_count, s});
  const int64_t nsamp = traj.sample_count();
  std::normal_distribution<double> d(0.0, 1.0);
  for (int64_t r = 0; r < traj.readout_count; ++r) {
    const double dx = (traj.kx[static_cast<size_t>(r * s + 1)] - traj.kx[static_cast<size_t>(r * s)]) * m;
    const double dy = (traj.ky[static_cast<size_t>(r * s + 1)] - traj.ky[static_cast<size_t>(r * s)]) * m;
    Mat step = expm(dx * lx + dy * ly);
    Eigen::VectorXcd v(nc);
    for (int64_t c = 0; c < nc; ++c) v(c) = cplx(d(rng), d(rng));
    for (int64_t j = 0; j < s; ++j) {
      for (int64_t c = 0; c < nc; ++c) out[c * nsamp + r * s + j] = v(c);
      v = step * v;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("calibration recovers the generating operators") {
  std::mt19937_64 rng(61);
  const int m = 32;
  const int64_t nc = 3;
  Mat lx = random_log(rng, nc, 0.05), ly = random_log(rng, nc, 0.05);
  Trajectory traj = gen_golden_radial(12, 1, 32);
  CArray data = model_consistent_samples(traj, m, lx, ly, rng);
  GrogOperators ops = calibrate_grog(data, traj, m);
  CHECK(frob_diff(ops.gx(), expm(lx)) < 1e-6);
  CHECK(frob_diff(ops.gy(), expm(ly)) < 1e-6);
}

TEST_CASE("two orthogonal spokes recover the axis operators independently") {
  std::mt19937_64 rng(62);
  const int m = 24;
  const int64_t nc = 4;
  Mat lx = random_log(rng, nc, 0.08), ly = random_log(rng, nc, 0.08);
  Trajectory traj;
  traj.kind = TrajKind::radial;
  traj.readout_count = 2;
  traj.samples_per_readout = 24;
  traj.kx.resize(48);
  traj.ky.resize(48);
  for (int64_t j = 0; j < 24; ++j) {
    const double r = -0.5 + static_cast<double>(j) / 24.0;
    traj.kx[static_cast<size_t>(j)] = r;  // spoke 0 along x
    traj.ky[static_cast<size_t>(j)] = 0;
    traj.kx[static_cast<size_t>(24 + j)] = 0;  // spoke 1 along y
    traj.ky[static_cast<size_t>(24 + j)] = r;
  }
  CArray data = model_consistent_samples(traj, m, lx, ly, rng);
  GrogOperators ops = calibrate_grog(data, traj, m);
  CHECK(frob_diff(ops.gx(), expm(lx)) < 1e-6);
  CHECK(frob_diff(ops.gy(), expm(ly)) < 1e-6);
}

TEST_CASE("zero fractional shift is the identity") {
  std::mt19937_64 rng(63);
  const int m = 24;
  Mat lx = random_log(rng, 3, 0.05), ly = random_log(rng, 3, 0.05);
  Trajectory traj = gen_golden_radial(8, 1, 24);
  GrogOperators ops = calibrate_grog(model_consistent_samples(traj, m, lx, ly, rng), traj, m);
  CArray g0 = ops.fractional_shift(0.0, 0.0);
  for (int64_t i = 0; i < 3; ++i)
    for (int64_t j = 0; j < 3; ++j)
      CHECK(std::abs(g0.at(i, j) - (i == j ? cplx(1, 0) : cplx(0, 0))) < 1e-10);
}

TEST_CASE("fractional powers compose additively") {
  std::mt19937_64 rng(64);
  const int m = 24;
  Mat lx = random_log(rng, 3, 0.06), ly = random_log(rng, 3, 0.06);
  Trajectory traj = gen_golden_radial(10, 1, 24);
  GrogOperators ops = calibrate_grog(model_consistent_samples(traj, m, lx, ly, rng), traj, m);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    const double d1 = u(rng), d2 = u(rng), dy = u(rng);
    CArray a = ops.fractional_shift(d1, dy);
    CArray b = ops.fractional_shift(d2, 0.0);
    CArray prod({3, 3});
    for (int64_t i = 0; i < 3; ++i)
      for (int64_t j = 0; j < 3; ++j) {
        cplx acc = 0;
        for (int64_t k = 0; k < 3; ++k) acc += b.at(i, k) * a.at(k, j);
        prod.at(i, j) = acc;
      }
    CArray direct = ops.fractional_shift(d1 + d2, dy);
    for (int64_t i = 0; i < 9; ++i) CHECK(std::abs(prod[i] - direct[i]) < 1e-8);
  }
}

TEST_CASE("single-coil calibration points at the nearest-neighbor fallback") {
  Trajectory traj = gen_golden_radial(4, 1, 16);
  CArray single({1, 4, 16});
  CHECK_THROWS_AS(calibrate_grog(single, traj, 16), std::invalid_argument);
  GrogOperators nn = GrogOperators::identity(1);
  CHECK(nn.ncoils() == 1);
  CHECK(std::abs(nn.fractional_shift(0.3, -0.2).at(0, 0) - cplx(1, 0)) < 1e-15);
}

TEST_CASE("rank-deficient calibration (single angle) rejected") {
  std::mt19937_64 rng(65);
  Trajectory traj;
  traj.kind = TrajKind::radial;
  traj.readout_count = 3;
  traj.samples_per_readout = 16;
  traj.kx.resize(48);
  traj.ky.resize(48);
  for (int64_t r = 0; r < 3; ++r)
    for (int64_t j = 0; j < 16; ++j) {
      traj.kx[static_cast<size_t>(r * 16 + j)] = -0.5 + j / 16.0;  // all spokes along x
      traj.ky[static_cast<size_t>(r * 16 + j)] = 0.0;
    }
  CArray data = hrt::random_carray({2, 3, 16}, rng);
  CHECK_THROWS_AS(calibrate_grog(data, traj, 16), std::invalid_argument);
}

TEST_CASE("on-grid samples deposit unchanged") {
  const int m = 16;
  Trajectory traj;
  traj.kind = TrajKind::generic;
  traj.readout_count = 1;
  traj.samples_per_readout = 4;
  traj.kx = {0.0, 1.0 / m, 2.0 / m, -3.0 / m};
  traj.ky = {0.0, 0.0, 1.0 / m, -2.0 / m};
  std::mt19937_64 rng(66);
  CArray data = hrt::random_carray({2, 1, 4}, rng);
  GriddedKSpace g = grog_grid(data, traj, GrogOperators::identity(2), m);
  const int64_t npix = m * m;
  for (int64_t j = 0; j < 4; ++j) {
    const int64_t gx = static_cast<int64_t>(std::lround(traj.kx[static_cast<size_t>(j)] * m)) + m / 2;
    const int64_t gy = static_cast<int64_t>(std::lround(traj.ky[static_cast<size_t>(j)] * m)) + m / 2;
    CHECK(g.mask[gy * m + gx] == 1.0);
    for (int64_t c = 0; c < 2; ++c)
      CHECK(std::abs(g.data[c * npix + gy * m + gx] - data[c * 4 + j]) < 1e-12);
  }
}

TEST_CASE("mask cell count matches the distinct-nearest-cell oracle") {
  std::mt19937_64 rng(67);
  const int m = 20;
  Trajectory traj = gen_golden_radial(14, 1, 24);
  CArray data = hrt::random_carray({2, 14, 24}, rng);
  GriddedKSpace g = grog_grid(data, traj, GrogOperators::identity(2), m);
  std::set<int64_t> cells;
  for (int64_t i = 0; i < traj.sample_count(); ++i) {
    int64_t cx = (((static_cast<int64_t>(std::lround(traj.kx[static_cast<size_t>(i)] * m)) + m / 2) % m) + m) % m;
    int64_t cy = (((static_cast<int64_t>(std::lround(traj.ky[static_cast<size_t>(i)] * m)) + m / 2) % m) + m) % m;
    cells.insert(cy * m + cx);
  }
  double mask_count = 0;
  for (double v : g.mask.vec()) {
    CHECK((v == 0.0 || v == 1.0));
    mask_count += v;
  }
  CHECK(mask_count == static_cast<double>(cells.size()));
}

TEST_CASE("weights positive exactly on the mask") {
  std::mt19937_64 rng(68);
  const int m = 18;
  Trajectory traj = gen_golden_radial(10, 1, 20);
  CArray data = hrt::random_carray({2, 10, 20}, rng);
  GriddedKSpace g = grog_grid(data, traj, GrogOperators::identity(2), m);
  for (int64_t i = 0; i < g.mask.numel(); ++i) {
    CHECK(g.weights[i] >= 0.0);
    CHECK((g.weights[i] > 0.0) == (g.mask[i] == 1.0));
  }
}

TEST_CASE("fully sampled radial round trip of a smooth phantom under 5% NMSE") {
  const int m = 32;
  const int64_t nc = 4;
  Trajectory traj = gen_golden_radial(96, 1, 64);
  CArray maps = gen_coil_sensitivities(nc, m, 4);
  CArray obj = hrt::smooth_phantom_image(m, 9);
  GriddingPlan plan(traj, m);
  RArray unit = RArray::full({traj.readout_count, traj.samples_per_readout}, 1.0);
  CArray kspace = encode(obj, maps, plan, unit);

  GrogOperators ops = calibrate_grog(kspace, traj, m);
  GriddedKSpace g = grog_grid(kspace, traj, ops, m);

  // per-coil inverse FFT of the collision-averaged grid vs the coil-weighted
  // phantom (unitary FFT pair needs a 1/m rescale of raw DFT samples)
  const int64_t npix = m * m;
  CArray rec({nc, m, m});
  CArray cell({m, m});
  for (int64_t c = 0; c < nc; ++c) {
    for (int64_t i = 0; i < npix; ++i) cell[i] = g.data[c * npix + i];
    CArray img = ifft2_centered(cell);
    for (int64_t i = 0; i < npix; ++i) rec[c * npix + i] = img[i] / static_cast<double>(m);
  }
  CArray truth = coil_expand(obj, maps);
  CHECK(hrt::nmse_c(rec, truth) < 0.05);
}
