#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "hr/nufft.hpp"
#include "test_util.hpp"

using namespace hr;

namespace {

Trajectory random_traj(std::mt19937_64& rng, int64_t readouts, int64_t samples) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Trajectory t;
  t.kind = TrajKind::generic;
  t.readout_count = readouts;
  t.samples_per_readout = samples;
  t.kx.resize(static_cast<size_t>(readouts * samples));
  t.ky.resize(static_cast<size_t>(readouts * samples));
  for (auto& v : t.kx) v = u(rng);
  for (auto& v : t.ky) v = u(rng);
  return t;
}

double max_rel_against(const CArray& got, const CArray& want) {
  double scale = 0;
  for (const cplx& v : want.vec()) scale = std::max(scale, std::abs(v));
  double mx = 0;
  for (int64_t i = 0; i < got.numel(); ++i) mx = std::max(mx, std::abs(got[i] - want[i]) / scale);
  return mx;
}

}  // namespace

TEST_CASE("forward: zero image gives zero samples") {
  std::mt19937_64 rng(31);
  Trajectory t = random_traj(rng, 6, 20);
  GriddingPlan plan(t, 16);
  CArray z({16, 16});
  CArray s = plan.forward(z);
  for (const cplx& v : s.vec()) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("forward: centered delta has unit-magnitude samples") {
  std::mt19937_64 rng(32);
  Trajectory t = random_traj(rng, 8, 32);
  GriddingPlan plan(t, 16);
  CArray d({16, 16});
  d.at(8, 8) = 1.0;
  CArray s = plan.forward(d);
  for (const cplx& v : s.vec()) CHECK(std::abs(std::abs(v) - 1.0) < 1e-3);
}

TEST_CASE("forward matches the brute-force DFT oracle on random images") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 8; ++trial) {
    Trajectory t = random_traj(rng, 5, 24);
    GriddingPlan plan(t, 16);
    CArray x = hrt::random_carray({16, 16}, rng);
    CHECK(max_rel_against(plan.forward(x), dft_oracle(x, t)) < 1e-3);
  }
}

TEST_CASE("adjoint: inner-product adjointness to 1e-5") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    Trajectory t = random_traj(rng, 7, 19);
    GriddingPlan plan(t, 24);
    CArray x = hrt::random_carray({24, 24}, rng);
    CArray y = hrt::random_carray({7, 19}, rng);
    cplx lhs = cdot(plan.forward(x), y);
    cplx rhs = cdot(x, plan.adjoint(y));
    CHECK(std::abs(lhs - rhs) / (norm2(x) * norm2(y)) < 1e-5);
  }
}

TEST_CASE("adjoint: zero samples give a zero image") {
  std::mt19937_64 rng(35);
  Trajectory t = random_traj(rng, 4, 10);
  GriddingPlan plan(t, 16);
  CArray img = plan.adjoint(CArray({4, 10}));
  for (const cplx& v : img.vec()) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("adjoint: weighted round trip of a smooth phantom under 1% NMSE") {
  const int m = 48;
  Trajectory t = gen_spiral(80, 76, m);
  DensityCompensation w = density_compensation(t, m);
  GriddingPlan plan(t, m);
  CArray x = hrt::smooth_phantom_image(m, 5);
  CArray back = plan.adjoint(plan.forward(x), &w);
  CHECK(hrt::nmse_c(back, x) < 0.01);
}

TEST_CASE("oracle: delta at origin pixel maps to all-ones samples") {
  std::mt19937_64 rng(36);
  Trajectory t = random_traj(rng, 3, 11);
  CArray d({12, 12});
  d.at(6, 6) = 1.0;
  CArray s = dft_oracle(d, t);
  for (const cplx& v : s.vec()) CHECK(std::abs(v - cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("oracle: linearity within 1e-12") {
  std::mt19937_64 rng(37);
  Trajectory t = random_traj(rng, 4, 9);
  CArray x = hrt::random_carray({10, 10}, rng);
  CArray y = hrt::random_carray({10, 10}, rng);
  const cplx a(0.7, -0.3), b(-1.1, 0.4);
  CArray combo({10, 10});
  for (int64_t i = 0; i < combo.numel(); ++i) combo[i] = a * x[i] + b * y[i];
  CArray lhs = dft_oracle(combo, t);
  CArray sx = dft_oracle(x, t), sy = dft_oracle(y, t);
  for (int64_t i = 0; i < lhs.numel(); ++i) CHECK(std::abs(lhs[i] - (a * sx[i] + b * sy[i])) < 1e-12);
}

TEST_CASE("encode: single uniform coil with unit weights reduces to plain F") {
  std::mt19937_64 rng(38);
  Trajectory t = random_traj(rng, 6, 14);
  GriddingPlan plan(t, 16);
  CArray coils = CArray::full({1, 16, 16}, cplx(1.0, 0.0));
  RArray w = RArray::full({6, 14}, 1.0);
  CArray x = hrt::random_carray({16, 16}, rng);
  CArray es = encode(x, coils, plan, w);
  CArray fs = plan.forward(x);
  for (int64_t i = 0; i < fs.numel(); ++i) CHECK(std::abs(es[i] - fs[i]) < 1e-12);
  CArray ea = encode_adjoint(es, coils, plan, w);
  CArray fa = plan.adjoint(fs);
  for (int64_t i = 0; i < fa.numel(); ++i) CHECK(std::abs(ea[i] - fa[i]) < 1e-12);
}

TEST_CASE("encode pair is adjoint with nontrivial weights and coils") {
  std::mt19937_64 rng(39);
  std::uniform_real_distribution<double> uw(0.1, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    Trajectory t = random_traj(rng, 5, 17);
    GriddingPlan plan(t, 20);
    CArray coils = hrt::random_carray({3, 20, 20}, rng);
    RArray w({5, 17});
    for (double& v : w.vec()) v = uw(rng);
    CArray x = hrt::random_carray({20, 20}, rng);
    CArray y = hrt::random_carray({3, 5, 17}, rng);
    cplx lhs = cdot(encode(x, coils, plan, w), y);
    cplx rhs = cdot(x, encode_adjoint(y, coils, plan, w));
    CHECK(std::abs(lhs - rhs) / (norm2(x) * norm2(y)) < 1e-5);
  }
}

TEST_CASE("encode: DC residual vanishes at a consistent solution") {
  // y = F C x on a fully sampled trajectory: C^H F^H W (F C x - y) == 0
  const int m = 24;
  Trajectory t = gen_spiral(40, 40, m);
  DensityCompensation w = density_compensation(t, m);
  GriddingPlan plan(t, m);
  std::mt19937_64 rng(40);
  CArray coils = hrt::random_carray({2, m, m}, rng);
  CArray x = hrt::smooth_phantom_image(m, 3);
  RArray unit = RArray::full({t.readout_count, t.samples_per_readout}, 1.0);
  CArray y = encode(x, coils, plan, unit);  // sqrt(1) = 1: y = F C x
  CArray x0 = encode_adjoint(y, coils, plan, w);

  CArray resid_samples = encode(x, coils, plan, unit);
  for (int64_t i = 0; i < resid_samples.numel(); ++i) resid_samples[i] -= y[i];
  CArray resid = encode_adjoint(resid_samples, coils, plan, w);
  CHECK(norm2(resid) < 1e-6 * norm2(x0));
}

TEST_CASE("forward and adjoint are linear") {
  std::mt19937_64 rng(41);
  Trajectory t = random_traj(rng, 4, 13);
  GriddingPlan plan(t, 16);
  CArray x = hrt::random_carray({16, 16}, rng);
  CArray y = hrt::random_carray({16, 16}, rng);
  const cplx a(1.3, 0.2), b(-0.5, 0.9);
  CArray combo({16, 16});
  for (int64_t i = 0; i < combo.numel(); ++i) combo[i] = a * x[i] + b * y[i];
  CArray lhs = plan.forward(combo);
  CArray sx = plan.forward(x), sy = plan.forward(y);
  for (int64_t i = 0; i < lhs.numel(); ++i) CHECK(std::abs(lhs[i] - (a * sx[i] + b * sy[i])) < 1e-10);
}

TEST_CASE("plan rejects mismatched shapes") {
  std::mt19937_64 rng(42);
  Trajectory t = random_traj(rng, 4, 13);
  GriddingPlan plan(t, 16);
  CHECK_THROWS_AS(plan.forward(CArray({8, 8})), std::invalid_argument);
  CHECK_THROWS_AS(plan.adjoint(CArray({4, 12})), std::invalid_argument);
}
