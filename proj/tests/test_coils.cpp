#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>

#include "doctest.h"
#include "hr/coils.hpp"
#include "test_util.hpp"

using namespace hr;

TEST_CASE("single coil degenerates to the constant unit map") {
  CArray maps = gen_coil_sensitivities(1, 24, 3);
  for (const cplx& v : maps.vec()) CHECK(std::abs(v - cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("generated maps are RSS-normalized everywhere") {
  CArray maps = gen_coil_sensitivities(5, 32, 11);
  const int64_t npix = 32 * 32;
  for (int64_t i = 0; i < npix; ++i) {
    double s = 0;
    for (int64_t c = 0; c < 5; ++c) s += std::norm(maps[c * npix + i]);
    CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-12);
  }
}

TEST_CASE("generation is deterministic under a fixed seed") {
  CArray a = gen_coil_sensitivities(4, 16, 42);
  CArray b = gen_coil_sensitivities(4, 16, 42);
  CHECK(std::memcmp(a.data(), b.data(), sizeof(cplx) * a.numel()) == 0);
  CArray c = gen_coil_sensitivities(4, 16, 43);
  bool any_diff = false;
  for (int64_t i = 0; i < a.numel(); ++i) any_diff |= a[i] != c[i];
  CHECK(any_diff);
}

TEST_CASE("estimation recovers generated maps inside the support") {
  const int m = 32;
  CArray maps = gen_coil_sensitivities(4, m, 7);
  // real nonnegative object so object phase does not enter the estimate
  CArray obj({m, m});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < m; ++j) {
      double y = (i - m / 2) / (0.36 * m), x = (j - m / 2) / (0.36 * m);
      obj.at(i, j) = std::exp(-(x * x + y * y));
    }
  Trajectory t = gen_spiral(64, 52, m);
  GriddingPlan plan(t, m);
  RArray unit = RArray::full({t.readout_count, t.samples_per_readout}, 1.0);
  CArray kspace = encode(obj, maps, plan, unit);

  CArray est = estimate_sensitivities(kspace, t, m);
  // compare inside a generous object support, allow one global phase per coil
  const int64_t npix = m * m;
  for (int64_t c = 0; c < 4; ++c) {
    cplx align = 0;
    double err = 0, ref = 0;
    std::vector<int64_t> pix;
    for (int64_t i = 0; i < npix; ++i)
      if (std::abs(obj[i]) > 0.5 && std::abs(est[c * npix + i]) > 0) pix.push_back(i);
    REQUIRE(pix.size() > 20);
    for (int64_t i : pix) align += std::conj(est[c * npix + i]) * maps[c * npix + i];
    align /= std::abs(align);
    for (int64_t i : pix) {
      err += std::norm(est[c * npix + i] * align - maps[c * npix + i]);
      ref += std::norm(maps[c * npix + i]);
    }
    CHECK(std::sqrt(err / ref) < 0.05);
  }
}

TEST_CASE("estimate of single-coil data is one on support") {
  const int m = 24;
  CArray maps = CArray::full({1, m, m}, cplx(1.0, 0.0));
  CArray obj = hrt::smooth_phantom_image(m);
  for (cplx& v : obj.vec()) v = std::abs(v);  // zero-phase object
  Trajectory t = gen_spiral(40, 40, m);
  GriddingPlan plan(t, m);
  RArray unit = RArray::full({t.readout_count, t.samples_per_readout}, 1.0);
  CArray kspace = encode(obj, maps, plan, unit);
  CArray est = estimate_sensitivities(kspace, t, m);
  int64_t on_support = 0;
  for (const cplx& v : est.vec())
    if (v != cplx(0.0, 0.0)) {
      CHECK(std::abs(v - cplx(1.0, 0.0)) < 1e-6);
      ++on_support;
    }
  CHECK(on_support > 0);
}

TEST_CASE("estimated maps have unit RSS on support") {
  const int m = 24;
  CArray maps = gen_coil_sensitivities(3, m, 5);
  CArray obj = hrt::smooth_phantom_image(m);
  Trajectory t = gen_spiral(40, 40, m);
  GriddingPlan plan(t, m);
  RArray unit = RArray::full({t.readout_count, t.samples_per_readout}, 1.0);
  CArray est = estimate_sensitivities(encode(obj, maps, plan, unit), t, m);
  const int64_t npix = m * m;
  for (int64_t i = 0; i < npix; ++i) {
    double s = 0;
    for (int64_t c = 0; c < 3; ++c) s += std::norm(est[c * npix + i]);
    if (s > 0) CHECK(std::abs(std::sqrt(s) - 1.0) < 1e-6);
  }
}

TEST_CASE("estimation is scale-invariant up to a global phase") {
  const int m = 24;
  CArray maps = gen_coil_sensitivities(3, m, 9);
  CArray obj = hrt::smooth_phantom_image(m);
  Trajectory t = gen_spiral(40, 40, m);
  GriddingPlan plan(t, m);
  RArray unit = RArray::full({t.readout_count, t.samples_per_readout}, 1.0);
  CArray k1 = encode(obj, maps, plan, unit);
  CArray k2 = k1;
  const cplx scale = cplx(0.3, -1.7);
  for (cplx& v : k2.vec()) v *= scale;
  CArray e1 = estimate_sensitivities(k1, t, m);
  CArray e2 = estimate_sensitivities(k2, t, m);
  const cplx phase = scale / std::abs(scale);
  for (int64_t i = 0; i < e1.numel(); ++i) CHECK(std::abs(e2[i] - e1[i] * phase) < 1e-9);
}

TEST_CASE("all-zero data rejected") {
  const int m = 16;
  Trajectory t = gen_spiral(8, 20, m);
  CArray z({2, 8, 20});
  CHECK_THROWS_AS(estimate_sensitivities(z, t, m), std::invalid_argument);
}

TEST_CASE("coil combine: identity for a single unit coil") {
  std::mt19937_64 rng(51);
  CArray img = hrt::random_carray({1, 8, 8}, rng);
  CArray maps = CArray::full({1, 8, 8}, cplx(1.0, 0.0));
  CArray out = coil_combine(img, maps);
  for (int64_t i = 0; i < out.numel(); ++i) CHECK(out[i] == img[i]);
}

TEST_CASE("coil combine: exact recovery of coil-weighted truth") {
  std::mt19937_64 rng(52);
  CArray maps = gen_coil_sensitivities(4, 16, 1);
  CArray x = hrt::random_carray({16, 16}, rng);
  CArray combined = coil_combine(coil_expand(x, maps), maps);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(std::abs(combined[i] - x[i]) < 1e-12);
}

TEST_CASE("combine is the adjoint of expansion") {
  std::mt19937_64 rng(53);
  CArray maps = gen_coil_sensitivities(3, 12, 2);
  CArray x = hrt::random_carray({12, 12}, rng);
  CArray y = hrt::random_carray({3, 12, 12}, rng);
  cplx lhs = cdot(coil_expand(x, maps), y);
  cplx rhs = cdot(x, coil_combine(y, maps));
  CHECK(std::abs(lhs - rhs) < 1e-12 * norm2(x) * norm2(y));
}

TEST_CASE("combine rejects shape mismatches") {
  CArray imgs({2, 8, 8});
  CArray maps({3, 8, 8});
  CHECK_THROWS_AS(coil_combine(imgs, maps), std::invalid_argument);
}
