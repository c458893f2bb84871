#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>

#include "doctest.h"
#include "hr/fitting.hpp"
#include "hr/phantom.hpp"
#include "hr/subspace.hpp"
#include "test_util.hpp"

using namespace hr;

TEST_CASE("empty region list gives the zero image") {
  PhantomSpec spec;
  spec.matrix = 16;
  CArray img = gen_static_phantom(spec);
  for (const cplx& v : img.vec()) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("pixel sums of disjoint ellipses match analytic areas") {
  PhantomSpec spec;
  spec.matrix = 64;
  spec.phase_amplitude = 0.0;
  spec.regions.push_back({-12, -12, 8, 5, 0, 1.0, 800});
  spec.regions.push_back({12, 12, 6, 9, 30, 0.5, 800});
  CArray img = gen_static_phantom(spec);
  double total = 0;
  for (const cplx& v : img.vec()) total += v.real();
  const double pi = 3.14159265358979323846;
  const double analytic = 1.0 * pi * 8 * 5 + 0.5 * pi * 6 * 9;
  // discretization error bounded by ~2 pixels of boundary length
  const double slack = 2.0 * (2 * pi * 8 * 1.0 + 2 * pi * 9 * 0.5);
  CHECK(std::abs(total - analytic) < slack);
  CHECK(std::abs(total - analytic) / analytic < 0.05);
}

TEST_CASE("fixed seed reproduces the phantom bitwise") {
  PhantomSpec a = lung_phantom_spec(32, 5);
  PhantomSpec b = lung_phantom_spec(32, 5);
  CArray ia = gen_static_phantom(a), ib = gen_static_phantom(b);
  CHECK(std::memcmp(ia.data(), ib.data(), sizeof(cplx) * ia.numel()) == 0);
  CArray ic = gen_static_phantom(lung_phantom_spec(32, 6));
  bool differ = false;
  for (int64_t i = 0; i < ia.numel(); ++i) differ |= ia[i] != ic[i];
  CHECK(differ);
}

TEST_CASE("IR series: noiseless interior pixels fit back to the true T1") {
  PhantomSpec spec = brain_phantom_spec(32, 3);
  std::vector<double> times;
  for (int i = 0; i < 16; ++i) times.push_back((i + 0.5) * 5000.0 / 16);
  IrSeries s = gen_ir_series(spec, times, 5.0, 8.0);
  int64_t checked = 0;
  for (int64_t i = 0; i < 32; ++i)
    for (int64_t j = 0; j < 32; ++j) {
      if (s.interior.at(i, j) == 0.0 || s.t1_map.at(i, j) <= 0) continue;
      if ((i * 32 + j) % 17 != 0) continue;  // subsample for speed
      std::vector<double> curve(16);
      for (int64_t t = 0; t < 16; ++t) curve[static_cast<size_t>(t)] = s.frames.at(t, i, j).real();
      LmFitResult r = lm_fit(curve, times);
      CHECK(std::abs(t1_from_params(r.params) - s.t1_map.at(i, j)) / s.t1_map.at(i, j) < 1e-3);
      ++checked;
    }
  CHECK(checked > 10);
}

TEST_CASE("IR series frame at t ~ 0 approaches A - B per pixel") {
  PhantomSpec spec;
  spec.matrix = 16;
  spec.regions.push_back({0, 0, 6, 6, 0, 1.0, 1000});
  std::vector<double> times{1e-9, 500, 1500, 3000};
  IrSeries s = gen_ir_series(spec, times, 5.0, 8.0);
  ModelParams p = look_locker_params(1000, 5.0, 8.0, 1.0);
  CHECK(s.frames.at(0, 8, 8).real() == doctest::Approx(p.a - p.b).epsilon(1e-9));
}

TEST_CASE("IR series lies exactly in the span of a complete basis") {
  // with T time points, signals from N distinct T1 values live in a rank-N
  // subspace; a K=T basis reproduces the series exactly
  PhantomSpec spec = brain_phantom_spec(24, 9);
  std::vector<double> times;
  for (int i = 0; i < 8; ++i) times.push_back((i + 0.5) * 5000.0 / 8);
  IrSeries s = gen_ir_series(spec, times, 5.0, 8.0);
  // complete basis from the same four T1 values plus padding atoms
  std::vector<double> grid{800, 1000, 1200, 1400, 1600, 1800, 2000, 2200};
  SignalDictionary d = build_dictionary(grid, times, 5.0, 8.0);
  TemporalBasis full = extract_basis(d, 8);
  CArray back = expand(compress(s.frames, full), full);
  for (int64_t i = 0; i < back.numel(); ++i) CHECK(std::abs(back[i] - s.frames[i]) < 1e-9);
}

TEST_CASE("rejects non-positive region T1") {
  PhantomSpec spec;
  spec.matrix = 8;
  spec.regions.push_back({0, 0, 3, 3, 0, 1.0, 0.0});
  std::vector<double> times{10, 20, 30};
  CHECK_THROWS_AS(gen_ir_series(spec, times, 5.0, 8.0), std::invalid_argument);
}

TEST_CASE("noise: sigma zero is the identity") {
  std::mt19937_64 rng(141);
  CArray x = hrt::random_carray({3, 5, 5}, rng);
  CArray y = add_complex_noise(x, 0.0, 7);
  CHECK(std::memcmp(x.data(), y.data(), sizeof(cplx) * x.numel()) == 0);
}

TEST_CASE("noise: empirical std within 1% of sigma over 1e6 samples") {
  CArray zeros({1000, 1000});
  CArray noisy = add_complex_noise(zeros, 0.37, 11);
  double s2 = 0;
  for (const cplx& v : noisy.vec()) s2 += std::norm(v);
  const double est = std::sqrt(s2 / (2.0 * static_cast<double>(noisy.numel())));
  CHECK(std::abs(est - 0.37) / 0.37 < 0.01);
}

TEST_CASE("noise: independent seeds give uncorrelated realizations") {
  CArray zeros({400, 400});
  CArray a = add_complex_noise(zeros, 1.0, 21);
  CArray b = add_complex_noise(zeros, 1.0, 22);
  double sab = 0, saa = 0, sbb = 0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    sab += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    saa += std::norm(a[i]);
    sbb += std::norm(b[i]);
  }
  CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 0.01);
}

TEST_CASE("brain preset covers the evaluated T1 range") {
  PhantomSpec spec = brain_phantom_spec(48, 1);
  std::vector<double> seen;
  for (const auto& r : spec.regions) seen.push_back(r.t1_ms);
  for (double want : {800.0, 1200.0, 1600.0, 2000.0})
    CHECK(std::count(seen.begin(), seen.end(), want) == 1);
}
