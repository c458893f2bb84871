#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>

#include "doctest.h"
#include "hr/nufft.hpp"
#include "hr/trajectories.hpp"
#include "test_util.hpp"

using namespace hr;

namespace {
constexpr double kPi = 3.14159265358979323846;

double deg_mod(double deg, double modulus) {
  double m = std::fmod(deg, modulus);
  if (m < 0) m += modulus;
  return m;
}
}  // namespace

TEST_CASE("spiral: 80 interleaves rotate in 4.5 degree steps") {
  Trajectory t = gen_spiral(80, 64, 48);
  CHECK(t.readout_count == 80);
  const int64_t j = 40;  // any nonzero sample
  double a0 = std::atan2(t.ky[static_cast<size_t>(j)], t.kx[static_cast<size_t>(j)]);
  double a1 = std::atan2(t.ky[static_cast<size_t>(64 + j)], t.kx[static_cast<size_t>(64 + j)]);
  CHECK(deg_mod((a1 - a0) * 180.0 / kPi, 360.0) == doctest::Approx(4.5).epsilon(1e-9));
}

TEST_CASE("spiral: starts at k-space center, peaks at radius one half") {
  Trajectory t = gen_spiral(1, 128, 32);
  CHECK(t.kx[0] == 0.0);
  CHECK(t.ky[0] == 0.0);
  double rmax = 0;
  for (int64_t i = 0; i < t.sample_count(); ++i)
    rmax = std::max(rmax, std::hypot(t.kx[static_cast<size_t>(i)], t.ky[static_cast<size_t>(i)]));
  CHECK(std::abs(rmax - 0.5) < 1e-12);
}

TEST_CASE("golden radial: spoke counts and golden-angle increment") {
  Trajectory t = gen_golden_radial(48, 17, 64, 4);
  CHECK(t.readout_count == 816);
  // angle between successive spokes, mod 180
  auto spoke_angle_deg = [&](int64_t n) {
    const size_t last = static_cast<size_t>(n * 64 + 63);
    return std::atan2(t.ky[last], t.kx[last]) * 180.0 / kPi;
  };
  double d = deg_mod(spoke_angle_deg(1) - spoke_angle_deg(0), 180.0);
  CHECK(d == doctest::Approx(111.246).epsilon(1e-5));
  // center sample of every spoke is exactly the origin
  for (int64_t n = 0; n < t.readout_count; ++n) {
    const size_t c = static_cast<size_t>(n * 64 + 32);
    CHECK(t.kx[c] == 0.0);
    CHECK(t.ky[c] == 0.0);
  }
  // frame binning: 48 spokes per repetition in groups of 4 -> 12 frames
  CHECK(t.frame_count() == 12);
  CHECK(t.frame_of(0) == 0);
  CHECK(t.frame_of(47) == 11);
  CHECK(t.frame_of(48) == 0);  // next repetition restarts the frame cycle
}

TEST_CASE("golden radial: angle set invariant under recomputation") {
  Trajectory a = gen_golden_radial(24, 3, 32);
  Trajectory b = gen_golden_radial(24, 3, 32);
  for (int64_t n = 0; n < a.readout_count; ++n) {
    const size_t last = static_cast<size_t>((n + 1) * 32 - 1);
    double aa = deg_mod(std::atan2(a.ky[last], a.kx[last]) * 180.0 / kPi, 180.0);
    double ab = deg_mod(std::atan2(b.ky[last], b.kx[last]) * 180.0 / kPi, 180.0);
    CHECK(std::abs(aa - ab) < 1e-9);
  }
}

TEST_CASE("every generated coordinate lies in [-0.5, 0.5]^2") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<int64_t> ri(1, 40), rs(1, 5), rsamp(1, 40);
    Trajectory t;
    if (trial % 2 == 0) {
      t = gen_spiral(ri(rng), 2 * rsamp(rng) + 2, 16 + 2 * static_cast<int>(ri(rng)));
    } else {
      t = gen_golden_radial(ri(rng), rs(rng), 2 * rsamp(rng) + 2);
    }
    for (int64_t i = 0; i < t.sample_count(); ++i) {
      CHECK(std::abs(t.kx[static_cast<size_t>(i)]) <= 0.5 + 1e-15);
      CHECK(std::abs(t.ky[static_cast<size_t>(i)]) <= 0.5 + 1e-15);
    }
  }
}

TEST_CASE("radial dcf: ramp proportionality and nonnegativity") {
  Trajectory t = gen_golden_radial(32, 1, 64);
  DensityCompensation w = density_compensation(t);
  // |k| = 0.25 at sample 48, |k| = 0.125 at sample 40 along each spoke
  CHECK(std::hypot(t.kx[48], t.ky[48]) == doctest::Approx(0.25));
  CHECK(std::hypot(t.kx[40], t.ky[40]) == doctest::Approx(0.125));
  CHECK(w.at(0, 48) / w.at(0, 40) == doctest::Approx(2.0).epsilon(1e-12));
  for (double v : w.vec()) CHECK(v >= 0.0);
}

TEST_CASE("dcf: degenerate trajectory rejected") {
  Trajectory t;
  t.kind = TrajKind::radial;
  t.readout_count = 2;
  t.samples_per_readout = 2;
  t.kx = {0.1, 0.1, 0.1, 0.1};
  t.ky = {0.2, 0.2, 0.2, 0.2};
  CHECK_THROWS_AS(density_compensation(t), std::invalid_argument);
}

TEST_CASE("spiral dcf: fully sampled NUFFT round trip under 1% NMSE") {
  const int m = 32;
  Trajectory t = gen_spiral(48, 52, m);
  DensityCompensation w = density_compensation(t, m);
  GriddingPlan plan(t, m);
  CArray x = hrt::smooth_phantom_image(m);
  CArray y = plan.forward(x);
  CArray back = plan.adjoint(y, &w);
  CHECK(hrt::nmse_c(back, x) < 0.01);
}

TEST_CASE("voronoi-raster dcf validates the analytic spiral weights") {
  const int m = 32;
  Trajectory t = gen_spiral(48, 52, m);
  DensityCompensation w = density_compensation(t, m, DcfMethod::voronoi_raster);
  GriddingPlan plan(t, m);
  CArray x = hrt::smooth_phantom_image(m);
  CArray back = plan.adjoint(plan.forward(x), &w);
  CHECK(hrt::nmse_c(back, x) < 0.02);
  for (double v : w.vec()) CHECK(v >= 0.0);
}

TEST_CASE("undersample: spiral interleaf budgets from the acceleration rate") {
  Trajectory t = gen_spiral(80, 16, 48);
  CHECK(keep_strided(80, 2).size() == 40);
  CHECK(keep_strided(80, 3).size() == 27);
  Trajectory r3 = undersample(t, keep_strided(80, 3));
  CHECK(r3.readout_count == 27);
}

TEST_CASE("undersample: keep-all is the identity on data") {
  std::mt19937_64 rng(22);
  CArray data = hrt::random_carray({3, 8, 6}, rng);
  std::vector<int64_t> all{0, 1, 2, 3, 4, 5, 6, 7};
  CArray out = undersample(data, all);
  REQUIRE(out.shape() == data.shape());
  for (int64_t i = 0; i < out.numel(); ++i) CHECK(out[i] == data[i]);
}

TEST_CASE("undersample: composition matches relabelled intersection") {
  std::mt19937_64 rng(23);
  CArray data = hrt::random_carray({2, 12, 4}, rng);
  std::vector<int64_t> a{0, 2, 4, 6, 8, 10};          // readouts kept first
  std::vector<int64_t> b{1, 2, 4};                    // indices into a
  CArray two_step = undersample(undersample(data, a), b);
  std::vector<int64_t> combined;
  for (int64_t i : b) combined.push_back(a[static_cast<size_t>(i)]);
  CArray one_step = undersample(data, combined);
  REQUIRE(two_step.shape() == one_step.shape());
  for (int64_t i = 0; i < two_step.numel(); ++i) CHECK(two_step[i] == one_step[i]);
}

TEST_CASE("undersample: empty or invalid keep sets rejected") {
  Trajectory t = gen_spiral(8, 16, 16);
  CHECK_THROWS_AS(undersample(t, {}), std::invalid_argument);
  CHECK_THROWS_AS(undersample(t, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(undersample(t, {7, 8}), std::invalid_argument);
}

TEST_CASE("keep_first_repetitions keeps whole leading repetitions") {
  auto keep = keep_first_repetitions(48, 17, 3);
  CHECK(keep.size() == 144);
  CHECK(keep.front() == 0);
  CHECK(keep.back() == 143);
}
