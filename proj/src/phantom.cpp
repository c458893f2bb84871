#include "hr/phantom.hpp"

#include <cmath>
#include <random>

#include "hr/fitting.hpp"

namespace hr {

namespace {

constexpr int kSuper = 3;  // supersampling per axis

bool inside(const EllipseRegion& e, double y, double x) {
  const double a = e.angle_deg * 3.14159265358979323846 / 180.0;
  const double dy = y - e.cy, dx = x - e.cx;
  const double ry = std::cos(a) * dy - std::sin(a) * dx;
  const double rx = std::sin(a) * dy + std::cos(a) * dx;
  return (ry / e.ry) * (ry / e.ry) + (rx / e.rx) * (rx / e.rx) <= 1.0;
}

// topmost region covering the point, -1 for background
int region_at(const PhantomSpec& spec, double y, double x) {
  for (int r = static_cast<int>(spec.regions.size()) - 1; r >= 0; --r)
    if (inside(spec.regions[static_cast<size_t>(r)], y, x)) return r;
  return -1;
}

RArray smooth_phase(const PhantomSpec& spec) {
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
  const int m = spec.matrix;
  RArray ph({m, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double y = 2.0 * (i - m / 2) / m, x = 2.0 * (j - m / 2) / m;
      ph.at(i, j) = spec.phase_amplitude * (a * y + b * x + c * y * x + d * (y * y - x * x));
    }
  return ph;
}

}  // namespace

CArray gen_static_phantom(const PhantomSpec& spec) {
  const int m = spec.matrix;
  if (m < 2) throw std::invalid_argument("gen_static_phantom: matrix too small");
  RArray mag({m, m});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double acc = 0;
      for (int sy = 0; sy < kSuper; ++sy)
        for (int sx = 0; sx < kSuper; ++sx) {
          const double y = i - m / 2 + (sy + 0.5) / kSuper - 0.5;
          const double x = j - m / 2 + (sx + 0.5) / kSuper - 0.5;
          const int r = region_at(spec, y, x);
          if (r >= 0) acc += spec.regions[static_cast<size_t>(r)].intensity;
        }
      mag.at(i, j) = acc / (kSuper * kSuper);
    }
  RArray ph = smooth_phase(spec);
  CArray out({m, m});
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::polar(mag[i], ph[i]);
  return out;
}

IrSeries gen_ir_series(const PhantomSpec& spec, const std::vector<double>& times_ms,
                       double flip_deg, double tr_ms) {
  const int m = spec.matrix;
  const int64_t t = static_cast<int64_t>(times_ms.size());
  for (const EllipseRegion& e : spec.regions)
    if (e.t1_ms <= 0) throw std::invalid_argument("gen_ir_series: every region needs a positive T1");
  IrSeries out;
  out.frames = CArray({t, m, m});
  out.t1_map = RArray({m, m});
  out.interior = RArray({m, m});
  std::vector<ModelParams> region_params;
  for (const EllipseRegion& e : spec.regions)
    region_params.push_back(look_locker_params(e.t1_ms, flip_deg, tr_ms, e.intensity));
  const int64_t npix = static_cast<int64_t>(m) * m;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      // supersampled region blend; interior pixels see exactly one region
      int first = -2;
      bool uniform = true;
      std::vector<double> acc(static_cast<size_t>(t), 0.0);
      for (int sy = 0; sy < kSuper; ++sy)
        for (int sx = 0; sx < kSuper; ++sx) {
          const double y = i - m / 2 + (sy + 0.5) / kSuper - 0.5;
          const double x = j - m / 2 + (sx + 0.5) / kSuper - 0.5;
          const int r = region_at(spec, y, x);
          if (first == -2) first = r;
          uniform &= (r == first);
          if (r >= 0)
            for (int64_t tt = 0; tt < t; ++tt)
              acc[static_cast<size_t>(tt)] +=
                  signal_model(region_params[static_cast<size_t>(r)], times_ms[static_cast<size_t>(tt)]);
        }
      for (int64_t tt = 0; tt < t; ++tt)
        out.frames[tt * npix + i * m + j] = acc[static_cast<size_t>(tt)] / (kSuper * kSuper);
      const int rc = region_at(spec, static_cast<double>(i - m / 2), static_cast<double>(j - m / 2));
      out.t1_map.at(i, j) = rc >= 0 ? spec.regions[static_cast<size_t>(rc)].t1_ms : 0.0;
      out.interior.at(i, j) = (uniform && first >= 0) ? 1.0 : 0.0;
    }
  return out;
}

CArray add_complex_noise(const CArray& data, double sigma, uint64_t seed) {
  if (sigma < 0) throw std::invalid_argument("add_complex_noise: sigma must be >= 0");
  CArray out = data;
  if (sigma == 0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  for (cplx& v : out.vec()) v += cplx(n(rng), n(rng));
  return out;
}

PhantomSpec lung_phantom_spec(int matrix, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> j(-0.04, 0.04);
  const double m = matrix;
  PhantomSpec spec;
  spec.matrix = matrix;
  spec.seed = seed;
  // torso
  spec.regions.push_back({j(rng) * m, j(rng) * m, 0.42 * m, 0.36 * m, 4 * j(rng) * 90, 0.72, 900});
  // lungs: low-intensity parenchyma
  spec.regions.push_back({(0.02 + j(rng)) * m, (-0.16 + j(rng)) * m, 0.26 * m, 0.13 * m, -8, 0.26, 1300});
  spec.regions.push_back({(0.02 + j(rng)) * m, (0.16 + j(rng)) * m, 0.26 * m, 0.13 * m, 8, 0.24, 1300});
  // mediastinum
  spec.regions.push_back({(0.10 + j(rng)) * m, j(rng) * m, 0.14 * m, 0.07 * m, 0, 0.85, 1100});
  // bright vessels inside the lungs
  for (int v = 0; v < 6; ++v) {
    const double side = v % 2 == 0 ? -0.16 : 0.16;
    spec.regions.push_back({(-0.12 + 0.07 * v / 2.0 + j(rng)) * m, (side + j(rng) * 0.5) * m,
                            0.022 * m, 0.022 * m, 0, 1.0 + 0.1 * j(rng) * 25, 1400});
  }
  return spec;
}

PhantomSpec brain_phantom_spec(int matrix, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> j(-0.03, 0.03);
  const double m = matrix;
  PhantomSpec spec;
  spec.matrix = matrix;
  spec.seed = seed;
  spec.phase_amplitude = 0.0;  // signed-magnitude recovery keeps the series real
  const double t1s[4] = {800, 1200, 1600, 2000};
  const double scale[4] = {0.42, 0.33, 0.24, 0.13};
  const double inten[4] = {0.9, 0.78, 0.86, 0.7};
  for (int r = 0; r < 4; ++r)
    spec.regions.push_back({j(rng) * 0.3 * m, j(rng) * 0.3 * m, scale[r] * m, (scale[r] - 0.02) * m,
                            10 * j(rng) * 30, inten[r] + 0.2 * j(rng), t1s[r]});
  return spec;
}

}  // namespace hr
