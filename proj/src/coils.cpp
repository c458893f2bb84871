#include "hr/coils.hpp"

#include <cmath>
#include <random>

#include "hr/fft.hpp"

namespace hr {

namespace {
constexpr double kPi = 3.14159265358979323846;

// divide per-coil images by their RSS; zero pixels below the support
// threshold; RSS over the result is exactly 1 on support
CArray rss_normalize(const CArray& imgs, double support_threshold) {
  const int64_t ncoils = imgs.dim(0), npix = imgs.numel() / imgs.dim(0);
  RArray rss({imgs.dim(1), imgs.dim(2)});
  for (int64_t i = 0; i < npix; ++i) {
    double s = 0;
    for (int64_t c = 0; c < ncoils; ++c) s += std::norm(imgs[c * npix + i]);
    rss[i] = std::sqrt(s);
  }
  double peak = 0;
  for (double v : rss.vec()) peak = std::max(peak, v);
  if (peak <= 0) throw std::invalid_argument("estimate_sensitivities: all-zero data");
  CArray maps(imgs.shape());
  for (int64_t i = 0; i < npix; ++i) {
    if (rss[i] < support_threshold * peak) continue;
    for (int64_t c = 0; c < ncoils; ++c) maps[c * npix + i] = imgs[c * npix + i] / rss[i];
  }
  return maps;
}
}  // namespace

CArray gen_coil_sensitivities(int64_t ncoils, int matrix_size, uint64_t seed) {
  if (ncoils < 1) throw std::invalid_argument("gen_coil_sensitivities: ncoils must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.08, 0.08);
  std::uniform_real_distribution<double> ph(-0.5, 0.5);
  const double m = matrix_size;
  const double ring = 0.62 * m;
  const double sigma = 0.75 * m;
  CArray maps({ncoils, matrix_size, matrix_size});
  const int64_t npix = static_cast<int64_t>(matrix_size) * matrix_size;
  for (int64_t c = 0; c < ncoils; ++c) {
    const double ang = 2.0 * kPi * (static_cast<double>(c) / static_cast<double>(ncoils) + jitter(rng));
    const double cy = ring * std::sin(ang), cx = ring * std::cos(ang);
    const double a1 = c == 0 ? 0.0 : ph(rng), a2 = c == 0 ? 0.0 : ph(rng);
    for (int64_t i = 0; i < matrix_size; ++i)
      for (int64_t j = 0; j < matrix_size; ++j) {
        const double y = static_cast<double>(i) - m / 2, x = static_cast<double>(j) - m / 2;
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        const double mag = std::exp(-d2 / (2.0 * sigma * sigma)) + 0.05;
        const double phase = (a1 * y + a2 * x) / m;
        maps[c * npix + i * matrix_size + j] = std::polar(mag, phase);
      }
  }
  return rss_normalize(maps, 0.0);
}

CArray estimate_sensitivities(const CArray& kspace, const Trajectory& traj, int matrix_size,
                              const SenseEstimateOptions& opts) {
  if (kspace.ndim() != 3 || kspace.dim(1) != traj.readout_count ||
      kspace.dim(2) != traj.samples_per_readout)
    throw std::invalid_argument("estimate_sensitivities: kspace " + shape_str(kspace.shape()) +
                                " does not match trajectory");
  const int64_t ncoils = kspace.dim(0);
  const double r0 = opts.center_radius_frac;  // of the full extent (1.0 cycles/pixel)
  DensityCompensation dcf = density_compensation(traj, matrix_size);
  RArray w({traj.readout_count, traj.samples_per_readout});
  for (int64_t i = 0; i < traj.sample_count(); ++i) {
    const double r = std::hypot(traj.kx[static_cast<size_t>(i)], traj.ky[static_cast<size_t>(i)]);
    w[i] = r < r0 ? dcf[i] * 0.5 * (1.0 + std::cos(kPi * r / r0)) : 0.0;
  }
  GriddingPlan plan(traj, matrix_size);
  CArray lowpass({ncoils, matrix_size, matrix_size});
  const int64_t nsamp = traj.sample_count();
  const int64_t npix = static_cast<int64_t>(matrix_size) * matrix_size;
  CArray s({traj.readout_count, traj.samples_per_readout});
  for (int64_t c = 0; c < ncoils; ++c) {
    for (int64_t j = 0; j < nsamp; ++j) s[j] = kspace[c * nsamp + j];
    CArray img = plan.adjoint(s, &w);
    for (int64_t i = 0; i < npix; ++i) lowpass[c * npix + i] = img[i];
  }
  return rss_normalize(lowpass, opts.support_threshold);
}

CArray estimate_sensitivities_cartesian(const CArray& kspace, const SenseEstimateOptions& opts) {
  if (kspace.ndim() != 3) throw std::invalid_argument("estimate_sensitivities_cartesian: need [C, M, M]");
  const int64_t ncoils = kspace.dim(0), m = kspace.dim(1);
  const double r0 = opts.center_radius_frac;  // of the full extent (1.0 cycles/pixel)
  CArray lowpass({ncoils, m, m});
  CArray buf({m, m});
  const int64_t npix = m * m;
  for (int64_t c = 0; c < ncoils; ++c) {
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < m; ++j) {
        const double ky = static_cast<double>(i - m / 2) / static_cast<double>(m);
        const double kx = static_cast<double>(j - m / 2) / static_cast<double>(m);
        const double r = std::hypot(kx, ky);
        buf.at(i, j) = r < r0 ? kspace[c * npix + i * m + j] * (0.5 * (1.0 + std::cos(kPi * r / r0))) : 0.0;
      }
    CArray img = ifft2_centered(buf);
    for (int64_t i = 0; i < npix; ++i) lowpass[c * npix + i] = img[i];
  }
  return rss_normalize(lowpass, opts.support_threshold);
}

CArray coil_combine(const CArray& images, const CArray& maps) {
  check_same_shape("coil_combine", images.shape(), maps.shape());
  if (images.ndim() != 3) throw std::invalid_argument("coil_combine: need [C, H, W]");
  const int64_t ncoils = images.dim(0), npix = images.dim(1) * images.dim(2);
  CArray out({images.dim(1), images.dim(2)});
  for (int64_t c = 0; c < ncoils; ++c)
    for (int64_t i = 0; i < npix; ++i) out[i] += std::conj(maps[c * npix + i]) * images[c * npix + i];
  return out;
}

CArray coil_expand(const CArray& image, const CArray& maps) {
  if (maps.ndim() != 3 || image.ndim() != 2 || maps.dim(1) != image.dim(0) || maps.dim(2) != image.dim(1))
    throw std::invalid_argument("coil_expand: image " + shape_str(image.shape()) +
                                " incompatible with maps " + shape_str(maps.shape()));
  const int64_t ncoils = maps.dim(0), npix = image.numel();
  CArray out(maps.shape());
  for (int64_t c = 0; c < ncoils; ++c)
    for (int64_t i = 0; i < npix; ++i) out[c * npix + i] = maps[c * npix + i] * image[i];
  return out;
}

}  // namespace hr
