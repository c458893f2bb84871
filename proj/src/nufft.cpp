#include "hr/nufft.hpp"

#include <cmath>

#include "hr/fft.hpp"

namespace hr {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kLutSize = 10000;

double bessel_i0(double x) {
  const double ax = std::abs(x);
  if (ax < 3.75) {
    double y = x / 3.75;
    y *= y;
    return 1.0 + y * (3.5156229 + y * (3.0899424 + y * (1.2067492 +
                 y * (0.2659732 + y * (0.360768e-1 + y * 0.45813e-2)))));
  }
  const double y = 3.75 / ax;
  return (std::exp(ax) / std::sqrt(ax)) *
         (0.39894228 + y * (0.1328592e-1 + y * (0.225319e-2 + y * (-0.157565e-2 +
          y * (0.916281e-2 + y * (-0.2057706e-1 + y * (0.2635537e-1 +
          y * (-0.1647633e-1 + y * 0.392377e-2))))))));
}

// Fourier transform of the width-W Kaiser-Bessel kernel (normalized to
// kb(0)=1), evaluated at nu cycles per grid cell.
double kb_transform(double nu, double beta, int width) {
  const double a = kPi * width * nu;
  const double arg = beta * beta - a * a;
  double core;
  if (arg > 0) {
    const double s = std::sqrt(arg);
    core = std::sinh(s) / s;
  } else if (arg < 0) {
    const double s = std::sqrt(-arg);
    core = std::sin(s) / s;
  } else {
    core = 1.0;
  }
  return static_cast<double>(width) * core / bessel_i0(beta);
}

}  // namespace

GriddingPlan::GriddingPlan(const Trajectory& traj, int matrix_size, double oversampling,
                           int kernel_width) {
  if (matrix_size < 2) throw std::invalid_argument("GriddingPlan: matrix_size must be >= 2");
  if (oversampling < 1.0) throw std::invalid_argument("GriddingPlan: oversampling must be >= 1");
  if (kernel_width < 2) throw std::invalid_argument("GriddingPlan: kernel width must be >= 2");
  matrix_ = matrix_size;
  grid_ = static_cast<int>(std::lround(oversampling * matrix_size));
  if (grid_ % 2 != 0) ++grid_;
  width_ = kernel_width;
  readouts_ = traj.readout_count;
  samples_per_readout_ = traj.samples_per_readout;

  const double w_over_os = static_cast<double>(width_) / oversampling;
  beta_ = kPi * std::sqrt(w_over_os * w_over_os * (oversampling - 0.5) * (oversampling - 0.5) - 0.8);

  lut_.resize(kLutSize + 1);
  const double half = width_ / 2.0;
  const double i0b = bessel_i0(beta_);
  for (int i = 0; i <= kLutSize; ++i) {
    const double t = half * static_cast<double>(i) / kLutSize;
    const double u = 1.0 - (t / half) * (t / half);
    lut_[static_cast<size_t>(i)] = bessel_i0(beta_ * std::sqrt(std::max(0.0, u))) / i0b;
  }

  deapod_.resize(static_cast<size_t>(matrix_));
  for (int u = 0; u < matrix_; ++u) {
    const double nu = static_cast<double>(u - matrix_ / 2) / grid_;
    const double ft = kb_transform(nu, beta_, width_);
    if (ft <= 0) throw std::runtime_error("GriddingPlan: non-positive deapodization value");
    deapod_[static_cast<size_t>(u)] = 1.0 / ft;
  }

  const int64_t n = traj.sample_count();
  p0_.resize(static_cast<size_t>(n));
  p1_.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    p0_[static_cast<size_t>(i)] = traj.ky[static_cast<size_t>(i)] * grid_;
    p1_[static_cast<size_t>(i)] = traj.kx[static_cast<size_t>(i)] * grid_;
  }
}

double GriddingPlan::kernel(double t) const {
  const double half = width_ / 2.0;
  const double a = std::abs(t);
  if (a >= half) return 0.0;
  const double pos = a / half * kLutSize;
  const int i = static_cast<int>(pos);
  const double frac = pos - i;
  return lut_[static_cast<size_t>(i)] * (1.0 - frac) + lut_[static_cast<size_t>(i + 1)] * frac;
}

CArray GriddingPlan::forward(const CArray& image) const {
  if (image.ndim() != 2 || image.dim(0) != matrix_ || image.dim(1) != matrix_)
    throw std::invalid_argument("nufft_forward: image " + shape_str(image.shape()) +
                                " does not match plan matrix " + std::to_string(matrix_));
  const int g = grid_;
  CArray buf({g, g});
  for (int u0 = 0; u0 < matrix_; ++u0) {
    const int c0 = (u0 - matrix_ / 2 + g) % g;
    for (int u1 = 0; u1 < matrix_; ++u1) {
      const int c1 = (u1 - matrix_ / 2 + g) % g;
      buf.at(c0, c1) = image.at(u0, u1) * (deapod_[static_cast<size_t>(u0)] * deapod_[static_cast<size_t>(u1)]);
    }
  }
  fft2_raw(buf.data(), g, g, -1);

  CArray out({readouts_, samples_per_readout_});
  const double half = width_ / 2.0;
  for (int64_t j = 0; j < sample_count(); ++j) {
    const double q0 = p0_[static_cast<size_t>(j)], q1 = p1_[static_cast<size_t>(j)];
    const int lo0 = static_cast<int>(std::ceil(q0 - half)), hi0 = static_cast<int>(std::floor(q0 + half));
    const int lo1 = static_cast<int>(std::ceil(q1 - half)), hi1 = static_cast<int>(std::floor(q1 + half));
    cplx acc = 0;
    for (int i0 = lo0; i0 <= hi0; ++i0) {
      const double k0 = kernel(q0 - i0);
      if (k0 == 0.0) continue;
      const int w0 = ((i0 % g) + g) % g;
      for (int i1 = lo1; i1 <= hi1; ++i1) {
        const double k1 = kernel(q1 - i1);
        if (k1 == 0.0) continue;
        acc += buf.at(w0, ((i1 % g) + g) % g) * (k0 * k1);
      }
    }
    out[j] = acc;
  }
  return out;
}

CArray GriddingPlan::adjoint(const CArray& samples, const RArray* weights) const {
  if (samples.ndim() != 2 || samples.dim(0) != readouts_ || samples.dim(1) != samples_per_readout_)
    throw std::invalid_argument("nufft_adjoint: samples " + shape_str(samples.shape()) +
                                " do not match plan trajectory [" + std::to_string(readouts_) + "," +
                                std::to_string(samples_per_readout_) + "]");
  if (weights && (weights->ndim() != 2 || weights->dim(0) != readouts_ || weights->dim(1) != samples_per_readout_))
    throw std::invalid_argument("nufft_adjoint: weights shape mismatch");
  const int g = grid_;
  CArray buf({g, g});
  const double half = width_ / 2.0;
  for (int64_t j = 0; j < sample_count(); ++j) {
    cplx v = samples[j];
    if (weights) v *= (*weights)[j];
    if (v == cplx(0.0, 0.0)) continue;
    const double q0 = p0_[static_cast<size_t>(j)], q1 = p1_[static_cast<size_t>(j)];
    const int lo0 = static_cast<int>(std::ceil(q0 - half)), hi0 = static_cast<int>(std::floor(q0 + half));
    const int lo1 = static_cast<int>(std::ceil(q1 - half)), hi1 = static_cast<int>(std::floor(q1 + half));
    for (int i0 = lo0; i0 <= hi0; ++i0) {
      const double k0 = kernel(q0 - i0);
      if (k0 == 0.0) continue;
      const int w0 = ((i0 % g) + g) % g;
      for (int i1 = lo1; i1 <= hi1; ++i1) {
        const double k1 = kernel(q1 - i1);
        if (k1 == 0.0) continue;
        buf.at(w0, ((i1 % g) + g) % g) += v * (k0 * k1);
      }
    }
  }
  fft2_raw(buf.data(), g, g, +1);

  CArray out({matrix_, matrix_});
  for (int u0 = 0; u0 < matrix_; ++u0) {
    const int c0 = (u0 - matrix_ / 2 + g) % g;
    for (int u1 = 0; u1 < matrix_; ++u1) {
      const int c1 = (u1 - matrix_ / 2 + g) % g;
      out.at(u0, u1) = buf.at(c0, c1) * (deapod_[static_cast<size_t>(u0)] * deapod_[static_cast<size_t>(u1)]);
    }
  }
  return out;
}

CArray dft_oracle(const CArray& image, const Trajectory& traj) {
  if (image.ndim() != 2) throw std::invalid_argument("dft_oracle: image must be 2D");
  const int64_t m0 = image.dim(0), m1 = image.dim(1);
  CArray out({traj.readout_count, traj.samples_per_readout});
  for (int64_t j = 0; j < traj.sample_count(); ++j) {
    const double ky = traj.ky[static_cast<size_t>(j)], kx = traj.kx[static_cast<size_t>(j)];
    cplx acc = 0;
    for (int64_t u0 = 0; u0 < m0; ++u0) {
      const double f0 = ky * static_cast<double>(u0 - m0 / 2);
      for (int64_t u1 = 0; u1 < m1; ++u1) {
        const double f1 = kx * static_cast<double>(u1 - m1 / 2);
        acc += image.at(u0, u1) * std::polar(1.0, -2.0 * kPi * (f0 + f1));
      }
    }
    out[j] = acc;
  }
  return out;
}

CArray encode(const CArray& image, const CArray& coils, const GriddingPlan& plan,
              const RArray& weights) {
  if (coils.ndim() != 3 || image.ndim() != 2 || coils.dim(1) != image.dim(0) || coils.dim(2) != image.dim(1))
    throw std::invalid_argument("encode: coil maps " + shape_str(coils.shape()) +
                                " incompatible with image " + shape_str(image.shape()));
  const int64_t ncoils = coils.dim(0);
  CArray out({ncoils, plan.readout_count(), plan.samples_per_readout()});
  const int64_t npix = image.numel();
  const int64_t nsamp = plan.sample_count();
  CArray weighted({image.dim(0), image.dim(1)});
  for (int64_t c = 0; c < ncoils; ++c) {
    for (int64_t i = 0; i < npix; ++i) weighted[i] = coils[c * npix + i] * image[i];
    CArray s = plan.forward(weighted);
    for (int64_t j = 0; j < nsamp; ++j) out[c * nsamp + j] = s[j] * std::sqrt(weights[j]);
  }
  return out;
}

CArray encode_adjoint(const CArray& samples, const CArray& coils, const GriddingPlan& plan,
                      const RArray& weights) {
  if (samples.ndim() != 3 || coils.ndim() != 3 || samples.dim(0) != coils.dim(0))
    throw std::invalid_argument("encode_adjoint: coil count mismatch, samples " +
                                shape_str(samples.shape()) + " vs maps " + shape_str(coils.shape()));
  const int64_t ncoils = coils.dim(0);
  const int64_t nsamp = plan.sample_count();
  const int64_t npix = coils.dim(1) * coils.dim(2);
  CArray out({coils.dim(1), coils.dim(2)});
  CArray s({plan.readout_count(), plan.samples_per_readout()});
  for (int64_t c = 0; c < ncoils; ++c) {
    for (int64_t j = 0; j < nsamp; ++j) s[j] = samples[c * nsamp + j] * std::sqrt(weights[j]);
    CArray img = plan.adjoint(s);
    for (int64_t i = 0; i < npix; ++i) out[i] += std::conj(coils[c * npix + i]) * img[i];
  }
  return out;
}

}  // namespace hr
