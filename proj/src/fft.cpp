#include "hr/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace hr {

namespace {
// FFTW's planner is not thread-safe; execution of a plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void fft2_raw(cplx* data, int64_t n0, int64_t n1, int sign) {
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(n0), static_cast<int>(n1),
                            reinterpret_cast<fftw_complex*>(data),
                            reinterpret_cast<fftw_complex*>(data),
                            sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
}

namespace {

// Centered <-> raw index shuffle plus unitary scaling shared by both
// directions. For even n, fftshift and ifftshift coincide (shift by n/2).
CArray centered_fft_impl(const CArray& in, int sign) {
  if (in.ndim() != 2) throw std::invalid_argument("fft2_centered: need 2D array, got " + shape_str(in.shape()));
  const int64_t n0 = in.dim(0), n1 = in.dim(1);
  CArray buf({n0, n1});
  for (int64_t i = 0; i < n0; ++i) {
    int64_t si = (i + n0 / 2) % n0;
    for (int64_t j = 0; j < n1; ++j) buf.at(si, (j + n1 / 2) % n1) = in.at(i, j);
  }
  fft2_raw(buf.data(), n0, n1, sign);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n0 * n1));
  CArray out({n0, n1});
  for (int64_t i = 0; i < n0; ++i) {
    int64_t si = (i + n0 / 2) % n0;
    for (int64_t j = 0; j < n1; ++j) out.at(i, j) = buf.at(si, (j + n1 / 2) % n1) * scale;
  }
  return out;
}

}  // namespace

CArray fft2_centered(const CArray& img) { return centered_fft_impl(img, -1); }
CArray ifft2_centered(const CArray& ksp) { return centered_fft_impl(ksp, +1); }

}  // namespace hr
