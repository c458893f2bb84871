#include "hr/subspace.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>

#include "hr/fft.hpp"
#include "hr/fitting.hpp"

namespace hr {

SignalDictionary build_dictionary(const std::vector<double>& t1_grid_ms,
                                  const std::vector<double>& times_ms, double flip_deg,
                                  double tr_ms) {
  if (t1_grid_ms.empty() || times_ms.empty())
    throw std::invalid_argument("build_dictionary: empty grid or timing");
  for (size_t i = 0; i < t1_grid_ms.size(); ++i) {
    if (t1_grid_ms[i] <= 0) throw std::invalid_argument("build_dictionary: non-positive T1");
    if (i > 0 && t1_grid_ms[i] <= t1_grid_ms[i - 1])
      throw std::invalid_argument("build_dictionary: T1 grid must be sorted ascending");
  }
  for (size_t i = 1; i < times_ms.size(); ++i)
    if (times_ms[i] <= times_ms[i - 1]) throw std::invalid_argument("build_dictionary: times must increase");

  SignalDictionary d;
  d.t1_grid = t1_grid_ms;
  d.times = times_ms;
  d.flip_deg = flip_deg;
  d.tr_ms = tr_ms;
  const int64_t t = static_cast<int64_t>(times_ms.size());
  const int64_t n = static_cast<int64_t>(t1_grid_ms.size());
  d.atoms = RArray({t, n});
  for (int64_t a = 0; a < n; ++a) {
    ModelParams p = look_locker_params(t1_grid_ms[static_cast<size_t>(a)], flip_deg, tr_ms);
    for (int64_t i = 0; i < t; ++i) d.atoms.at(i, a) = signal_model(p, times_ms[static_cast<size_t>(i)]);
  }
  return d;
}

TemporalBasis extract_basis(const SignalDictionary& dict, int64_t k) {
  const int64_t t = dict.atoms.dim(0), n = dict.atoms.dim(1);
  if (k < 1 || k > std::min(t, n))
    throw std::invalid_argument("extract_basis: K must be within min(T, atom count)");
  Eigen::MatrixXd a(t, n);
  for (int64_t i = 0; i < t; ++i)
    for (int64_t j = 0; j < n; ++j) a(i, j) = dict.atoms.at(i, j);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv(k - 1) < 1e-12 * sv(0)) throw std::invalid_argument("extract_basis: K exceeds dictionary rank");
  TemporalBasis basis;
  basis.u = RArray({t, k});
  basis.singular_values.assign(sv.data(), sv.data() + k);
  for (int64_t c = 0; c < k; ++c) {
    int64_t arg = 0;
    for (int64_t i = 1; i < t; ++i)
      if (std::abs(svd.matrixU()(i, c)) > std::abs(svd.matrixU()(arg, c))) arg = i;
    const double sign = svd.matrixU()(arg, c) < 0 ? -1.0 : 1.0;
    for (int64_t i = 0; i < t; ++i) basis.u.at(i, c) = sign * svd.matrixU()(i, c);
  }
  return basis;
}

namespace {

template <typename T>
NdArray<T> compress_impl(const NdArray<T>& series, const TemporalBasis& basis) {
  if (series.dim(0) != basis.t())
    throw std::invalid_argument("compress: time axis " + std::to_string(series.dim(0)) +
                                " does not match basis T=" + std::to_string(basis.t()));
  Shape out_shape = series.shape();
  out_shape[0] = basis.k();
  NdArray<T> out(out_shape);
  const int64_t inner = series.numel() / series.dim(0);
  for (int64_t c = 0; c < basis.k(); ++c)
    for (int64_t t = 0; t < basis.t(); ++t) {
      const double u = basis.u.at(t, c);
      for (int64_t i = 0; i < inner; ++i) out[c * inner + i] += u * series[t * inner + i];
    }
  return out;
}

template <typename T>
NdArray<T> expand_impl(const NdArray<T>& coeffs, const TemporalBasis& basis) {
  if (coeffs.dim(0) != basis.k())
    throw std::invalid_argument("expand: component axis " + std::to_string(coeffs.dim(0)) +
                                " does not match basis K=" + std::to_string(basis.k()));
  Shape out_shape = coeffs.shape();
  out_shape[0] = basis.t();
  NdArray<T> out(out_shape);
  const int64_t inner = coeffs.numel() / coeffs.dim(0);
  for (int64_t t = 0; t < basis.t(); ++t)
    for (int64_t c = 0; c < basis.k(); ++c) {
      const double u = basis.u.at(t, c);
      for (int64_t i = 0; i < inner; ++i) out[t * inner + i] += u * coeffs[c * inner + i];
    }
  return out;
}

}  // namespace

RArray compress(const RArray& series, const TemporalBasis& basis) { return compress_impl(series, basis); }
CArray compress(const CArray& series, const TemporalBasis& basis) { return compress_impl(series, basis); }
RArray expand(const RArray& coeffs, const TemporalBasis& basis) { return expand_impl(coeffs, basis); }
CArray expand(const CArray& coeffs, const TemporalBasis& basis) { return expand_impl(coeffs, basis); }

CArray compress_weighted(const CArray& gridded, const RArray& weights, const TemporalBasis& basis) {
  if (gridded.ndim() != 4 || gridded.dim(0) != basis.t())
    throw std::invalid_argument("compress_weighted: gridded k-space must be [T, C, M, M]");
  if (weights.ndim() != 3 || weights.dim(0) != gridded.dim(0) || weights.dim(1) != gridded.dim(2) ||
      weights.dim(2) != gridded.dim(3))
    throw std::invalid_argument("compress_weighted: weights must be [T, M, M]");
  const int64_t t = gridded.dim(0), nc = gridded.dim(1), npix = gridded.dim(2) * gridded.dim(3);
  CArray out({basis.k(), nc, gridded.dim(2), gridded.dim(3)});
  for (int64_t k = 0; k < basis.k(); ++k)
    for (int64_t tt = 0; tt < t; ++tt) {
      const double u = basis.u.at(tt, k);
      for (int64_t c = 0; c < nc; ++c)
        for (int64_t i = 0; i < npix; ++i)
          out[(k * nc + c) * npix + i] += u * weights[tt * npix + i] * gridded[(tt * nc + c) * npix + i];
    }
  return out;
}

SubspaceDcOperator precompute_Mk(const TemporalBasis& basis, const RArray& mask,
                                 const RArray& weights) {
  if (mask.ndim() != 3 || mask.dim(0) != basis.t())
    throw std::invalid_argument("precompute_Mk: mask must be [T, H, W] matching the basis");
  check_same_shape("precompute_Mk", mask.shape(), weights.shape());
  const int64_t t = basis.t(), k = basis.k();
  const int64_t h = mask.dim(1), w = mask.dim(2);
  const int64_t npix = h * w;
  SubspaceDcOperator op;
  op.k = k;
  op.h = h;
  op.w = w;
  op.m = RArray({npix, k, k});
  for (int64_t tt = 0; tt < t; ++tt)
    for (int64_t p = 0; p < npix; ++p) {
      const double wm = weights[tt * npix + p] * mask[tt * npix + p];
      if (wm == 0.0) continue;
      for (int64_t i = 0; i < k; ++i) {
        const double ui = basis.u.at(tt, i);
        for (int64_t j = 0; j < k; ++j) op.m[(p * k + i) * k + j] += wm * ui * basis.u.at(tt, j);
      }
    }
  return op;
}

CArray apply_subspace_dc(const CArray& subspace_kspace, const SubspaceDcOperator& mk) {
  if (subspace_kspace.ndim() != 4 || subspace_kspace.dim(0) != mk.k ||
      subspace_kspace.dim(2) != mk.h || subspace_kspace.dim(3) != mk.w)
    throw std::invalid_argument("apply_subspace_dc: expected [K, C, H, W] matching the operator");
  const int64_t k = mk.k, nc = subspace_kspace.dim(1), npix = mk.h * mk.w;
  CArray out(subspace_kspace.shape());
  std::vector<cplx> v(static_cast<size_t>(k));
  for (int64_t c = 0; c < nc; ++c)
    for (int64_t p = 0; p < npix; ++p) {
      for (int64_t i = 0; i < k; ++i) v[static_cast<size_t>(i)] = subspace_kspace[(i * nc + c) * npix + p];
      const double* m = mk.at(p);
      for (int64_t i = 0; i < k; ++i) {
        cplx acc = 0;
        for (int64_t j = 0; j < k; ++j) acc += m[i * k + j] * v[static_cast<size_t>(j)];
        out[(i * nc + c) * npix + p] = acc;
      }
    }
  return out;
}

std::shared_ptr<const ComplexLinearMap> make_subspace_normal_map(
    std::shared_ptr<const SubspaceDcOperator> mk, int64_t ncoils) {
  const int64_t k = mk->k, h = mk->h, w = mk->w;
  auto normal = [mk, ncoils, k, h, w](const CArray& x) {
    // x: [K*C, H, W] complex, k-major; FFT each plane, per-pixel Mk across
    // the component axis, inverse FFT
    CArray ksp({k, ncoils, h, w});
    CArray plane({h, w});
    const int64_t npix = h * w;
    for (int64_t kc = 0; kc < k * ncoils; ++kc) {
      for (int64_t i = 0; i < npix; ++i) plane[i] = x[kc * npix + i];
      CArray f = fft2_centered(plane);
      for (int64_t i = 0; i < npix; ++i) ksp[kc * npix + i] = f[i];
    }
    CArray dc = apply_subspace_dc(ksp, *mk);
    CArray out({k * ncoils, h, w});
    for (int64_t kc = 0; kc < k * ncoils; ++kc) {
      for (int64_t i = 0; i < npix; ++i) plane[i] = dc[kc * npix + i];
      CArray b = ifft2_centered(plane);
      for (int64_t i = 0; i < npix; ++i) out[kc * npix + i] = b[i];
    }
    return out;
  };
  // Mk is symmetric real per pixel and the centered FFT pair is unitary, so
  // the whole map is self-adjoint
  return std::make_shared<const ComplexLinearMap>("subspace_dc", Shape{k * ncoils, h, w},
                                                  Shape{k * ncoils, h, w}, normal, normal);
}

}  // namespace hr
