#pragma once

#include <memory>

#include "hr/nd_array.hpp"
#include "hr/operators.hpp"

namespace hr {

/// IR Look-Locker signal curves, one atom per T1 grid value.
struct SignalDictionary {
  RArray atoms;                 // [T, n_atoms]
  std::vector<double> t1_grid;  // ms, sorted
  std::vector<double> times;    // inversion times (ms), increasing
  double flip_deg = 0;
  double tr_ms = 0;
};

SignalDictionary build_dictionary(const std::vector<double>& t1_grid_ms,
                                  const std::vector<double>& times_ms, double flip_deg,
                                  double tr_ms);

inline std::vector<double> t1_grid_range(double lo_ms, double hi_ms, double step_ms) {
  std::vector<double> g;
  for (double v = lo_ms; v <= hi_ms + 1e-9; v += step_ms) g.push_back(v);
  return g;
}

/// Orthonormal K-component temporal basis, largest left singular vectors of
/// the atom matrix. Deterministic sign: largest-magnitude entry positive.
struct TemporalBasis {
  RArray u;  // [T, K]
  std::vector<double> singular_values;
  int64_t t() const { return u.dim(0); }
  int64_t k() const { return u.dim(1); }
};

TemporalBasis extract_basis(const SignalDictionary& dict, int64_t k);

/// U^T series / U V along axis 0; expand(compress(.)) is the orthogonal
/// projector onto span(U).
RArray compress(const RArray& series, const TemporalBasis& basis);
CArray compress(const CArray& series, const TemporalBasis& basis);
RArray expand(const RArray& coeffs, const TemporalBasis& basis);
CArray expand(const CArray& coeffs, const TemporalBasis& basis);

/// U^T W y over the time axis: gridded k-space [T, C, M, M] with per-cell
/// weights [T, M, M] -> subspace k-space [K, C, M, M].
CArray compress_weighted(const CArray& gridded, const RArray& weights, const TemporalBasis& basis);

/// Per-pixel K x K operator M_k = U^T W M U enabling data consistency
/// entirely within the subspace.
struct SubspaceDcOperator {
  int64_t k = 0, h = 0, w = 0;
  RArray m;  // [H*W, K, K], symmetric PSD per pixel
  const double* at(int64_t pixel) const { return m.data() + pixel * k * k; }
};

SubspaceDcOperator precompute_Mk(const TemporalBasis& basis, const RArray& mask,
                                 const RArray& weights);

/// Per-pixel K x K multiply across the component axis of subspace k-space
/// [K, C, M, M].
CArray apply_subspace_dc(const CArray& subspace_kspace, const SubspaceDcOperator& mk);

/// Normal operator F^H M_k F per coil on subspace images, the DC context of
/// the subspace unrolled block. Complex domain [K*C, M, M] (k-major).
std::shared_ptr<const ComplexLinearMap> make_subspace_normal_map(
    std::shared_ptr<const SubspaceDcOperator> mk, int64_t ncoils);

}  // namespace hr
