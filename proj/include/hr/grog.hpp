#pragma once

#include "hr/nd_array.hpp"
#include "hr/trajectories.hpp"

namespace hr {

/// Base unit-cell coil-mixing shift operators G_x, G_y with their
/// eigendecompositions, so fractional powers G^d (principal eigenvalue
/// branch) are a diagonal rescale between the cached eigenbases.
class GrogOperators {
 public:
  /// Nearest-neighbor fallback: identity mixing for any coil count
  /// (GROG degenerates without coil diversity).
  static GrogOperators identity(int64_t ncoils);

  int64_t ncoils() const { return ncoils_; }
  int matrix() const { return matrix_; }  // grid whose cell is the unit shift (0 for identity)
  const CArray& gx() const { return gx_; }
  const CArray& gy() const { return gy_; }

  /// G_x^dx * G_y^dy as a dense [C, C] matrix, |dx|,|dy| <= 0.5 in grid cells.
  CArray fractional_shift(double dx, double dy) const;

 private:
  friend GrogOperators calibrate_grog(const CArray&, const Trajectory&, int);
  struct Eig {
    CArray v, vinv;             // [C, C]
    std::vector<cplx> lambda;   // C eigenvalues
    bool identity = false;
  };
  static CArray power(const Eig& e, double d, int64_t n);

  int64_t ncoils_ = 0;
  int matrix_ = 0;
  CArray gx_, gy_;
  Eig ex_, ey_;
};

/// Solve per-spoke along-readout shift operators by regularized least
/// squares, take matrix logs, combine across spoke angles by least squares
/// into log G_x / log G_y (expressed per grid cell of the target matrix),
/// and exponentiate. Requires >= 2 coils and >= 2 spokes at distinct
/// angles; spokes whose shift operator has eigenvalues below 1e-8 of the
/// largest are rejected.
GrogOperators calibrate_grog(const CArray& samples, const Trajectory& traj, int matrix_size);

/// Cartesian multi-coil k-space per time frame with occupancy mask M and
/// accumulated per-cell weights W (W > 0 exactly where M = 1).
struct GriddedKSpace {
  CArray data;     // [T, C, M, M], collision-averaged values
  RArray mask;     // [T, M, M] in {0,1}
  RArray weights;  // [T, M, M], normalized to max 1
  int64_t frames() const { return data.dim(0); }
  int64_t ncoils() const { return data.dim(1); }
  int64_t matrix() const { return data.dim(2); }
};

/// Per-sample deposits (target cell, frame, triangular weight, shifted coil
/// vector) computed once per dataset; re-gridding under different sample
/// masks is then a masked accumulation. The shift operators are applied
/// here, never during the per-epoch loops.
struct GrogPrepared {
  int64_t ncoils = 0, frames = 0;
  int matrix = 0;
  std::vector<int32_t> cell;     // per sample, frame-local flat cell index
  std::vector<int32_t> frame;    // per sample
  std::vector<double> weight;    // per sample, (1-|dx|)(1-|dy|)
  std::vector<cplx> shifted;     // [sample][coil]
  int64_t sample_count() const { return static_cast<int64_t>(cell.size()); }
};

GrogPrepared prepare_grog(const CArray& samples, const Trajectory& traj, const GrogOperators& ops,
                          int matrix_size);

/// Accumulate prepared deposits into the Cartesian grid; the optional mask
/// [R, S] restricts to a sample subset (SSDU set gridding). Cell weights W
/// are the accumulated triangular weights passed through the saturation
/// w / (w + mean_w), so well-covered cells approach 1 while sparse cells
/// stay down-weighted; W > 0 exactly where M = 1.
GriddedKSpace grid_prepared(const GrogPrepared& prep, const RArray* sample_mask = nullptr);

/// Shift every sample to its nearest grid cell with G_x^dx G_y^dy and
/// deposit with triangular weight (1-|dx|)(1-|dy|); colliding samples are
/// averaged by weight. Deterministic spoke-order accumulation. A per-sample
/// mask [R, S] restricts gridding to a subset (SSDU set gridding).
GriddedKSpace grog_grid(const CArray& samples, const Trajectory& traj, const GrogOperators& ops,
                        int matrix_size, const RArray* sample_mask = nullptr);

}  // namespace hr
