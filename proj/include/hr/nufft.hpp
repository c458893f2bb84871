#pragma once

#include <memory>

#include "hr/nd_array.hpp"
#include "hr/trajectories.hpp"

namespace hr {

/// Type-2 / type-1 NUFFT pair via oversampled Kaiser-Bessel gridding.
/// Forward evaluates S(k_j) = sum_u x[u] e^{-2 pi i k_j . u} over centered
/// pixel coordinates u; adjoint is its exact conjugate transpose. Plans are
/// immutable after construction and shareable across threads.
class GriddingPlan {
 public:
  GriddingPlan(const Trajectory& traj, int matrix_size, double oversampling = 2.0,
               int kernel_width = 4);

  int matrix() const { return matrix_; }
  int grid() const { return grid_; }
  int64_t readout_count() const { return readouts_; }
  int64_t samples_per_readout() const { return samples_per_readout_; }
  int64_t sample_count() const { return readouts_ * samples_per_readout_; }
  double kernel_beta() const { return beta_; }

  /// image [M, M] -> samples [R, S]
  CArray forward(const CArray& image) const;
  /// samples [R, S] -> image [M, M]; computes F^H y, or F^H W y when
  /// weights are given.
  CArray adjoint(const CArray& samples, const RArray* weights = nullptr) const;

 private:
  double kernel(double t) const;  // lookup-table Kaiser-Bessel, |t| <= width/2

  int matrix_, grid_, width_;
  int64_t readouts_, samples_per_readout_;
  double beta_;
  std::vector<double> lut_;     // kernel values over [0, width/2]
  std::vector<double> deapod_;  // per-axis 1/kernel-FT at centered pixel coords
  std::vector<double> p0_, p1_;  // sample coordinates in oversampled grid cells
};

/// Exact direct-sum non-uniform DFT (test oracle; small images only).
CArray dft_oracle(const CArray& image, const Trajectory& traj);

/// Multi-coil encoding E = sqrt(W) F C and its adjoint C^H F^H sqrt(W).
/// image [M, M], coils [C, M, M], samples [C, R, S], weights [R, S].
CArray encode(const CArray& image, const CArray& coils, const GriddingPlan& plan,
              const RArray& weights);
CArray encode_adjoint(const CArray& samples, const CArray& coils, const GriddingPlan& plan,
                      const RArray& weights);

}  // namespace hr
