#pragma once

#include <cstdint>
#include <vector>

#include "hr/nd_array.hpp"

namespace hr {

enum class TrajKind { spiral, radial, generic };

/// Golden angle in degrees, 180/phi with phi the golden ratio.
inline constexpr double kGoldenAngleDeg = 111.24611797498107;

/// Non-Cartesian sample coordinates in normalized cycles/pixel, organized by
/// readout (interleaf or spoke). kx pairs with image axis 1 (columns), ky
/// with axis 0 (rows). All coordinates lie in [-0.5, 0.5].
struct Trajectory {
  TrajKind kind = TrajKind::generic;
  int64_t readout_count = 0;
  int64_t samples_per_readout = 0;
  std::vector<double> kx, ky;        // readout-major, size readout_count * samples_per_readout
  std::vector<int32_t> frame_index;  // one per readout; empty means single frame
  int matrix_hint = 0;               // target matrix size when known (0 = unknown)

  int64_t sample_count() const { return readout_count * samples_per_readout; }
  int32_t frame_of(int64_t readout) const {
    return frame_index.empty() ? 0 : frame_index[static_cast<size_t>(readout)];
  }
  int32_t frame_count() const;
};

/// Per-sample nonnegative density compensation, shape [readouts, samples].
using DensityCompensation = RArray;

/// Archimedean spiral arms rotated by 2*pi/interleaves; radius grows 0 ->
/// 0.5 along each readout. Turn count is matrix/(2*interleaves) so that the
/// full interleaf set meets Nyquist for the given matrix.
Trajectory gen_spiral(int64_t interleaves, int64_t samples_per_readout, int matrix_size);

/// Diametric golden-angle spokes. samples_per_spoke must be even so every
/// spoke passes exactly through k-space center. If spokes_per_frame > 0,
/// spokes within each repetition are binned into inversion-time frames.
Trajectory gen_golden_radial(int64_t spokes_per_repetition, int64_t repetitions,
                             int64_t samples_per_spoke, int64_t spokes_per_frame = 0);

enum class DcfMethod { analytic, voronoi_raster };

/// Analytic density compensation: ramp (|k| with a center floor) for radial,
/// arc-length x radial-gap for spiral, computed per frame. Weights are then
/// scaled so the adjoint of a constant image's samples reproduces the
/// constant with unit DC amplitude (exact Dirichlet-sum normalization when
/// the matrix size is known). voronoi_raster estimates per-sample cell areas
/// on a fine raster instead; offered for validation.
DensityCompensation density_compensation(const Trajectory& traj, int matrix_size = 0,
                                         DcfMethod method = DcfMethod::analytic);

/// Subset of readouts, order preserving. keep must be non-empty, sorted,
/// unique and in range.
Trajectory undersample(const Trajectory& traj, const std::vector<int64_t>& keep);
CArray undersample(const CArray& data, const std::vector<int64_t>& keep);  // [..., R, S] on axis -2
RArray undersample(const RArray& per_readout, const std::vector<int64_t>& keep);  // [R, S]

/// Every stride-th readout starting at 0 (spiral acceleration R).
std::vector<int64_t> keep_strided(int64_t readout_count, int64_t stride);
/// First n_keep repetitions of an IR acquisition.
std::vector<int64_t> keep_first_repetitions(int64_t spokes_per_repetition, int64_t repetitions,
                                            int64_t keep_repetitions);

}  // namespace hr
