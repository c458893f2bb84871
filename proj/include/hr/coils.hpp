#pragma once

#include "hr/nufft.hpp"
#include "hr/trajectories.hpp"

namespace hr {

/// Smooth complex Gaussian-lobe sensitivity profiles centered on a ring
/// around the FOV, root-sum-of-squares normalized to 1 at every pixel.
/// Coil 0 carries zero phase, so a single coil yields the constant map 1.
CArray gen_coil_sensitivities(int64_t ncoils, int matrix_size, uint64_t seed);

struct SenseEstimateOptions {
  double center_radius_frac = 0.125;  // of the k-space extent (full width 1.0)
  double support_threshold = 0.1;     // relative to the peak RSS
};

/// Estimate maps from the central (or time-averaged) k-space: per-coil
/// Hann-apodized low-pass adjoint images divided by their RSS; low-RSS
/// background zeroed. kspace is [C, R, S] over the given trajectory.
CArray estimate_sensitivities(const CArray& kspace, const Trajectory& traj, int matrix_size,
                              const SenseEstimateOptions& opts = {});

/// Same estimator on Cartesian k-space [C, M, M] (e.g. time-averaged
/// GROG-gridded data), Hann low-pass around the grid center.
CArray estimate_sensitivities_cartesian(const CArray& kspace, const SenseEstimateOptions& opts = {});

/// C^H: pixelwise sum over coils of conj(C) * image. images, maps [C, H, W].
CArray coil_combine(const CArray& images, const CArray& maps);
/// C: single image [H, W] -> per-coil images [C, H, W].
CArray coil_expand(const CArray& image, const CArray& maps);

}  // namespace hr
