#pragma once

#include "hr/nd_array.hpp"

namespace hr {

struct EllipseRegion {
  double cy = 0, cx = 0;  // center, pixels relative to image center
  double ry = 1, rx = 1;  // semi-axes, pixels
  double angle_deg = 0;
  double intensity = 1;
  double t1_ms = 0;  // used by IR series generation
};

struct PhantomSpec {
  int matrix = 48;
  std::vector<EllipseRegion> regions;  // painted in order, later on top
  uint64_t seed = 0;
  double phase_amplitude = 0.25;  // radians, smooth low-order phase
};

/// Piecewise-smooth ellipse composition with 3x3 supersampled edges and a
/// mild smooth phase. Deterministic under the spec seed.
CArray gen_static_phantom(const PhantomSpec& spec);

struct IrSeries {
  CArray frames;   // [T, H, W], real-valued signed recovery signals
  RArray t1_map;   // true T1 per pixel (0 outside regions)
  RArray interior; // 1 where the pixel lies strictly inside one region
};

/// Per-pixel Look-Locker signals through the same closure as the subspace
/// dictionary; returns the true T1 map for evaluation.
IrSeries gen_ir_series(const PhantomSpec& spec, const std::vector<double>& times_ms,
                       double flip_deg, double tr_ms);

/// i.i.d. complex Gaussian noise (independent re/im, std sigma), seeded.
CArray add_complex_noise(const CArray& data, double sigma, uint64_t seed);

/// Lung-like preset: body, low-intensity parenchyma, bright vessels.
PhantomSpec lung_phantom_spec(int matrix, uint64_t seed);
/// Brain-like preset: concentric rings with T1 in {800, 1200, 1600, 2000} ms.
PhantomSpec brain_phantom_spec(int matrix, uint64_t seed);

}  // namespace hr
