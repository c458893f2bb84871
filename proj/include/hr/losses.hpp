#pragma once

#include "hr/autodiff.hpp"

namespace hr::diff {

/// ||t - p||_2 / ||t||_2 + ||t - p||_1 / ||t||_1 (SSDU normalization).
/// Throws if the target has zero L1 or L2 norm.
Graph::Id mixed_l1_l2_loss(Graph& g, Graph::Id pred, Graph::Id target);

/// Mean local SSIM over an 11x11 Gaussian window (sigma 1.5), K1=0.01,
/// K2=0.03, valid-window placement. Inputs are real 2D images of equal
/// shape, both at least the window size. Differentiable.
Graph::Id ssim(Graph& g, Graph::Id x, Graph::Id ref, double dynamic_range);

inline Graph::Id ssim_loss(Graph& g, Graph::Id x, Graph::Id ref, double dynamic_range) {
  return g.add_scalar(g.neg(ssim(g, x, ref, dynamic_range)), 1.0);
}

// forward-only conveniences
double mixed_l1_l2_value(const Tensor& pred, const Tensor& target);
double ssim_value(const Tensor& x, const Tensor& ref, double dynamic_range);

/// SSIM window constants, exposed for tests.
constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;

Tensor gaussian_window(int size, double sigma);

}  // namespace hr::diff
