#pragma once

#include <span>

#include "hr/nn.hpp"

namespace hr {

/// Three-parameter Look-Locker signal model S(t) = A - B exp(-t / T1*).
struct ModelParams {
  double a = 0;        // steady-state amplitude
  double b = 0;        // amplitude span
  double t1_star = 0;  // effective relaxation time (ms), > 0
};

double signal_model(const ModelParams& p, double t_ms);

/// T1 = (B/A - 1) * T1*. A == 0 marks the pixel invalid (returns NaN rather
/// than throwing; callers mask).
double t1_from_params(const ModelParams& p);

/// Per-pixel validity: finite and positive. Degenerate fits (constant
/// curves, zero A) fail this and are masked rather than rejected.
inline bool t1_valid(double t1_ms) { return std::isfinite(t1_ms) && t1_ms > 0; }

/// Per-pixel T1 in ms with a validity mask.
struct T1Map {
  RArray t1;     // [H, W]
  RArray valid;  // [H, W] in {0,1}
};

/// Look-Locker closure from true T1 and sequence parameters (M0 scaling):
/// T1* = (1/T1 - ln(cos alpha)/TR)^-1, A = M0 T1*/T1, B = M0 (1 + T1*/T1).
/// By construction t1_from_params(look_locker_params(t1, ...)) == t1.
ModelParams look_locker_params(double t1_ms, double flip_deg, double tr_ms, double m0 = 1.0);

struct LmFitResult {
  ModelParams params;
  bool converged = false;
  double residual = 0;  // sqrt of the mean squared misfit
  int iterations = 0;
};

/// Levenberg-Marquardt fit of the three-parameter model, multi-start over
/// three T1* initializations with the best residual winning. Needs >= 4
/// increasing time points.
LmFitResult lm_fit(std::span<const double> curve, std::span<const double> times_ms);

/// MLP curve fitter: T time points -> (A, B, T1*). Curves are normalized to
/// unit max magnitude on input; A and B predictions are rescaled back and
/// T1* is produced through a softplus head in units of 1000 ms, so the
/// composed T1 prediction is invariant to curve scale.
class FittingNetwork {
 public:
  static FittingNetwork init(int64_t t_points, uint64_t seed);

  ModelParams predict(std::span<const double> curve, std::span<const double> times_ms) const;
  std::vector<diff::ParamRef> parameters();
  int64_t t_points() const { return mlp_.input_dim(); }

  /// Raw normalized head [B,3] = (A', B', softplus tau') for a normalized
  /// curve batch [B,T]; shared by both training losses.
  diff::Graph::Id head(diff::GraphParams& gp, diff::Graph::Id curves_norm) const;

  static constexpr double kT1Scale = 1000.0;  // ms per unit of the tau head

 private:
  diff::Mlp mlp_;
};

struct FitTrainOptions {
  int epochs = 40;
  int64_t batch = 512;
  double lr = 3e-4;
  uint64_t seed = 1;
};

/// Self-supervised model-consistency training: L1 between the Eq.-style
/// resynthesized curve of the predicted parameters and the input curve.
/// Returns per-epoch mean losses.
std::vector<double> fit_network_selfsup_train(FittingNetwork& net, const RArray& curves,
                                              const std::vector<double>& times_ms,
                                              const FitTrainOptions& opts);

/// Supervised training against reference parameters [N,3] = (A, B, T1* ms)
/// with per-curve normalization applied consistently; L1 loss.
std::vector<double> fit_network_sup_train(FittingNetwork& net, const RArray& curves,
                                          const RArray& ref_params,
                                          const std::vector<double>& times_ms,
                                          const FitTrainOptions& opts);

}  // namespace hr
