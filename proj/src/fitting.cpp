#include "hr/fitting.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace hr {

double signal_model(const ModelParams& p, double t_ms) {
  return p.a - p.b * std::exp(-t_ms / p.t1_star);
}

double t1_from_params(const ModelParams& p) {
  if (p.a == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (p.b / p.a - 1.0) * p.t1_star;
}

ModelParams look_locker_params(double t1_ms, double flip_deg, double tr_ms, double m0) {
  if (t1_ms <= 0) throw std::invalid_argument("look_locker_params: T1 must be positive");
  const double alpha = flip_deg * 3.14159265358979323846 / 180.0;
  const double rate = 1.0 / t1_ms - std::log(std::cos(alpha)) / tr_ms;
  const double t1_star = 1.0 / rate;
  ModelParams p;
  p.t1_star = t1_star;
  p.a = m0 * t1_star / t1_ms;
  p.b = m0 * (1.0 + t1_star / t1_ms);
  return p;
}

namespace {

double residual_norm(const ModelParams& p, std::span<const double> curve, std::span<const double> t) {
  double s = 0;
  for (size_t i = 0; i < curve.size(); ++i) {
    const double d = signal_model(p, t[i]) - curve[i];
    s += d * d;
  }
  return s;
}

LmFitResult lm_single(std::span<const double> curve, std::span<const double> t, ModelParams init) {
  const int max_iter = 200;
  ModelParams p = init;
  double lambda = 1e-3;
  double cost = residual_norm(p, curve, t);
  int it = 0;
  bool converged = false;
  for (; it < max_iter; ++it) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (size_t i = 0; i < curve.size(); ++i) {
      const double e = std::exp(-t[i] / p.t1_star);
      const double r = p.a - p.b * e - curve[i];
      Eigen::Vector3d j(1.0, -e, -p.b * e * t[i] / (p.t1_star * p.t1_star));
      jtj += j * j.transpose();
      jtr += j * r;
    }
    Eigen::Matrix3d damped = jtj;
    for (int d = 0; d < 3; ++d) damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
    Eigen::Vector3d step = damped.ldlt().solve(-jtr);
    ModelParams trial{p.a + step(0), p.b + step(1), p.t1_star + step(2)};
    if (trial.t1_star <= 0) {
      lambda *= 10;
      if (lambda > 1e12) break;
      continue;
    }
    const double trial_cost = residual_norm(trial, curve, t);
    if (trial_cost <= cost) {
      const double rel = step.norm() / std::max(1e-12, std::sqrt(p.a * p.a + p.b * p.b + p.t1_star * p.t1_star));
      p = trial;
      cost = trial_cost;
      lambda = std::max(lambda * 0.1, 1e-12);
      if (rel < 1e-8) {
        converged = true;
        break;
      }
    } else {
      lambda *= 10;
      if (lambda > 1e12) break;
    }
  }
  LmFitResult res;
  res.params = p;
  res.converged = converged || it < max_iter;
  res.residual = std::sqrt(cost / static_cast<double>(curve.size()));
  res.iterations = it;
  return res;
}

}  // namespace

LmFitResult lm_fit(std::span<const double> curve, std::span<const double> times_ms) {
  if (curve.size() != times_ms.size() || curve.size() < 4)
    throw std::invalid_argument("lm_fit: need >= 4 samples with matching time points");
  for (size_t i = 1; i < times_ms.size(); ++i)
    if (times_ms[i] <= times_ms[i - 1]) throw std::invalid_argument("lm_fit: times must be increasing");

  // scale-normalize; A and B rescale afterwards, T1* is unaffected
  double scale = 0;
  for (double v : curve) scale = std::max(scale, std::abs(v));
  if (scale == 0) {
    LmFitResult res;
    res.params = {0, 0, times_ms.back()};
    res.converged = true;
    return res;
  }
  std::vector<double> c(curve.begin(), curve.end());
  for (double& v : c) v /= scale;

  const double a0 = c.back();
  const double b0 = a0 - c.front();
  const double tmax = times_ms.back();
  LmFitResult best;
  best.residual = std::numeric_limits<double>::infinity();
  for (double frac : {0.05, 0.15, 0.4}) {
    ModelParams init{a0, b0 == 0 ? 0.1 : b0, frac * tmax};
    LmFitResult r = lm_single(c, times_ms, init);
    if (r.residual < best.residual) best = r;
  }
  best.params.a *= scale;
  best.params.b *= scale;
  best.residual *= scale;
  return best;
}

FittingNetwork FittingNetwork::init(int64_t t_points, uint64_t seed) {
  diff::Rng rng(seed);
  FittingNetwork net;
  net.mlp_ = diff::Mlp::init({t_points, 64, 64, 3}, rng);
  return net;
}

diff::Graph::Id FittingNetwork::head(diff::GraphParams& gp, diff::Graph::Id curves_norm) const {
  diff::Graph& g = gp.graph();
  diff::Graph::Id raw = mlp_.forward(gp, curves_norm, "fit");
  // (A', B') pass through; tau' through softplus to stay positive
  const int64_t batch = g.shape(raw)[0];
  Tensor mask_ab({batch, 3}), mask_tau({batch, 3});
  for (int64_t r = 0; r < batch; ++r) {
    mask_ab.at(r, 0) = 1;
    mask_ab.at(r, 1) = 1;
    mask_tau.at(r, 2) = 1;
  }
  return g.add(g.mul(raw, g.constant(mask_ab)), g.mul(g.softplus(raw), g.constant(mask_tau)));
}

std::vector<diff::ParamRef> FittingNetwork::parameters() {
  std::vector<diff::ParamRef> refs;
  mlp_.collect(refs, "fit");
  return refs;
}

ModelParams FittingNetwork::predict(std::span<const double> curve,
                                    std::span<const double> times_ms) const {
  (void)times_ms;
  if (static_cast<int64_t>(curve.size()) != t_points())
    throw std::invalid_argument("FittingNetwork::predict: curve length mismatch");
  double scale = 0;
  for (double v : curve) scale = std::max(scale, std::abs(v));
  if (scale == 0) return {0, 0, kT1Scale};
  Tensor in({1, t_points()});
  for (int64_t i = 0; i < in.numel(); ++i) in[i] = curve[static_cast<size_t>(i)] / scale;
  diff::Graph g;
  diff::GraphParams gp(g);
  diff::Graph::Id out = head(gp, g.constant(in));
  const Tensor& v = g.value(out);
  ModelParams p;
  p.a = v.at(0, 0) * scale;
  p.b = v.at(0, 1) * scale;
  p.t1_star = v.at(0, 2) * kT1Scale;
  return p;
}

namespace {

// normalized curve batch for the given row indices; returns scales
Tensor batch_rows(const RArray& curves, const std::vector<int64_t>& rows, std::vector<double>& scales) {
  const int64_t t = curves.dim(1);
  Tensor b({static_cast<int64_t>(rows.size()), t});
  scales.resize(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    double s = 0;
    for (int64_t i = 0; i < t; ++i) s = std::max(s, std::abs(curves.at(rows[r], i)));
    if (s == 0) s = 1;
    scales[r] = s;
    for (int64_t i = 0; i < t; ++i) b.at(static_cast<int64_t>(r), i) = curves.at(rows[r], i) / s;
  }
  return b;
}

std::vector<int64_t> epoch_rows(int64_t n, int64_t batch, diff::Rng& rng) {
  std::vector<int64_t> rows(static_cast<size_t>(std::min(batch, n)));
  std::uniform_int_distribution<int64_t> pick(0, n - 1);
  for (auto& r : rows) r = pick(rng);
  return rows;
}

}  // namespace

std::vector<double> fit_network_selfsup_train(FittingNetwork& net, const RArray& curves,
                                              const std::vector<double>& times_ms,
                                              const FitTrainOptions& opts) {
  if (curves.ndim() != 2 || curves.dim(1) != net.t_points())
    throw std::invalid_argument("fit_network_selfsup_train: curves must be [N, T]");
  diff::Rng rng(opts.seed);
  diff::AdamState adam;
  adam.cfg.lr = opts.lr;
  std::vector<double> losses;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    auto rows = epoch_rows(curves.dim(0), opts.batch, rng);
    std::vector<double> scales;
    Tensor batch = batch_rows(curves, rows, scales);
    diff::Graph g;
    diff::GraphParams gp(g);
    diff::Graph::Id in = g.constant(batch);
    diff::Graph::Id params = net.head(gp, in);
    diff::Graph::Id synth = g.ir_signal(params, times_ms, FittingNetwork::kT1Scale);
    diff::Graph::Id loss = g.mean(g.abs(g.sub(synth, in)));
    g.backward(loss);
    std::vector<diff::AdamUpdate> ups;
    std::vector<Tensor> grads(gp.size());
    for (size_t i = 0; i < gp.size(); ++i) {
      grads[i] = gp.grad(i);
      ups.push_back({gp.name(i), &gp.tensor(i), &grads[i]});
    }
    diff::adam_step(adam, ups);
    losses.push_back(g.value(loss)[0]);
  }
  return losses;
}

std::vector<double> fit_network_sup_train(FittingNetwork& net, const RArray& curves,
                                          const RArray& ref_params,
                                          const std::vector<double>& times_ms,
                                          const FitTrainOptions& opts) {
  (void)times_ms;
  if (curves.ndim() != 2 || ref_params.ndim() != 2 || ref_params.dim(0) != curves.dim(0) ||
      ref_params.dim(1) != 3)
    throw std::invalid_argument("fit_network_sup_train: need curves [N,T] and refs [N,3]");
  diff::Rng rng(opts.seed);
  diff::AdamState adam;
  adam.cfg.lr = opts.lr;
  std::vector<double> losses;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    auto rows = epoch_rows(curves.dim(0), opts.batch, rng);
    std::vector<double> scales;
    Tensor batch = batch_rows(curves, rows, scales);
    Tensor ref({static_cast<int64_t>(rows.size()), 3});
    for (size_t r = 0; r < rows.size(); ++r) {
      ref.at(static_cast<int64_t>(r), 0) = ref_params.at(rows[r], 0) / scales[r];
      ref.at(static_cast<int64_t>(r), 1) = ref_params.at(rows[r], 1) / scales[r];
      ref.at(static_cast<int64_t>(r), 2) = ref_params.at(rows[r], 2) / FittingNetwork::kT1Scale;
    }
    diff::Graph g;
    diff::GraphParams gp(g);
    diff::Graph::Id params = net.head(gp, g.constant(batch));
    diff::Graph::Id loss = g.mean(g.abs(g.sub(params, g.constant(ref))));
    g.backward(loss);
    std::vector<diff::AdamUpdate> ups;
    std::vector<Tensor> grads(gp.size());
    for (size_t i = 0; i < gp.size(); ++i) {
      grads[i] = gp.grad(i);
      ups.push_back({gp.name(i), &gp.tensor(i), &grads[i]});
    }
    diff::adam_step(adam, ups);
    losses.push_back(g.value(loss)[0]);
  }
  return losses;
}

}  // namespace hr
