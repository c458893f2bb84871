#include "hr/experiment2.hpp"

#include <filesystem>
#include <iostream>

#include "hr/container.hpp"
#include "hr/experiment1.hpp"  // mix_seed
#include "hr/fft.hpp"
#include "hr/losses.hpp"
#include "hr/nufft.hpp"
#include "hr/phantom.hpp"

namespace hr::exp2 {

namespace fs = std::filesystem;
using exp1::mix_seed;

std::vector<int64_t> T1Dataset::train_idx() const {
  std::vector<int64_t> v(static_cast<size_t>(cfg.train_cases));
  std::iota(v.begin(), v.end(), 0);
  return v;
}
std::vector<int64_t> T1Dataset::val_idx() const {
  std::vector<int64_t> v(static_cast<size_t>(cfg.val_cases));
  std::iota(v.begin(), v.end(), cfg.train_cases);
  return v;
}
std::vector<int64_t> T1Dataset::test_idx() const {
  std::vector<int64_t> v(static_cast<size_t>(cfg.test_cases));
  std::iota(v.begin(), v.end(), cfg.train_cases + cfg.val_cases);
  return v;
}
int64_t T1Dataset::truth_accesses() const {
  int64_t n = 0;
  for (const auto& c : cases) n += c.truth_access_count();
  return n;
}

T1Dataset simulate_t1(const ExperimentConfig& cfg) {
  T1Dataset ds;
  ds.cfg = cfg;
  ds.traj = gen_golden_radial(cfg.spokes_per_rep, cfg.repetitions, cfg.samples_per_spoke,
                              cfg.spokes_per_frame);
  ds.times = cfg.frame_times();
  SignalDictionary dict = build_dictionary(
      t1_grid_range(cfg.t1_grid_lo, cfg.t1_grid_hi, cfg.t1_grid_step), ds.times, cfg.flip_deg, cfg.tr_ms);
  ds.basis = extract_basis(dict, cfg.k_components);

  // per-frame NUFFT plans over the full trajectory, shared by all cases
  const int64_t frames = cfg.frames();
  std::vector<std::vector<int64_t>> frame_readouts(static_cast<size_t>(frames));
  for (int64_t r = 0; r < ds.traj.readout_count; ++r)
    frame_readouts[static_cast<size_t>(ds.traj.frame_of(r))].push_back(r);
  std::vector<Trajectory> frame_traj;
  std::vector<std::shared_ptr<GriddingPlan>> frame_plan;
  for (int64_t f = 0; f < frames; ++f) {
    frame_traj.push_back(undersample(ds.traj, frame_readouts[static_cast<size_t>(f)]));
    frame_plan.push_back(std::make_shared<GriddingPlan>(frame_traj.back(), cfg.matrix));
  }

  const int64_t total = cfg.train_cases + cfg.val_cases + cfg.test_cases;
  const int64_t nsamp = ds.traj.sample_count();
  for (int64_t i = 0; i < total; ++i) {
    T1Case c;
    c.id = "case" + std::to_string(i);
    PhantomSpec spec = brain_phantom_spec(cfg.matrix, mix_seed(cfg.seed, 41, static_cast<uint64_t>(i)));
    IrSeries series = gen_ir_series(spec, ds.times, cfg.flip_deg, cfg.tr_ms);
    CArray maps_true =
        gen_coil_sensitivities(cfg.coils, cfg.matrix, mix_seed(cfg.seed, 42, static_cast<uint64_t>(i)));
    c.kspace = CArray({cfg.coils, ds.traj.readout_count, ds.traj.samples_per_readout});
    const int64_t npix = static_cast<int64_t>(cfg.matrix) * cfg.matrix;
    CArray frame_img({cfg.matrix, cfg.matrix});
    for (int64_t f = 0; f < frames; ++f) {
      for (int64_t p = 0; p < npix; ++p) frame_img[p] = series.frames[f * npix + p];
      RArray unit = RArray::full({frame_traj[static_cast<size_t>(f)].readout_count,
                                  frame_traj[static_cast<size_t>(f)].samples_per_readout},
                                 1.0);
      CArray y = encode(frame_img, maps_true, *frame_plan[static_cast<size_t>(f)], unit);
      const int64_t s = ds.traj.samples_per_readout;
      for (size_t ri = 0; ri < frame_readouts[static_cast<size_t>(f)].size(); ++ri) {
        const int64_t dst = frame_readouts[static_cast<size_t>(f)][ri];
        for (int64_t cc = 0; cc < cfg.coils; ++cc)
          for (int64_t j = 0; j < s; ++j)
            c.kspace[cc * nsamp + dst * s + j] = y[(cc * y.dim(1) + static_cast<int64_t>(ri)) * s + j];
      }
    }
    const double rms = norm2(c.kspace) / std::sqrt(static_cast<double>(c.kspace.numel()));
    c.kspace = add_complex_noise(c.kspace, cfg.noise_sigma * rms,
                                 mix_seed(cfg.seed, 43, static_cast<uint64_t>(i)));
    c.set_truth(series.t1_map, series.interior);
    ds.cases.push_back(std::move(c));
  }
  return ds;
}

void save_t1_dataset(const T1Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  RArray coords({2, ds.traj.readout_count, ds.traj.samples_per_readout});
  for (int64_t i = 0; i < ds.traj.sample_count(); ++i) {
    coords[i] = ds.traj.kx[static_cast<size_t>(i)];
    coords[ds.traj.sample_count() + i] = ds.traj.ky[static_cast<size_t>(i)];
  }
  save_f64(dir + "/trajectory.hrc", coords);
  RArray frames({ds.traj.readout_count});
  for (int64_t r = 0; r < ds.traj.readout_count; ++r) frames[r] = ds.traj.frame_of(r);
  save_f64(dir + "/frame_index.hrc", frames);
  save_f64(dir + "/basis.hrc", ds.basis.u);
  for (const auto& c : ds.cases) {
    save_c64(dir + "/" + c.id + "_kspace.hrc", c.kspace);
    save_f64(dir + "/" + c.id + "_t1_truth.hrc", c.truth_t1());
    save_f64(dir + "/" + c.id + "_interior.hrc", c.truth_interior());
  }
}

T1Dataset load_t1_dataset(const ExperimentConfig& cfg, const std::string& dir) {
  T1Dataset ds;
  ds.cfg = cfg;
  ds.traj = gen_golden_radial(cfg.spokes_per_rep, cfg.repetitions, cfg.samples_per_spoke,
                              cfg.spokes_per_frame);
  ds.times = cfg.frame_times();
  ds.basis.u = load_real(dir + "/basis.hrc");
  const int64_t total = cfg.train_cases + cfg.val_cases + cfg.test_cases;
  for (int64_t i = 0; i < total; ++i) {
    T1Case c;
    c.id = "case" + std::to_string(i);
    c.kspace = load_complex(dir + "/" + c.id + "_kspace.hrc");
    c.set_truth(load_real(dir + "/" + c.id + "_t1_truth.hrc"), load_real(dir + "/" + c.id + "_interior.hrc"));
    ds.cases.push_back(std::move(c));
  }
  return ds;
}

namespace {

struct Snapshot {
  std::vector<Tensor> tensors;
  static Snapshot take(UnrolledNetwork& net) {
    Snapshot s;
    for (const auto& p : net.parameters()) s.tensors.push_back(*p.tensor);
    return s;
  }
  void restore(UnrolledNetwork& net) const {
    auto params = net.parameters();
    for (size_t i = 0; i < params.size(); ++i) *params[i].tensor = tensors[i];
  }
};

void adam_from_graph(diff::AdamState& adam, diff::GraphParams& gp) {
  std::vector<Tensor> grads(gp.size());
  std::vector<diff::AdamUpdate> ups;
  for (size_t i = 0; i < gp.size(); ++i) {
    grads[i] = gp.grad(i);
    ups.push_back({gp.name(i), &gp.tensor(i), &grads[i]});
  }
  diff::adam_step(adam, ups);
}

// per-(case, budget) reconstruction inputs; recomputed where needed, cached
// by the training loops
struct CaseGrid {
  CArray kspace;          // [C, R', S] first-`reps` view
  Trajectory traj;        // matching view
  GrogOperators ops;      // self-calibrated per case
  GriddedKSpace grid;     // all samples (no split)
  CArray maps;            // estimated from the time-averaged grid
  CArray ysub;            // U^T W y
  std::shared_ptr<SubspaceDcOperator> mk;
};

CaseGrid make_case_grid(const ExperimentConfig& cfg, const T1Dataset& ds, int64_t case_idx,
                        int64_t reps) {
  CaseGrid cg;
  const auto keep = keep_first_repetitions(cfg.spokes_per_rep, cfg.repetitions, reps);
  cg.traj = undersample(ds.traj, keep);
  cg.kspace = undersample(ds.cases[static_cast<size_t>(case_idx)].kspace, keep);
  cg.ops = calibrate_grog(cg.kspace, cg.traj, cfg.matrix);
  cg.grid = grid_prepared(prepare_grog(cg.kspace, cg.traj, cg.ops, cfg.matrix));
  // time-averaged k-space for coil estimation
  const int64_t m = cfg.matrix, npix = m * m;
  const int64_t frames = cg.grid.frames();
  CArray avg({cfg.coils, m, m});
  RArray wsum({m, m});
  for (int64_t t = 0; t < frames; ++t)
    for (int64_t p = 0; p < npix; ++p) {
      const double w = cg.grid.weights[t * npix + p];
      if (w <= 0) continue;
      wsum[p] += w;
      for (int64_t c = 0; c < cfg.coils; ++c)
        avg[c * npix + p] += w * cg.grid.data[(t * cfg.coils + c) * npix + p];
    }
  for (int64_t p = 0; p < npix; ++p)
    if (wsum[p] > 0)
      for (int64_t c = 0; c < cfg.coils; ++c) avg[c * npix + p] /= wsum[p];
  cg.maps = estimate_sensitivities_cartesian(avg);
  cg.ysub = compress_weighted(cg.grid.data, cg.grid.weights, ds.basis);
  cg.mk = std::make_shared<SubspaceDcOperator>(precompute_Mk(ds.basis, cg.grid.mask, cg.grid.weights));
  return cg;
}

std::shared_ptr<const ComplexLinearMap> combine_map(const CArray& maps, int64_t k) {
  auto m = std::make_shared<const CArray>(maps);
  const int64_t nc = maps.dim(0), h = maps.dim(1), w = maps.dim(2);
  const int64_t npix = h * w;
  auto fwd = [m, k, nc, npix, h, w](const CArray& v) {
    CArray out({k, h, w});
    for (int64_t kk = 0; kk < k; ++kk)
      for (int64_t c = 0; c < nc; ++c)
        for (int64_t p = 0; p < npix; ++p)
          out[kk * npix + p] += std::conj((*m)[c * npix + p]) * v[(kk * nc + c) * npix + p];
    return out;
  };
  auto adj = [m, k, nc, npix, h, w](const CArray& v) {
    CArray out({k * nc, h, w});
    for (int64_t kk = 0; kk < k; ++kk)
      for (int64_t c = 0; c < nc; ++c)
        for (int64_t p = 0; p < npix; ++p)
          out[(kk * nc + c) * npix + p] = (*m)[c * npix + p] * v[kk * npix + p];
    return out;
  };
  return std::make_shared<const ComplexLinearMap>("subspace_coil_combine", Shape{k * nc, h, w},
                                                  Shape{k, h, w}, fwd, adj);
}

std::shared_ptr<const ComplexLinearMap> expand_map(const TemporalBasis& basis, int64_t h, int64_t w) {
  auto u = std::make_shared<const TemporalBasis>(basis);
  const int64_t k = basis.k(), t = basis.t();
  auto fwd = [u](const CArray& v) { return expand(v, *u); };
  auto adj = [u](const CArray& s) { return compress(s, *u); };
  return std::make_shared<const ComplexLinearMap>("basis_expand", Shape{k, h, w}, Shape{t, h, w}, fwd,
                                                  adj);
}

}  // namespace

TrainLog train_recon_ssdu(const ExperimentConfig& cfg, const T1Dataset& ds, int64_t reps,
                          UnrolledNetwork& net) {
  diff::AdamState adam;
  adam.cfg.lr = cfg.lr_stage1;
  diff::Rng ratio_rng(mix_seed(cfg.seed, 51, 1));

  // fixed per-case pieces: undersampled view, calibration, shifted deposits
  struct Fixed {
    Trajectory traj;
    GrogPrepared prep;
  };
  std::vector<Fixed> fixed;
  const auto keep = keep_first_repetitions(cfg.spokes_per_rep, cfg.repetitions, reps);
  for (const auto& c : ds.cases) {
    Fixed f;
    f.traj = undersample(ds.traj, keep);
    CArray kspace = undersample(c.kspace, keep);
    GrogOperators ops = calibrate_grog(kspace, f.traj, cfg.matrix);
    f.prep = prepare_grog(kspace, f.traj, ops, cfg.matrix);
    fixed.push_back(std::move(f));
  }

  auto case_loss = [&](int64_t ci, double ratio, uint64_t split_seed, bool train) {
    Fixed& f = fixed[static_cast<size_t>(ci)];
    SplitPair sp = split_readout(f.traj, ratio, split_seed, cfg.split_pattern);
    GriddedKSpace ga = grid_prepared(f.prep, &sp.mask_a);
    GriddedKSpace gb = grid_prepared(f.prep, &sp.mask_b);
    CArray ysub_a = compress_weighted(ga.data, ga.weights, ds.basis);
    CArray ysub_b = compress_weighted(gb.data, gb.weights, ds.basis);
    auto mk_a = std::make_shared<SubspaceDcOperator>(precompute_Mk(ds.basis, ga.mask, ga.weights));
    auto mk_b = std::make_shared<SubspaceDcOperator>(precompute_Mk(ds.basis, gb.mask, gb.weights));
    auto normal_a = make_subspace_normal_map(mk_a, cfg.coils);
    diff::Graph g;
    diff::GraphParams gp(g);
    NetworkFn fn = [&](diff::Graph&, diff::Graph::Id x0) { return net.forward(gp, x0, normal_a); };
    diff::Graph::Id loss = ssdu_loss_subspace(g, fn, ysub_a, ysub_b, mk_b);
    const double value = g.value(loss)[0];
    if (train) {
      g.backward(loss);
      adam_from_graph(adam, gp);
    }
    return value;
  };

  TrainLog log;
  double best = std::numeric_limits<double>::infinity();
  Snapshot best_snap = Snapshot::take(net);
  for (int epoch = 0; epoch < cfg.epochs_stage1; ++epoch) {
    double acc = 0;
    for (int64_t ci : ds.train_idx()) {
      const double ratio = sample_ratio(ratio_rng);
      acc += case_loss(ci, ratio, mix_seed(cfg.seed, 52, static_cast<uint64_t>(epoch * 1000 + ci)), true);
    }
    log.train_loss.push_back(acc / static_cast<double>(cfg.train_cases));
    if (std::isnan(log.train_loss.back()))
      throw std::runtime_error("train_recon_ssdu: loss diverged at epoch " + std::to_string(epoch));
    double val_acc = 0;
    for (int64_t ci : ds.val_idx())
      val_acc += case_loss(ci, 0.6, mix_seed(cfg.seed, 53, static_cast<uint64_t>(ci)), false);
    const double val = val_acc / static_cast<double>(std::max<int64_t>(1, cfg.val_cases));
    log.val_loss.push_back(val);
    if (val < best) {
      best = val;
      best_snap = Snapshot::take(net);
      log.best_epoch = epoch;
    }
  }
  best_snap.restore(net);
  return log;
}

CArray recon_series(const ExperimentConfig& cfg, const T1Dataset& ds, const UnrolledNetwork& net,
                    int64_t case_idx, int64_t reps) {
  CaseGrid cg = make_case_grid(cfg, ds, case_idx, reps);
  CArray x0 = subspace_adjoint_image(cg.ysub);
  auto normal = make_subspace_normal_map(cg.mk, cfg.coils);
  diff::Graph g;
  diff::GraphParams gp(g);
  diff::Graph::Id out = net.forward(gp, g.constant(complex_to_channels(x0)), normal);
  CArray v = channels_to_complex(g.value(out)).reshaped({ds.basis.k(), cfg.coils, cfg.matrix, cfg.matrix});
  // coil combine each component, then expand to the time series
  const int64_t npix = static_cast<int64_t>(cfg.matrix) * cfg.matrix;
  CArray vc({ds.basis.k(), cfg.matrix, cfg.matrix});
  for (int64_t k = 0; k < ds.basis.k(); ++k) {
    CArray comp({cfg.coils, cfg.matrix, cfg.matrix});
    for (int64_t c = 0; c < cfg.coils; ++c)
      for (int64_t p = 0; p < npix; ++p) comp[c * npix + p] = v[(k * cfg.coils + c) * npix + p];
    CArray combined = coil_combine(comp, cg.maps);
    for (int64_t p = 0; p < npix; ++p) vc[k * npix + p] = combined[p];
  }
  return expand(vc, ds.basis);
}

std::pair<RArray, std::vector<int64_t>> series_curves(const CArray& series, double threshold) {
  if (series.ndim() != 3) throw std::invalid_argument("series_curves: need [T, H, W]");
  const int64_t t = series.dim(0), npix = series.dim(1) * series.dim(2);
  // signed magnitude: phase-reference against the recovered last frame
  RArray peak({series.dim(1), series.dim(2)});
  double global_peak = 0;
  for (int64_t p = 0; p < npix; ++p) {
    for (int64_t tt = 0; tt < t; ++tt) peak[p] = std::max(peak[p], std::abs(series[tt * npix + p]));
    global_peak = std::max(global_peak, peak[p]);
  }
  std::vector<int64_t> pix;
  for (int64_t p = 0; p < npix; ++p)
    if (peak[p] > threshold * global_peak) pix.push_back(p);
  RArray curves({static_cast<int64_t>(pix.size()), t});
  for (size_t r = 0; r < pix.size(); ++r) {
    const int64_t p = pix[r];
    const cplx last = series[(t - 1) * npix + p];
    const cplx ref = std::abs(last) > 0 ? last / std::abs(last) : cplx(1, 0);
    for (int64_t tt = 0; tt < t; ++tt) {
      const cplx z = series[tt * npix + p];
      const double sign = (z * std::conj(ref)).real() >= 0 ? 1.0 : -1.0;
      curves.at(static_cast<int64_t>(r), tt) = sign * std::abs(z);
    }
  }
  return {std::move(curves), std::move(pix)};
}

FittingNetwork train_fitting_selfsup(const ExperimentConfig& cfg, const std::vector<CArray>& series,
                                     const std::vector<double>& times) {
  std::vector<RArray> curve_sets;
  int64_t total = 0;
  for (const CArray& s : series) {
    auto [curves, pix] = series_curves(s);
    total += curves.dim(0);
    curve_sets.push_back(std::move(curves));
  }
  const int64_t t = static_cast<int64_t>(times.size());
  RArray all({total, t});
  int64_t row = 0;
  for (const RArray& c : curve_sets)
    for (int64_t r = 0; r < c.dim(0); ++r, ++row)
      for (int64_t j = 0; j < t; ++j) all.at(row, j) = c.at(r, j);
  FittingNetwork net = FittingNetwork::init(t, mix_seed(cfg.seed, 61));
  FitTrainOptions opts;
  opts.epochs = cfg.fit_epochs;
  opts.batch = cfg.fit_batch;
  opts.lr = cfg.fit_lr;
  opts.seed = mix_seed(cfg.seed, 62);
  fit_network_selfsup_train(net, all, times, opts);
  return net;
}

FittingNetwork train_fitting_supervised(const ExperimentConfig& cfg,
                                        const std::vector<CArray>& series,
                                        const std::vector<RArray>& p_ref,
                                        const std::vector<double>& times) {
  if (series.size() != p_ref.size())
    throw std::invalid_argument("train_fitting_supervised: series/refs size mismatch");
  const int64_t t = static_cast<int64_t>(times.size());
  std::vector<std::array<double, 16>> dummy;
  std::vector<RArray> curve_sets;
  std::vector<RArray> ref_sets;
  int64_t total = 0;
  for (size_t i = 0; i < series.size(); ++i) {
    auto [curves, pix] = series_curves(series[i]);
    RArray refs({curves.dim(0), 3});
    const int64_t npix = p_ref[i].dim(1) * p_ref[i].dim(2);
    for (size_t r = 0; r < pix.size(); ++r)
      for (int64_t q = 0; q < 3; ++q) refs.at(static_cast<int64_t>(r), q) = p_ref[i][q * npix + pix[r]];
    total += curves.dim(0);
    curve_sets.push_back(std::move(curves));
    ref_sets.push_back(std::move(refs));
  }
  RArray all({total, t}), all_ref({total, 3});
  int64_t row = 0;
  for (size_t s = 0; s < curve_sets.size(); ++s)
    for (int64_t r = 0; r < curve_sets[s].dim(0); ++r, ++row) {
      for (int64_t j = 0; j < t; ++j) all.at(row, j) = curve_sets[s].at(r, j);
      for (int64_t q = 0; q < 3; ++q) all_ref.at(row, q) = ref_sets[s].at(r, q);
    }
  FittingNetwork net = FittingNetwork::init(t, mix_seed(cfg.seed, 63));
  FitTrainOptions opts;
  opts.epochs = cfg.fit_epochs;
  opts.batch = cfg.fit_batch;
  opts.lr = cfg.fit_lr;
  opts.seed = mix_seed(cfg.seed, 64);
  fit_network_sup_train(net, all, all_ref, times, opts);
  return net;
}

TrainLog train_recon_supervised(const ExperimentConfig& cfg, const T1Dataset& ds,
                                const std::vector<CArray>& ref_series, int64_t reps,
                                UnrolledNetwork& net) {
  if (ref_series.size() != ds.cases.size())
    throw std::invalid_argument("train_recon_supervised: need one reference per case");
  diff::AdamState adam;
  adam.cfg.lr = cfg.lr_stage2;

  struct CaseData {
    Tensor x0;
    std::shared_ptr<const ComplexLinearMap> normal, combine, expand_op;
    std::vector<Tensor> ref_mags;  // per frame
    double range = 0;
  };
  std::vector<CaseData> data(ds.cases.size());
  const int64_t frames = cfg.frames();
  for (int64_t ci = 0; ci < static_cast<int64_t>(ds.cases.size()); ++ci) {
    if (ref_series[static_cast<size_t>(ci)].numel() == 0) continue;  // test slots
    CaseGrid cg = make_case_grid(cfg, ds, ci, reps);
    CaseData& cd = data[static_cast<size_t>(ci)];
    cd.x0 = complex_to_channels(subspace_adjoint_image(cg.ysub));
    cd.normal = make_subspace_normal_map(cg.mk, cfg.coils);
    cd.combine = combine_map(cg.maps, ds.basis.k());
    cd.expand_op = expand_map(ds.basis, cfg.matrix, cfg.matrix);
    const CArray& ref = ref_series[static_cast<size_t>(ci)];
    for (int64_t f = 0; f < frames; ++f) {
      RArray mag({cfg.matrix, cfg.matrix});
      const int64_t npix = static_cast<int64_t>(cfg.matrix) * cfg.matrix;
      for (int64_t p = 0; p < npix; ++p) mag[p] = std::abs(ref[f * npix + p]);
      for (double v : mag.vec()) cd.range = std::max(cd.range, v);
      cd.ref_mags.push_back(std::move(mag));
    }
  }

  auto case_loss = [&](int64_t ci, bool train) {
    CaseData& cd = data[static_cast<size_t>(ci)];
    diff::Graph g;
    diff::GraphParams gp(g);
    diff::Graph::Id out = net.forward(gp, g.constant(cd.x0), cd.normal);
    diff::Graph::Id series = g.complex_abs(g.apply_linear(cd.expand_op, g.apply_linear(cd.combine, out)));
    diff::Graph::Id acc = -1;
    for (int64_t f = 0; f < frames; ++f) {
      diff::Graph::Id frame = g.select(series, f);
      diff::Graph::Id s = diff::ssim_loss(g, frame, g.constant(cd.ref_mags[static_cast<size_t>(f)]), cd.range);
      acc = f == 0 ? s : g.add(acc, s);
    }
    diff::Graph::Id loss = g.scale(acc, 1.0 / static_cast<double>(frames));
    const double value = g.value(loss)[0];
    if (train) {
      g.backward(loss);
      adam_from_graph(adam, gp);
    }
    return value;
  };

  TrainLog log;
  double best = std::numeric_limits<double>::infinity();
  Snapshot best_snap = Snapshot::take(net);
  for (int epoch = 0; epoch < cfg.epochs_stage2; ++epoch) {
    double acc = 0;
    for (int64_t ci : ds.train_idx()) acc += case_loss(ci, true);
    log.train_loss.push_back(acc / static_cast<double>(cfg.train_cases));
    if (std::isnan(log.train_loss.back()))
      throw std::runtime_error("train_recon_supervised: loss diverged at epoch " + std::to_string(epoch));
    double val_acc = 0;
    for (int64_t ci : ds.val_idx()) val_acc += case_loss(ci, false);
    const double val = val_acc / static_cast<double>(std::max<int64_t>(1, cfg.val_cases));
    log.val_loss.push_back(val);
    if (val < best) {
      best = val;
      best_snap = Snapshot::take(net);
      log.best_epoch = epoch;
    }
  }
  best_snap.restore(net);
  return log;
}

std::pair<RArray, T1Map> fit_maps(const FittingNetwork& fit, const CArray& series,
                                  const std::vector<double>& times, double threshold) {
  const int64_t h = series.dim(1), w = series.dim(2), npix = h * w;
  auto [curves, pix] = series_curves(series, threshold);
  RArray p({3, h, w});
  T1Map map;
  map.t1 = RArray({h, w});
  map.valid = RArray({h, w});
  const int64_t t = curves.dim(1);
  for (size_t r = 0; r < pix.size(); ++r) {
    std::vector<double> curve(static_cast<size_t>(t));
    for (int64_t j = 0; j < t; ++j) curve[static_cast<size_t>(j)] = curves.at(static_cast<int64_t>(r), j);
    ModelParams mp = fit.predict(curve, times);
    p[0 * npix + pix[r]] = mp.a;
    p[1 * npix + pix[r]] = mp.b;
    p[2 * npix + pix[r]] = mp.t1_star;
    const double t1 = t1_from_params(mp);
    if (t1_valid(t1)) {
      map.t1[pix[r]] = t1;
      map.valid[pix[r]] = 1.0;
    }
  }
  return {std::move(p), std::move(map)};
}

MetricsReport run_experiment2(const ExperimentConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  T1Dataset ds = simulate_t1(cfg);
  save_t1_dataset(ds, out_dir + "/data");
  const int64_t truth_baseline = ds.truth_accesses();
  const int64_t n_refs = cfg.train_cases + cfg.val_cases;

  // audit exports: a split, the gridded k-space of case 0, and its M_k
  {
    fs::create_directories(out_dir + "/audit");
    SplitPair sp = split_readout(ds.traj, 0.6, mix_seed(cfg.seed, 54, 0), cfg.split_pattern);
    save_f64(out_dir + "/audit/split_mask_a.hrc", sp.mask_a);
    save_f64(out_dir + "/audit/split_mask_b.hrc", sp.mask_b);
    CaseGrid cg = make_case_grid(cfg, ds, 0, cfg.repetitions);
    save_c64(out_dir + "/audit/case0_gridded.hrc", cg.grid.data);
    save_f64(out_dir + "/audit/case0_grid_mask.hrc", cg.grid.mask);
    save_f64(out_dir + "/audit/case0_grid_weights.hrc", cg.grid.weights);
    save_f64(out_dir + "/audit/case0_mk.hrc", cg.mk->m);
  }

  // ---- stage 1 on all repetitions: Recon Network A + Fitting Network A ----
  UnrolledNetwork recon_a =
      make_subspace_network(cfg.coils, cfg.k_components, cfg.blocks, mix_seed(cfg.seed, 71), cfg.hidden);
  TrainLog log_a = train_recon_ssdu(cfg, ds, cfg.repetitions, recon_a);
  std::cout << "[exp2] stage1 recon best val "
            << (log_a.best_epoch >= 0 ? log_a.val_loss[static_cast<size_t>(log_a.best_epoch)] : -1) << "\n";

  std::vector<CArray> ref_series(ds.cases.size());
  for (int64_t ci = 0; ci < n_refs; ++ci)
    ref_series[static_cast<size_t>(ci)] = recon_series(cfg, ds, recon_a, ci, cfg.repetitions);

  std::vector<CArray> train_series;
  for (int64_t ci : ds.train_idx()) train_series.push_back(ref_series[static_cast<size_t>(ci)]);
  FittingNetwork fit_a = train_fitting_selfsup(cfg, train_series, ds.times);

  std::vector<RArray> p_ref(ds.cases.size());
  fs::create_directories(out_dir + "/refs");
  for (int64_t ci = 0; ci < n_refs; ++ci) {
    auto [p, map] = fit_maps(fit_a, ref_series[static_cast<size_t>(ci)], ds.times);
    p_ref[static_cast<size_t>(ci)] = std::move(p);
    save_f64(out_dir + "/refs/" + ds.cases[static_cast<size_t>(ci)].id + "_t1_stage1.hrc", map.t1);
    save_pgm(out_dir + "/refs/" + ds.cases[static_cast<size_t>(ci)].id + "_t1_stage1.pgm", map.t1, 0, 3000);
  }
  {
    diff::AdamState dummy;
    auto pa = recon_a.parameters();
    save_checkpoint(out_dir + "/recon_a.ckpt", pa, dummy);
    auto fa = fit_a.parameters();
    save_checkpoint(out_dir + "/fitting_a.ckpt", fa, dummy);
  }

  // ---- stage 2 + SSL baseline per repetition budget ----
  MetricsReport report;
  for (int64_t budget : cfg.rep_budgets) {
    UnrolledNetwork recon_b =
        make_subspace_network(cfg.coils, cfg.k_components, cfg.blocks, mix_seed(cfg.seed, 72), cfg.hidden);
    TrainLog log_b = train_recon_supervised(cfg, ds, ref_series, budget, recon_b);
    std::cout << "[exp2] hybrid recon budget " << budget << " best val "
              << log_b.val_loss[static_cast<size_t>(log_b.best_epoch)] << "\n";
    std::vector<CArray> b_series;
    for (int64_t ci : ds.train_idx()) b_series.push_back(recon_series(cfg, ds, recon_b, ci, budget));
    std::vector<RArray> train_pref;
    for (int64_t ci : ds.train_idx()) train_pref.push_back(p_ref[static_cast<size_t>(ci)]);
    FittingNetwork fit_b = train_fitting_supervised(cfg, b_series, train_pref, ds.times);

    UnrolledNetwork recon_ssl =
        make_subspace_network(cfg.coils, cfg.k_components, cfg.blocks, mix_seed(cfg.seed, 71), cfg.hidden);
    TrainLog log_s = train_recon_ssdu(cfg, ds, budget, recon_ssl);
    std::cout << "[exp2] ssl recon budget " << budget << " best val "
              << log_s.val_loss[static_cast<size_t>(log_s.best_epoch)] << "\n";
    std::vector<CArray> ssl_series;
    for (int64_t ci : ds.train_idx()) ssl_series.push_back(recon_series(cfg, ds, recon_ssl, ci, budget));
    FittingNetwork fit_ssl = train_fitting_selfsup(cfg, ssl_series, ds.times);

    {
      diff::AdamState dummy;
      auto p1 = recon_b.parameters();
      save_checkpoint(out_dir + "/recon_b_n" + std::to_string(budget) + ".ckpt", p1, dummy);
      auto p2 = recon_ssl.parameters();
      save_checkpoint(out_dir + "/recon_ssl_n" + std::to_string(budget) + ".ckpt", p2, dummy);
    }

    if (ds.truth_accesses() != truth_baseline)
      throw std::runtime_error("stage separation violated: training touched the T1 truth");

    fs::create_directories(out_dir + "/maps");
    for (int64_t ci : ds.test_idx()) {
      const auto& c = ds.cases[static_cast<size_t>(ci)];
      auto eval_method = [&](const std::string& tag, const UnrolledNetwork& rnet,
                             const FittingNetwork& fnet) {
        CArray series = recon_series(cfg, ds, rnet, ci, budget);
        auto [p, map] = fit_maps(fnet, series, ds.times);
        RArray valid = map.valid;
        const RArray& interior = c.truth_interior();
        for (int64_t i = 0; i < valid.numel(); ++i) valid[i] *= interior[i];
        T1Bins bins = binned_t1_error(map.t1, c.truth_t1(), valid);
        for (const auto& b : bins.bins) {
          std::ostringstream name;
          name << "t1err_" << tag << "_n" << budget << "_bin" << static_cast<int>(b.lo);
          report.add(c.id, name.str(), b.mean_pct);
        }
        double overall = 0;
        int64_t count = 0;
        RArray err = relative_error_map(map.t1, c.truth_t1(), valid);
        for (int64_t i = 0; i < err.numel(); ++i)
          if (valid[i] > 0 && c.truth_t1()[i] > 0) {
            overall += err[i];
            ++count;
          }
        report.add(c.id, "t1err_" + tag + "_n" + std::to_string(budget),
                   count ? overall / static_cast<double>(count) : 0.0);
        save_f64(out_dir + "/maps/" + c.id + "_" + tag + "_n" + std::to_string(budget) + ".hrc", map.t1);
        save_pgm(out_dir + "/maps/" + c.id + "_" + tag + "_n" + std::to_string(budget) + ".pgm", map.t1,
                 0, 3000);
      };
      eval_method("hybrid", recon_b, fit_b);
      eval_method("ssl", recon_ssl, fit_ssl);
    }
  }

  // stage-1 reference quality on test cases (17-rep recon + fit)
  for (int64_t ci : ds.test_idx()) {
    const auto& c = ds.cases[static_cast<size_t>(ci)];
    CArray series = recon_series(cfg, ds, recon_a, ci, cfg.repetitions);
    auto [p, map] = fit_maps(fit_a, series, ds.times);
    RArray valid = map.valid;
    const RArray& interior = c.truth_interior();
    for (int64_t i = 0; i < valid.numel(); ++i) valid[i] *= interior[i];
    RArray err = relative_error_map(map.t1, c.truth_t1(), valid);
    double overall = 0;
    int64_t count = 0;
    for (int64_t i = 0; i < err.numel(); ++i)
      if (valid[i] > 0 && c.truth_t1()[i] > 0) {
        overall += err[i];
        ++count;
      }
    report.add(c.id, "t1err_stage1_full", count ? overall / static_cast<double>(count) : 0.0);
  }

  report.save_csv(out_dir + "/metrics.csv", cfg.summary());
  return report;
}

}  // namespace hr::exp2
