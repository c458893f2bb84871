#include "hr/experiment1.hpp"

#include <filesystem>
#include <iostream>

#include "hr/container.hpp"
#include "hr/losses.hpp"
#include "hr/phantom.hpp"

namespace hr::exp1 {

namespace fs = std::filesystem;

uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  uint64_t x = a * 0x9e3779b97f4a7c15ull + b * 0xbf58476d1ce4e5b9ull + c * 0x94d049bb133111ebull + 1;
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

std::vector<int64_t> LungDataset::train_idx() const {
  std::vector<int64_t> v(static_cast<size_t>(cfg.train_cases));
  std::iota(v.begin(), v.end(), 0);
  return v;
}
std::vector<int64_t> LungDataset::val_idx() const {
  std::vector<int64_t> v(static_cast<size_t>(cfg.val_cases));
  std::iota(v.begin(), v.end(), cfg.train_cases);
  return v;
}
std::vector<int64_t> LungDataset::test_idx() const {
  std::vector<int64_t> v(static_cast<size_t>(cfg.test_cases));
  std::iota(v.begin(), v.end(), cfg.train_cases + cfg.val_cases);
  return v;
}
int64_t LungDataset::truth_accesses() const {
  int64_t n = 0;
  for (const auto& c : cases) n += c.truth_access_count();
  return n;
}

LungDataset simulate_lung(const ExperimentConfig& cfg) {
  LungDataset ds;
  ds.cfg = cfg;
  ds.traj = gen_spiral(cfg.interleaves, cfg.samples_per_readout, cfg.matrix);
  ds.dcf = density_compensation(ds.traj, cfg.matrix);
  auto plan = std::make_shared<GriddingPlan>(ds.traj, cfg.matrix);
  RArray unit = RArray::full({ds.traj.readout_count, ds.traj.samples_per_readout}, 1.0);
  const int64_t total = cfg.train_cases + cfg.val_cases + cfg.test_cases;
  for (int64_t i = 0; i < total; ++i) {
    LungCase c;
    c.id = "case" + std::to_string(i);
    PhantomSpec spec = lung_phantom_spec(cfg.matrix, mix_seed(cfg.seed, 11, static_cast<uint64_t>(i)));
    CArray truth = gen_static_phantom(spec);
    CArray maps_true =
        gen_coil_sensitivities(cfg.coils, cfg.matrix, mix_seed(cfg.seed, 12, static_cast<uint64_t>(i)));
    CArray y = encode(truth, maps_true, *plan, unit);
    double rms = norm2(y) / std::sqrt(static_cast<double>(y.numel()));
    c.kspace = add_complex_noise(y, cfg.noise_sigma * rms, mix_seed(cfg.seed, 13, static_cast<uint64_t>(i)));
    c.maps = estimate_sensitivities(c.kspace, ds.traj, cfg.matrix);
    c.set_truth(std::move(truth));
    ds.cases.push_back(std::move(c));
  }
  return ds;
}

void save_lung_dataset(const LungDataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  RArray coords({2, ds.traj.readout_count, ds.traj.samples_per_readout});
  for (int64_t i = 0; i < ds.traj.sample_count(); ++i) {
    coords[i] = ds.traj.kx[static_cast<size_t>(i)];
    coords[ds.traj.sample_count() + i] = ds.traj.ky[static_cast<size_t>(i)];
  }
  save_f64(dir + "/trajectory.hrc", coords);
  save_f64(dir + "/dcf.hrc", ds.dcf);
  for (const auto& c : ds.cases) {
    save_c64(dir + "/" + c.id + "_kspace.hrc", c.kspace);
    save_c64(dir + "/" + c.id + "_maps.hrc", c.maps);
    save_c64(dir + "/" + c.id + "_truth.hrc", c.truth());
  }
}

LungDataset load_lung_dataset(const ExperimentConfig& cfg, const std::string& dir) {
  LungDataset ds;
  ds.cfg = cfg;
  ds.traj = gen_spiral(cfg.interleaves, cfg.samples_per_readout, cfg.matrix);
  ds.dcf = load_real(dir + "/dcf.hrc");
  const int64_t total = cfg.train_cases + cfg.val_cases + cfg.test_cases;
  for (int64_t i = 0; i < total; ++i) {
    LungCase c;
    c.id = "case" + std::to_string(i);
    c.kspace = load_complex(dir + "/" + c.id + "_kspace.hrc");
    c.maps = load_complex(dir + "/" + c.id + "_maps.hrc");
    c.set_truth(load_complex(dir + "/" + c.id + "_truth.hrc"));
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

// undersampled view shared by stage-2 training, baselines and inference
struct AccelContext {
  Trajectory traj;
  DensityCompensation dcf;
  std::shared_ptr<NufftEncoder> enc;
  std::vector<int64_t> keep;
};

AccelContext make_accel(const ExperimentConfig& cfg, const LungDataset& ds, int64_t accel) {
  AccelContext ax;
  ax.keep = accel <= 1 ? keep_strided(ds.traj.readout_count, 1) : keep_strided(ds.traj.readout_count, accel);
  ax.traj = undersample(ds.traj, ax.keep);
  ax.dcf = density_compensation(ax.traj, cfg.matrix);
  ax.enc = std::make_shared<NufftEncoder>(std::make_shared<GriddingPlan>(ax.traj, cfg.matrix));
  return ax;
}

// SSDU training shared by stage 1 (accel = 1) and the SSL baseline
TrainLog train_ssdu(const ExperimentConfig& cfg, const LungDataset& ds, int64_t accel,
                    UnrolledNetwork& net, uint64_t seed_tag) {
  AccelContext ax = make_accel(cfg, ds, accel);
  const int64_t ncoils = cfg.coils;
  diff::AdamState adam;
  adam.cfg.lr = cfg.lr_stage1;
  diff::Rng ratio_rng(mix_seed(cfg.seed, seed_tag, 1));

  auto case_loss = [&](int64_t ci, double ratio, uint64_t split_seed, bool train) {
    const auto& c = ds.cases[static_cast<size_t>(ci)];
    CArray y = accel <= 1 ? c.kspace : undersample(c.kspace, ax.keep);
    SplitPair sp = split_readout(ax.traj, ratio, split_seed, cfg.split_pattern);
    auto normal_a = make_coilwise_normal_map(ax.enc, subset_dcf(ax.traj, ax.dcf, sp.mask_a), ncoils);
    diff::Graph g;
    diff::GraphParams gp(g);
    NetworkFn fn = [&](diff::Graph&, diff::Graph::Id x0) { return net.forward(gp, x0, normal_a); };
    diff::Graph::Id loss = ssdu_loss_spiral(g, fn, ax.enc, y, ax.traj, ax.dcf, sp);
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
    double train_acc = 0;
    for (int64_t ci : ds.train_idx()) {
      const double ratio = sample_ratio(ratio_rng);
      train_acc += case_loss(ci, ratio, mix_seed(cfg.seed, seed_tag + 2, static_cast<uint64_t>(epoch * 1000 + ci)),
                             true);
    }
    log.train_loss.push_back(train_acc / static_cast<double>(cfg.train_cases));
    double val_acc = 0;
    for (int64_t ci : ds.val_idx())
      val_acc += case_loss(ci, 0.6, mix_seed(cfg.seed, seed_tag + 3, static_cast<uint64_t>(ci)), false);
    const double val = val_acc / static_cast<double>(std::max<int64_t>(1, cfg.val_cases));
    log.val_loss.push_back(val);
    if (std::isnan(log.train_loss.back()))
      throw std::runtime_error("train_ssdu: loss diverged to NaN at epoch " + std::to_string(epoch));
    if (val < best) {
      best = val;
      best_snap = Snapshot::take(net);
      log.best_epoch = epoch;
    }
  }
  best_snap.restore(net);
  return log;
}

CArray combined_recon(const ExperimentConfig& cfg, const AccelContext& ax, const UnrolledNetwork& net,
                      const CArray& y, const CArray& maps) {
  CArray x0 = coilwise_adjoint(*ax.enc, y, ax.dcf);
  auto normal = make_coilwise_normal_map(ax.enc, ax.dcf, cfg.coils);
  diff::Graph g;
  diff::GraphParams gp(g);
  diff::Graph::Id out = net.forward(gp, g.constant(complex_to_channels(x0)), normal);
  return coil_combine(channels_to_complex(g.value(out)), maps);
}

}  // namespace

TrainLog train_stage1(const ExperimentConfig& cfg, const LungDataset& ds, UnrolledNetwork& net) {
  return train_ssdu(cfg, ds, 1, net, 21);
}

TrainLog train_ssl_at(const ExperimentConfig& cfg, const LungDataset& ds, int64_t accel,
                      UnrolledNetwork& net) {
  return train_ssdu(cfg, ds, accel, net, 21);  // same seeds as hybrid stage 1: parity
}

CArray stage1_infer(const ExperimentConfig& cfg, const LungDataset& ds, const UnrolledNetwork& net,
                    int64_t case_idx) {
  AccelContext ax = make_accel(cfg, ds, 1);
  const auto& c = ds.cases[static_cast<size_t>(case_idx)];
  return combined_recon(cfg, ax, net, c.kspace, c.maps);
}

CArray infer_at(const ExperimentConfig& cfg, const LungDataset& ds, const UnrolledNetwork& net,
                int64_t case_idx, int64_t accel) {
  AccelContext ax = make_accel(cfg, ds, accel);
  const auto& c = ds.cases[static_cast<size_t>(case_idx)];
  CArray y = accel <= 1 ? c.kspace : undersample(c.kspace, ax.keep);
  CArray maps = accel <= 1 ? c.maps : estimate_sensitivities(y, ax.traj, cfg.matrix);
  return combined_recon(cfg, ax, net, y, maps);
}

CArray adjoint_recon(const ExperimentConfig& cfg, const LungDataset& ds, int64_t case_idx,
                     int64_t accel) {
  AccelContext ax = make_accel(cfg, ds, accel);
  const auto& c = ds.cases[static_cast<size_t>(case_idx)];
  CArray y = accel <= 1 ? c.kspace : undersample(c.kspace, ax.keep);
  CArray maps = accel <= 1 ? c.maps : estimate_sensitivities(y, ax.traj, cfg.matrix);
  return coil_combine(coilwise_adjoint(*ax.enc, y, ax.dcf), maps);
}

TrainLog train_stage2(const ExperimentConfig& cfg, const LungDataset& ds,
                      const std::vector<CArray>& refs, int64_t accel, UnrolledNetwork& net) {
  if (refs.size() != ds.cases.size())
    throw std::invalid_argument("train_stage2: need one reference per case (train + val)");
  AccelContext ax = make_accel(cfg, ds, accel);
  const int64_t ncoils = cfg.coils;
  auto normal = make_coilwise_normal_map(ax.enc, ax.dcf, ncoils);
  diff::AdamState adam;
  adam.cfg.lr = cfg.lr_stage2;

  // per-case inputs are fixed across epochs; precompute
  struct CaseData {
    Tensor x0;
    std::shared_ptr<const ComplexLinearMap> combine;
    Tensor ref_mag;
    double range;
  };
  std::vector<CaseData> data;
  for (const auto& c : ds.cases) {
    CaseData cd;
    CArray y = accel <= 1 ? c.kspace : undersample(c.kspace, ax.keep);
    CArray maps = accel <= 1 ? c.maps : estimate_sensitivities(y, ax.traj, cfg.matrix);
    cd.x0 = complex_to_channels(coilwise_adjoint(*ax.enc, y, ax.dcf));
    auto maps_ptr = std::make_shared<const CArray>(maps);
    const int64_t m = cfg.matrix;
    cd.combine = std::make_shared<const ComplexLinearMap>(
        "coil_combine", Shape{ncoils, m, m}, Shape{1, m, m},
        [maps_ptr, m](const CArray& imgs) { return coil_combine(imgs, *maps_ptr).reshaped({1, m, m}); },
        [maps_ptr](const CArray& img) {
          return coil_expand(img.reshaped({img.dim(1), img.dim(2)}), *maps_ptr);
        });
    data.push_back(std::move(cd));
  }
  for (size_t i = 0; i < ds.cases.size(); ++i) {
    const CArray& r = refs[i];
    if (r.numel() == 0) continue;  // test-case slots stay empty
    data[i].ref_mag = magnitude(r);
    double mx = 0;
    for (double v : data[i].ref_mag.vec()) mx = std::max(mx, v);
    data[i].range = mx;
  }

  auto case_loss = [&](int64_t ci, bool train) {
    CaseData& cd = data[static_cast<size_t>(ci)];
    diff::Graph g;
    diff::GraphParams gp(g);
    diff::Graph::Id out = net.forward(gp, g.constant(cd.x0), normal);
    diff::Graph::Id mag =
        g.reshape(g.complex_abs(g.apply_linear(cd.combine, out)), {cfg.matrix, cfg.matrix});
    diff::Graph::Id loss = diff::ssim_loss(g, mag, g.constant(cd.ref_mag), cd.range);
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
    double train_acc = 0;
    for (int64_t ci : ds.train_idx()) train_acc += case_loss(ci, true);
    log.train_loss.push_back(train_acc / static_cast<double>(cfg.train_cases));
    if (std::isnan(log.train_loss.back()))
      throw std::runtime_error("train_stage2: loss diverged to NaN at epoch " + std::to_string(epoch));
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

MetricsReport run_experiment1(const ExperimentConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  LungDataset ds = simulate_lung(cfg);
  save_lung_dataset(ds, out_dir + "/data");
  const int64_t truth_baseline = ds.truth_accesses();

  // audit exports: one concrete split for inspection
  {
    fs::create_directories(out_dir + "/audit");
    SplitPair sp = split_readout(ds.traj, 0.6, mix_seed(cfg.seed, 24, 0), cfg.split_pattern);
    save_f64(out_dir + "/audit/split_mask_a.hrc", sp.mask_a);
    save_f64(out_dir + "/audit/split_mask_b.hrc", sp.mask_b);
  }

  // ---- stage 1: Network A (self-supervised denoiser) ----
  UnrolledNetwork net_a = make_spiral_network(cfg.coils, cfg.blocks, mix_seed(cfg.seed, 31), cfg.hidden);
  TrainLog log_a = train_stage1(cfg, ds, net_a);
  {
    diff::AdamState dummy;
    dummy.cfg.lr = cfg.lr_stage1;
    auto params = net_a.parameters();
    save_checkpoint(out_dir + "/network_a.ckpt", params, dummy);
  }
  std::cout << "[exp1] stage1 best val loss "
            << (log_a.best_epoch >= 0 ? log_a.val_loss[static_cast<size_t>(log_a.best_epoch)] : -1)
            << " at epoch " << log_a.best_epoch << "\n";

  // denoised references for train + val cases
  std::vector<CArray> refs(ds.cases.size());
  fs::create_directories(out_dir + "/refs");
  for (int64_t ci = 0; ci < cfg.train_cases + cfg.val_cases; ++ci) {
    refs[static_cast<size_t>(ci)] = stage1_infer(cfg, ds, net_a, ci);
    save_c64(out_dir + "/refs/" + ds.cases[static_cast<size_t>(ci)].id + "_denoised.hrc",
             refs[static_cast<size_t>(ci)]);
  }

  // noisy-recon references for the supervised baseline
  std::vector<CArray> noisy_refs(ds.cases.size());
  for (int64_t ci = 0; ci < cfg.train_cases + cfg.val_cases; ++ci)
    noisy_refs[static_cast<size_t>(ci)] = adjoint_recon(cfg, ds, ci, 1);

  // ---- stage 2 + baselines per acceleration ----
  std::map<int64_t, UnrolledNetwork> hybrid, supervised, ssl;
  for (int64_t r : cfg.accel_rates) {
    UnrolledNetwork nb = make_spiral_network(cfg.coils, cfg.blocks, mix_seed(cfg.seed, 32), cfg.hidden);
    TrainLog lb = train_stage2(cfg, ds, refs, r, nb);
    std::cout << "[exp1] hybrid R=" << r << " best val " << lb.val_loss[static_cast<size_t>(lb.best_epoch)]
              << "\n";
    UnrolledNetwork ns = make_spiral_network(cfg.coils, cfg.blocks, mix_seed(cfg.seed, 32), cfg.hidden);
    TrainLog lsup = train_stage2(cfg, ds, noisy_refs, r, ns);
    std::cout << "[exp1] supervised R=" << r << " best val "
              << lsup.val_loss[static_cast<size_t>(lsup.best_epoch)] << "\n";
    UnrolledNetwork nl = make_spiral_network(cfg.coils, cfg.blocks, mix_seed(cfg.seed, 32), cfg.hidden);
    TrainLog lssl = train_ssl_at(cfg, ds, r, nl);
    std::cout << "[exp1] ssl R=" << r << " best val " << lssl.val_loss[static_cast<size_t>(lssl.best_epoch)]
              << "\n";
    {
      diff::AdamState dummy;
      auto p1 = nb.parameters();
      save_checkpoint(out_dir + "/network_b_r" + std::to_string(r) + ".ckpt", p1, dummy);
      auto p2 = ns.parameters();
      save_checkpoint(out_dir + "/supervised_r" + std::to_string(r) + ".ckpt", p2, dummy);
      auto p3 = nl.parameters();
      save_checkpoint(out_dir + "/ssl_r" + std::to_string(r) + ".ckpt", p3, dummy);
    }
    hybrid.emplace(r, std::move(nb));
    supervised.emplace(r, std::move(ns));
    ssl.emplace(r, std::move(nl));
  }

  if (ds.truth_accesses() != truth_baseline)
    throw std::runtime_error("stage separation violated: training touched the clean truth");

  // ---- evaluation (the only consumer of the clean truth) ----
  MetricsReport report;
  fs::create_directories(out_dir + "/recon");
  for (int64_t ci : ds.test_idx()) {
    const auto& c = ds.cases[static_cast<size_t>(ci)];
    RArray truth_mag = magnitude(c.truth());
    double range = 0;
    for (double v : truth_mag.vec()) range = std::max(range, v);
    auto score = [&](const std::string& tag, const CArray& rec) {
      RArray rec_mag = magnitude(rec);
      report.add(c.id, "ssim_" + tag, diff::ssim_value(rec_mag, truth_mag, range));
      report.add(c.id, "nmse_" + tag, nmse(rec_mag, truth_mag));
      save_c64(out_dir + "/recon/" + c.id + "_" + tag + ".hrc", rec);
      double mx = 0;
      for (double v : rec_mag.vec()) mx = std::max(mx, v);
      save_pgm(out_dir + "/recon/" + c.id + "_" + tag + ".pgm", rec_mag, 0.0, std::max(mx, 1e-12));
    };
    score("input_r1", adjoint_recon(cfg, ds, ci, 1));
    score("denoised_r1", stage1_infer(cfg, ds, net_a, ci));
    for (int64_t r : cfg.accel_rates) {
      score("input_r" + std::to_string(r), adjoint_recon(cfg, ds, ci, r));
      score("hybrid_r" + std::to_string(r), infer_at(cfg, ds, hybrid.at(r), ci, r));
      score("supervised_r" + std::to_string(r), infer_at(cfg, ds, supervised.at(r), ci, r));
      score("ssl_r" + std::to_string(r), infer_at(cfg, ds, ssl.at(r), ci, r));
    }
  }
  report.save_csv(out_dir + "/metrics.csv", cfg.summary());
  return report;
}

}  // namespace hr::exp1
