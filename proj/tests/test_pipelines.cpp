#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hr/config.hpp"
#include "hr/container.hpp"
#include "hr/experiment1.hpp"
#include "hr/experiment2.hpp"
#include "hr/losses.hpp"
#include "hr/metrics.hpp"
#include "test_util.hpp"

using namespace hr;
namespace fs = std::filesystem;

namespace {
struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("hr_test_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string read_bytes(const std::string& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_lung_cfg() {
  Config c = Config::from_string(R"(
experiment = lung
matrix = 24
coils = 3
noise_sigma = 0.06
seed = 9
train_cases = 3
val_cases = 1
test_cases = 1
blocks = 3
hidden = 8
epochs_stage1 = 4
epochs_stage2 = 4
interleaves = 40
samples_per_readout = 40
accel_rates = 2
)");
  ExperimentConfig cfg = ExperimentConfig::from_config(c);
  c.finish();
  return cfg;
}

ExperimentConfig tiny_t1_cfg() {
  Config c = Config::from_string(R"(
experiment = t1map
matrix = 24
coils = 3
noise_sigma = 0.01
seed = 4
train_cases = 2
val_cases = 1
test_cases = 1
blocks = 3
hidden = 8
epochs_stage1 = 3
epochs_stage2 = 3
spokes_per_rep = 24
repetitions = 6
samples_per_spoke = 40
spokes_per_frame = 4
rep_budgets = 3
fit_epochs = 150
fit_batch = 64
t1_grid_step = 25
)");
  ExperimentConfig cfg = ExperimentConfig::from_config(c);
  c.finish();
  return cfg;
}
}  // namespace

TEST_CASE("container: arrays round trip with header intact") {
  TempDir td("container");
  std::mt19937_64 rng(201);
  RArray a = hrt::random_tensor({3, 5}, rng);
  save_f64(td.str() + "/a.hrc", a);
  RArray b = load_real(td.str() + "/a.hrc");
  REQUIRE(b.shape() == a.shape());
  for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);

  const std::string bytes = read_bytes(td.str() + "/a.hrc");
  CHECK(bytes.rfind("HRC1 f64 2 3 5\n", 0) == 0);
  CHECK(bytes.size() == 15 + sizeof(double) * 15);

  CArray c = hrt::random_carray({2, 4}, rng);
  save_c64(td.str() + "/c.hrc", c);
  CArray c2 = load_complex(td.str() + "/c.hrc");
  for (int64_t i = 0; i < c.numel(); ++i) {
    CHECK(std::abs(c2[i].real() - c[i].real()) < 1e-6);  // float32 payload
    CHECK(std::abs(c2[i].imag() - c[i].imag()) < 1e-6);
  }
  const std::string cb = read_bytes(td.str() + "/c.hrc");
  CHECK(cb.rfind("HRC1 c64 2 2 4\n", 0) == 0);
  CHECK(cb.size() == 15 + 2 * sizeof(float) * 8);

  save_f32(td.str() + "/f.hrc", a);
  RArray f = load_real(td.str() + "/f.hrc");
  for (int64_t i = 0; i < a.numel(); ++i) CHECK(std::abs(f[i] - a[i]) < 1e-6);
}

TEST_CASE("checkpoint: reload reproduces identical parameters and ADAM state") {
  TempDir td("ckpt");
  std::mt19937_64 rng(202);
  Tensor w1 = hrt::random_tensor({4, 3}, rng), b1 = hrt::random_tensor({4}, rng);
  diff::AdamState adam;
  adam.cfg.lr = 0.017;
  Tensor g1 = w1, g2 = b1;
  diff::adam_step(adam, {{"w", &w1, &g1}, {"b", &b1, &g2}});
  std::vector<diff::ParamRef> params{{"w", &w1}, {"b", &b1}};
  save_checkpoint(td.str() + "/net.ckpt", params, adam);

  Tensor w2({4, 3}), b2({4});
  diff::AdamState adam2;
  std::vector<diff::ParamRef> params2{{"w", &w2}, {"b", &b2}};
  load_checkpoint(td.str() + "/net.ckpt", params2, &adam2);
  for (int64_t i = 0; i < w1.numel(); ++i) CHECK(w2[i] == w1[i]);
  for (int64_t i = 0; i < b1.numel(); ++i) CHECK(b2[i] == b1[i]);
  CHECK(adam2.step == adam.step);
  CHECK(adam2.cfg.lr == adam.cfg.lr);
  for (int64_t i = 0; i < 12; ++i) {
    CHECK(adam2.slots.at("w").m[i] == adam.slots.at("w").m[i]);
    CHECK(adam2.slots.at("w").v[i] == adam.slots.at("w").v[i]);
  }
  Tensor wrong({2, 2});
  std::vector<diff::ParamRef> bad{{"w", &wrong}};
  CHECK_THROWS(load_checkpoint(td.str() + "/net.ckpt", bad, nullptr));
}

TEST_CASE("config: parsing, defaults, and unknown-key rejection") {
  Config c = Config::from_string("experiment = lung\nmatrix = 32\n# comment\n seed=3 \n");
  ExperimentConfig cfg = ExperimentConfig::from_config(c);
  c.finish();
  CHECK(cfg.matrix == 32);
  CHECK(cfg.seed == 3);
  CHECK(cfg.lr_stage1 == 1e-4);

  Config bad = Config::from_string("experiment = lung\nnot_a_key = 5\n");
  ExperimentConfig::from_config(bad);
  CHECK_THROWS_AS(bad.finish(), std::runtime_error);

  CHECK_THROWS(Config::from_string("experiment lung\n"));
  CHECK_THROWS(Config::from_string("a = 1\na = 2\n"));
}

TEST_CASE("metrics: NMSE and relative-error arithmetic") {
  std::mt19937_64 rng(203);
  RArray x = hrt::random_tensor({6, 6}, rng, 0.2, 1.0);
  CHECK(nmse(x, x) == 0.0);
  RArray y = x;
  for (double& v : y.vec()) v *= 1.01;
  CHECK(std::abs(nmse(y, x) - 1e-4) < 1e-12);

  RArray pred({2, 2}), ref({2, 2}), valid = RArray::full({2, 2}, 1.0);
  pred.vec() = {900, 1000, 1500, 2000};
  ref.vec() = {1000, 1000, 1500, 1600};
  RArray err = relative_error_map(pred, ref, valid);
  CHECK(err[0] == doctest::Approx(10.0));
  CHECK(err[1] == 0.0);
  CHECK(err[2] == 0.0);
  CHECK(err[3] == doctest::Approx(25.0));

  T1Bins bins = binned_t1_error(pred, ref, valid);
  REQUIRE(bins.bins.size() == 3);
  CHECK(bins.bins[0].lo == 800);
  CHECK(bins.bins[0].mean_pct == doctest::Approx(5.0));  // 10% and 0% in [800,1200)
  CHECK(bins.bins[1].mean_pct == doctest::Approx(0.0));
  CHECK(bins.bins[2].mean_pct == doctest::Approx(25.0));  // 1600 in the last bin
}

TEST_CASE("metrics report: aggregate equals recomputation from rows") {
  TempDir td("report");
  MetricsReport rep;
  rep.add("c0", "ssim", 0.9);
  rep.add("c1", "ssim", 0.8);
  rep.add("c2", "ssim", 0.7);
  rep.add("c0", "nmse", 0.01);
  rep.save_csv(td.str() + "/m.csv", "header note");
  MetricsReport back = MetricsReport::load_csv(td.str() + "/m.csv");
  REQUIRE(back.rows().size() == 4);
  double mean = 0;
  for (double v : back.values("ssim")) mean += v;
  mean /= 3.0;
  CHECK(back.mean("ssim") == doctest::Approx(mean).epsilon(1e-15));
  CHECK(back.mean("ssim") == doctest::Approx(0.8));
  CHECK(back.stddev("ssim") == doctest::Approx(std::sqrt(0.02 / 3.0)));
}

TEST_CASE("simulate twice with one seed gives byte-identical datasets") {
  TempDir t1("sim1"), t2("sim2");
  ExperimentConfig cfg = tiny_lung_cfg();
  exp1::save_lung_dataset(exp1::simulate_lung(cfg), t1.str());
  exp1::save_lung_dataset(exp1::simulate_lung(cfg), t2.str());
  for (const auto& entry : fs::directory_iterator(t1.path)) {
    const std::string name = entry.path().filename().string();
    CHECK(read_bytes(entry.path().string()) == read_bytes((t2.path / name).string()));
  }
  // and a different seed changes the data
  ExperimentConfig cfg2 = cfg;
  cfg2.seed = cfg.seed + 1;
  exp1::LungDataset other = exp1::simulate_lung(cfg2);
  exp1::LungDataset base = exp1::load_lung_dataset(cfg, t1.str());
  bool differ = false;
  for (int64_t i = 0; i < base.cases[0].kspace.numel(); ++i)
    differ |= base.cases[0].kspace[i] != other.cases[0].kspace[i];
  CHECK(differ);
}

TEST_CASE("lung dataset round trips through the container files") {
  TempDir td("lungds");
  ExperimentConfig cfg = tiny_lung_cfg();
  exp1::LungDataset ds = exp1::simulate_lung(cfg);
  exp1::save_lung_dataset(ds, td.str());
  exp1::LungDataset back = exp1::load_lung_dataset(cfg, td.str());
  REQUIRE(back.cases.size() == ds.cases.size());
  // c64 storage is float32; compare at that precision
  for (size_t i = 0; i < ds.cases.size(); ++i)
    for (int64_t j = 0; j < ds.cases[i].kspace.numel(); j += 97)
      CHECK(std::abs(back.cases[i].kspace[j] - ds.cases[i].kspace[j]) < 1e-5);
}

TEST_CASE("exp1 tiny run: loss decreases, stage separation holds, metrics complete") {
  TempDir td("exp1run");
  ExperimentConfig cfg = tiny_lung_cfg();
  exp1::LungDataset ds = exp1::simulate_lung(cfg);
  const int64_t before = ds.truth_accesses();
  UnrolledNetwork net_a = make_spiral_network(cfg.coils, cfg.blocks, 1, cfg.hidden);
  exp1::TrainLog log = exp1::train_stage1(cfg, ds, net_a);
  CHECK(log.train_loss.size() == 4);
  // the train loss is not epoch-comparable (the split ratio is redrawn each
  // epoch); the validation loss uses a fixed ratio and must improve
  CHECK(*std::min_element(log.val_loss.begin(), log.val_loss.end()) < log.val_loss.front());
  CHECK(ds.truth_accesses() == before);  // training never touches the truth

  // checkpoint reload reproduces identical outputs
  diff::AdamState dummy;
  auto params = net_a.parameters();
  save_checkpoint(td.str() + "/a.ckpt", params, dummy);
  CArray rec1 = exp1::stage1_infer(cfg, ds, net_a, 0);
  UnrolledNetwork net_fresh = make_spiral_network(cfg.coils, cfg.blocks, 999, cfg.hidden);
  auto fresh_params = net_fresh.parameters();
  load_checkpoint(td.str() + "/a.ckpt", fresh_params, nullptr);
  CArray rec2 = exp1::stage1_infer(cfg, ds, net_fresh, 0);
  for (int64_t i = 0; i < rec1.numel(); ++i) CHECK(rec1[i] == rec2[i]);
}

TEST_CASE("exp1 stage2 degenerate run: R=1 reconstruction approaches its reference") {
  ExperimentConfig cfg = tiny_lung_cfg();
  cfg.noise_sigma = 0.0;
  cfg.epochs_stage1 = 2;
  cfg.epochs_stage2 = 30;
  cfg.accel_rates = {1};
  exp1::LungDataset ds = exp1::simulate_lung(cfg);
  UnrolledNetwork net_a = make_spiral_network(cfg.coils, cfg.blocks, 1, cfg.hidden);
  exp1::train_stage1(cfg, ds, net_a);
  std::vector<CArray> refs(ds.cases.size());
  for (int64_t ci = 0; ci < cfg.train_cases + cfg.val_cases; ++ci)
    refs[static_cast<size_t>(ci)] = exp1::stage1_infer(cfg, ds, net_a, ci);
  UnrolledNetwork net_b = make_spiral_network(cfg.coils, cfg.blocks, 2, cfg.hidden);
  exp1::train_stage2(cfg, ds, refs, 1, net_b);
  // reconstruct a training case and compare against its own reference
  CArray rec = exp1::infer_at(cfg, ds, net_b, 0, 1);
  RArray rm = magnitude(rec), fm = magnitude(refs[0]);
  double range = 0;
  for (double v : fm.vec()) range = std::max(range, v);
  CHECK(diff::ssim_value(rm, fm, range) > 0.99);
}

TEST_CASE("exp2 tiny run: loss decreases and the audit counters stay flat") {
  ExperimentConfig cfg = tiny_t1_cfg();
  exp2::T1Dataset ds = exp2::simulate_t1(cfg);
  const int64_t before = ds.truth_accesses();
  UnrolledNetwork net = make_subspace_network(cfg.coils, cfg.k_components, cfg.blocks, 3, cfg.hidden);
  exp2::TrainLog log = exp2::train_recon_ssdu(cfg, ds, cfg.repetitions, net);
  CHECK(*std::min_element(log.val_loss.begin(), log.val_loss.end()) < log.val_loss.front());
  CHECK(ds.truth_accesses() == before);

  CArray series = exp2::recon_series(cfg, ds, net, 0, cfg.repetitions);
  CHECK(series.shape() == Shape{cfg.frames(), cfg.matrix, cfg.matrix});

  // t1 dataset IO round trip
  TempDir td("t1ds");
  exp2::save_t1_dataset(ds, td.str());
  exp2::T1Dataset back = exp2::load_t1_dataset(cfg, td.str());
  CHECK(back.basis.u.shape() == ds.basis.u.shape());
  for (int64_t i = 0; i < ds.basis.u.numel(); ++i) CHECK(back.basis.u[i] == ds.basis.u[i]);
}

TEST_CASE("end-to-end determinism: identical tiny runs reproduce all metrics") {
  TempDir t1("det1"), t2("det2");
  ExperimentConfig cfg = tiny_lung_cfg();
  cfg.epochs_stage1 = 2;
  cfg.epochs_stage2 = 2;
  MetricsReport r1 = exp1::run_experiment1(cfg, t1.str());
  MetricsReport r2 = exp1::run_experiment1(cfg, t2.str());
  REQUIRE(r1.rows().size() == r2.rows().size());
  for (size_t i = 0; i < r1.rows().size(); ++i) {
    CHECK(r1.rows()[i].metric == r2.rows()[i].metric);
    CHECK(std::abs(r1.rows()[i].value - r2.rows()[i].value) <= 1e-6);
  }
}

TEST_CASE("evaluate on identical prediction/reference gives SSIM 1, NMSE 0") {
  std::mt19937_64 rng(204);
  CArray img = hrt::random_carray({16, 16}, rng);
  RArray m = magnitude(img);
  double range = 0;
  for (double v : m.vec()) range = std::max(range, v);
  CHECK(diff::ssim_value(m, m, range) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(nmse(m, m) == 0.0);
}

TEST_CASE("pgm export: window, header, and byte layout") {
  TempDir td("pgm");
  RArray img({2, 3});
  img.vec() = {0.0, 0.5, 1.0, 1.5, -0.5, 0.25};
  save_pgm(td.str() + "/i.pgm", img, 0.0, 1.0, 8);
  const std::string bytes = read_bytes(td.str() + "/i.pgm");
  CHECK(bytes.rfind("P5\n3 2\n255\n", 0) == 0);
  const auto* px = reinterpret_cast<const uint8_t*>(bytes.data() + 11);
  CHECK(px[0] == 0);
  CHECK(px[1] == 128);
  CHECK(px[2] == 255);
  CHECK(px[3] == 255);  // clipped
  CHECK(px[4] == 0);    // clipped
}
