#pragma once

#include "hr/coils.hpp"
#include "hr/config.hpp"
#include "hr/metrics.hpp"
#include "hr/ssdu.hpp"
#include "hr/unrolled.hpp"

namespace hr::exp1 {

/// One simulated lung acquisition. The clean truth is gated behind an
/// access-counting reader so the orchestrator can assert that the training
/// stages never touch it (only `evaluate` does).
class LungCase {
 public:
  std::string id;
  CArray kspace;  // [C, R, S] noisy, fully sampled spiral
  CArray maps;    // sensitivities estimated from the data itself

  void set_truth(CArray t) { truth_ = std::move(t); }
  const CArray& truth() const {
    ++truth_reads_;
    return truth_;
  }
  int64_t truth_access_count() const { return truth_reads_; }

 private:
  CArray truth_;  // clean coil-combined phantom image [M, M]
  mutable int64_t truth_reads_ = 0;
};

struct LungDataset {
  ExperimentConfig cfg;
  Trajectory traj;
  DensityCompensation dcf;
  std::vector<LungCase> cases;  // [0,train) train, then val, then test

  std::vector<int64_t> train_idx() const;
  std::vector<int64_t> val_idx() const;
  std::vector<int64_t> test_idx() const;
  int64_t truth_accesses() const;
};

LungDataset simulate_lung(const ExperimentConfig& cfg);
void save_lung_dataset(const LungDataset& ds, const std::string& dir);
LungDataset load_lung_dataset(const ExperimentConfig& cfg, const std::string& dir);

struct TrainLog {
  std::vector<double> train_loss, val_loss;
  int best_epoch = -1;
};

/// Stage 1 (Network A): per-epoch random-ratio k-space splitting and the
/// mixed L1-L2 self-supervised loss on fully sampled noisy data. The best
/// validation checkpoint is restored into `net`.
TrainLog train_stage1(const ExperimentConfig& cfg, const LungDataset& ds, UnrolledNetwork& net);

/// Denoised coil-combined image: full-trajectory adjoint -> Network A ->
/// coil combine, no k-space splitting.
CArray stage1_infer(const ExperimentConfig& cfg, const LungDataset& ds, const UnrolledNetwork& net,
                    int64_t case_idx);

/// Stage 2 (Network B): retrospective undersampling at `accel`, SSIM loss
/// against per-case reference images (stage-1 outputs for hybrid, noisy
/// full recons for the supervised baseline).
TrainLog train_stage2(const ExperimentConfig& cfg, const LungDataset& ds,
                      const std::vector<CArray>& refs, int64_t accel, UnrolledNetwork& net);

/// Self-supervised-only baseline: stage-1-style training directly on the
/// R-undersampled data. Identical architecture, epochs and seeds.
TrainLog train_ssl_at(const ExperimentConfig& cfg, const LungDataset& ds, int64_t accel,
                      UnrolledNetwork& net);

/// Coil-combined reconstruction of one case from R-undersampled data.
CArray infer_at(const ExperimentConfig& cfg, const LungDataset& ds, const UnrolledNetwork& net,
                int64_t case_idx, int64_t accel);

/// Plain weighted-adjoint (NUFFT) recon, accel = 1 for the noisy full image.
CArray adjoint_recon(const ExperimentConfig& cfg, const LungDataset& ds, int64_t case_idx,
                     int64_t accel = 1);

/// Full pipeline: simulate (or load), stage 1, stage 2 + baselines at every
/// configured acceleration, evaluation on the held-out test cases. Writes
/// checkpoints, references, reconstructions and metrics under out_dir.
MetricsReport run_experiment1(const ExperimentConfig& cfg, const std::string& out_dir);

uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c = 0);

}  // namespace hr::exp1
