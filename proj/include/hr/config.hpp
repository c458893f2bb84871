#pragma once

#include <optional>
#include <map>
#include <string>
#include <vector>

#include "hr/ssdu.hpp"

namespace hr {

/// `key = value` per line, `#` comments, unknown keys rejected once every
/// consumer has taken its keys.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  std::string take_string(const std::string& key, std::optional<std::string> def = {});
  double take_double(const std::string& key, std::optional<double> def = {});
  int64_t take_int(const std::string& key, std::optional<int64_t> def = {});
  std::vector<int64_t> take_int_list(const std::string& key, std::vector<int64_t> def);
  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  /// Throws listing any keys nobody consumed.
  void finish() const;

 private:
  std::map<std::string, std::string> kv_;
};

enum class ExperimentKind { lung, t1map };

/// Scan/training parameters for both experiments; desk-scale defaults.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::lung;
  int matrix = 48;
  int64_t coils = 4;
  double noise_sigma = 0.0;
  uint64_t seed = 1;
  int64_t train_cases = 20;
  int64_t val_cases = 4;
  int64_t test_cases = 5;
  int blocks = 6;
  int64_t hidden = 16;
  int epochs_stage1 = 40;
  int epochs_stage2 = 40;
  double lr_stage1 = 0;  // default set per experiment when 0
  double lr_stage2 = 0;
  SplitPattern split_pattern = SplitPattern::bernoulli;

  // lung (spiral)
  int64_t interleaves = 80;
  int64_t samples_per_readout = 76;
  std::vector<int64_t> accel_rates{2, 3};

  // t1map (radial IR)
  int64_t spokes_per_rep = 48;
  int64_t repetitions = 17;
  int64_t samples_per_spoke = 76;
  int64_t spokes_per_frame = 4;
  int64_t k_components = 4;
  double flip_deg = 5.0;
  double tr_ms = 8.0;
  double rep_duration_ms = 5000.0;
  std::vector<int64_t> rep_budgets{8, 5, 3};
  int fit_epochs = 800;
  int64_t fit_batch = 256;
  double fit_lr = 3e-4;
  double t1_grid_lo = 100, t1_grid_hi = 3000, t1_grid_step = 5;

  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_config(Config& c);

  int64_t frames() const { return spokes_per_rep / spokes_per_frame; }
  std::vector<double> frame_times() const;
  /// one-line provenance header recorded in reports
  std::string summary() const;
};

}  // namespace hr
