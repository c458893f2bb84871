#include "hr/config.hpp"

#include <fstream>
#include <sstream>

namespace hr {

namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config c;
  std::istringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) + " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config: empty key at line " + std::to_string(lineno));
    if (c.kv_.count(key)) throw std::runtime_error("config: duplicate key '" + key + "'");
    c.kv_[key] = value;
  }
  return c;
}

std::string Config::take_string(const std::string& key, std::optional<std::string> def) {
  auto it = kv_.find(key);
  if (it == kv_.end()) {
    if (def) return *def;
    throw std::runtime_error("config: missing required key '" + key + "'");
  }
  std::string v = it->second;
  kv_.erase(it);
  return v;
}

double Config::take_double(const std::string& key, std::optional<double> def) {
  auto it = kv_.find(key);
  if (it == kv_.end()) {
    if (def) return *def;
    throw std::runtime_error("config: missing required key '" + key + "'");
  }
  size_t used = 0;
  const double v = std::stod(it->second, &used);
  if (used != it->second.size()) throw std::runtime_error("config: bad number for '" + key + "'");
  kv_.erase(it);
  return v;
}

int64_t Config::take_int(const std::string& key, std::optional<int64_t> def) {
  auto it = kv_.find(key);
  if (it == kv_.end()) {
    if (def) return *def;
    throw std::runtime_error("config: missing required key '" + key + "'");
  }
  size_t used = 0;
  const int64_t v = std::stoll(it->second, &used, 10);
  if (used != it->second.size()) throw std::runtime_error("config: bad integer for '" + key + "'");
  kv_.erase(it);
  return v;
}

std::vector<int64_t> Config::take_int_list(const std::string& key, std::vector<int64_t> def) {
  auto it = kv_.find(key);
  if (it == kv_.end()) return def;
  std::vector<int64_t> out;
  std::istringstream ss(it->second);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(std::stoll(tok));
  }
  if (out.empty()) throw std::runtime_error("config: empty list for '" + key + "'");
  kv_.erase(it);
  return out;
}

void Config::finish() const {
  if (kv_.empty()) return;
  std::string msg = "config: unknown keys:";
  for (const auto& [k, v] : kv_) msg += " '" + k + "'";
  throw std::runtime_error(msg);
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  Config c = Config::from_file(path);
  ExperimentConfig cfg = from_config(c);
  c.finish();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_config(Config& c) {
  ExperimentConfig cfg;
  const std::string kind = c.take_string("experiment");
  if (kind == "lung") {
    cfg.experiment = ExperimentKind::lung;
  } else if (kind == "t1map") {
    cfg.experiment = ExperimentKind::t1map;
  } else {
    throw std::runtime_error("config: experiment must be 'lung' or 't1map', got '" + kind + "'");
  }
  cfg.matrix = static_cast<int>(c.take_int("matrix", 48));
  cfg.coils = c.take_int("coils", 4);
  cfg.noise_sigma = c.take_double("noise_sigma", 0.0);
  cfg.seed = static_cast<uint64_t>(c.take_int("seed", 1));
  cfg.train_cases = c.take_int("train_cases", 20);
  cfg.val_cases = c.take_int("val_cases", 4);
  cfg.test_cases = c.take_int("test_cases", 5);
  cfg.blocks = static_cast<int>(c.take_int("blocks", 6));
  cfg.hidden = c.take_int("hidden", 16);
  cfg.epochs_stage1 = static_cast<int>(c.take_int("epochs_stage1", 40));
  cfg.epochs_stage2 = static_cast<int>(c.take_int("epochs_stage2", 40));
  const double default_lr = cfg.experiment == ExperimentKind::lung ? 1e-4 : 5e-3;
  cfg.lr_stage1 = c.take_double("lr_stage1", default_lr);
  cfg.lr_stage2 = c.take_double("lr_stage2", default_lr);
  const std::string pat = c.take_string("split_pattern", std::string("bernoulli"));
  if (pat == "bernoulli") {
    cfg.split_pattern = SplitPattern::bernoulli;
  } else if (pat == "strided") {
    cfg.split_pattern = SplitPattern::strided;
  } else {
    throw std::runtime_error("config: split_pattern must be bernoulli or strided");
  }

  cfg.interleaves = c.take_int("interleaves", 80);
  cfg.samples_per_readout = c.take_int("samples_per_readout", 76);
  cfg.accel_rates = c.take_int_list("accel_rates", {2, 3});

  cfg.spokes_per_rep = c.take_int("spokes_per_rep", 48);
  cfg.repetitions = c.take_int("repetitions", 17);
  cfg.samples_per_spoke = c.take_int("samples_per_spoke", 76);
  cfg.spokes_per_frame = c.take_int("spokes_per_frame", 4);
  cfg.k_components = c.take_int("k_components", 4);
  cfg.flip_deg = c.take_double("flip_deg", 5.0);
  cfg.tr_ms = c.take_double("tr_ms", 8.0);
  cfg.rep_duration_ms = c.take_double("rep_duration_ms", 5000.0);
  cfg.rep_budgets = c.take_int_list("rep_budgets", {8, 5, 3});
  cfg.fit_epochs = static_cast<int>(c.take_int("fit_epochs", 800));
  cfg.fit_batch = c.take_int("fit_batch", 256);
  cfg.fit_lr = c.take_double("fit_lr", 3e-4);
  cfg.t1_grid_lo = c.take_double("t1_grid_lo", 100);
  cfg.t1_grid_hi = c.take_double("t1_grid_hi", 3000);
  cfg.t1_grid_step = c.take_double("t1_grid_step", 5);

  if (cfg.spokes_per_frame <= 0 || cfg.spokes_per_rep % cfg.spokes_per_frame != 0)
    throw std::runtime_error("config: spokes_per_frame must divide spokes_per_rep");
  return cfg;
}

std::vector<double> ExperimentConfig::frame_times() const {
  std::vector<double> t;
  const int64_t n = frames();
  for (int64_t f = 0; f < n; ++f)
    t.push_back((static_cast<double>(f) + 0.5) * rep_duration_ms / static_cast<double>(n));
  return t;
}

std::string ExperimentConfig::summary() const {
  std::ostringstream os;
  os << "experiment=" << (experiment == ExperimentKind::lung ? "lung" : "t1map") << " matrix=" << matrix
     << " coils=" << coils << " noise_sigma=" << noise_sigma << " seed=" << seed
     << " cases=" << train_cases << "/" << val_cases << "/" << test_cases << " blocks=" << blocks
     << " epochs=" << epochs_stage1 << "/" << epochs_stage2;
  if (experiment == ExperimentKind::lung) {
    os << " interleaves=" << interleaves << " accel=";
    for (size_t i = 0; i < accel_rates.size(); ++i) os << (i ? "," : "") << accel_rates[i];
  } else {
    os << " spokes=" << spokes_per_rep << "x" << repetitions << " K=" << k_components << " budgets=";
    for (size_t i = 0; i < rep_budgets.size(); ++i) os << (i ? "," : "") << rep_budgets[i];
  }
  return os.str();
}

}  // namespace hr
