#include "hr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace hr {

double nmse(const RArray& x, const RArray& ref) {
  check_same_shape("nmse", x.shape(), ref.shape());
  double num = 0, den = 0;
  for (int64_t i = 0; i < x.numel(); ++i) {
    num += (x[i] - ref[i]) * (x[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  if (den == 0) throw std::invalid_argument("nmse: zero reference");
  return num / den;
}

double nmse(const CArray& x, const CArray& ref) {
  check_same_shape("nmse", x.shape(), ref.shape());
  double num = 0, den = 0;
  for (int64_t i = 0; i < x.numel(); ++i) {
    num += std::norm(x[i] - ref[i]);
    den += std::norm(ref[i]);
  }
  if (den == 0) throw std::invalid_argument("nmse: zero reference");
  return num / den;
}

RArray magnitude(const CArray& x) {
  RArray out(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = std::abs(x[i]);
  return out;
}

RArray relative_error_map(const RArray& pred_t1, const RArray& ref_t1, const RArray& valid) {
  check_same_shape("relative_error_map", pred_t1.shape(), ref_t1.shape());
  check_same_shape("relative_error_map", pred_t1.shape(), valid.shape());
  RArray out(pred_t1.shape());
  for (int64_t i = 0; i < out.numel(); ++i) {
    if (valid[i] == 0.0 || ref_t1[i] <= 0.0) continue;
    out[i] = std::abs(pred_t1[i] - ref_t1[i]) / ref_t1[i] * 100.0;
  }
  return out;
}

T1Bins binned_t1_error(const RArray& pred_t1, const RArray& ref_t1, const RArray& valid, double lo,
                       double hi, double width) {
  RArray err = relative_error_map(pred_t1, ref_t1, valid);
  T1Bins out;
  for (double b = lo; b < hi - 1e-9; b += width) {
    T1Bins::Bin bin;
    bin.lo = b;
    bin.hi = b + width;
    const bool last = b + width >= hi - 1e-9;
    double acc = 0;
    for (int64_t i = 0; i < ref_t1.numel(); ++i) {
      if (valid[i] == 0.0 || ref_t1[i] <= 0.0) continue;
      const bool in = ref_t1[i] >= bin.lo && (last ? ref_t1[i] <= bin.hi : ref_t1[i] < bin.hi);
      if (!in) continue;
      acc += err[i];
      ++bin.count;
    }
    bin.mean_pct = bin.count > 0 ? acc / static_cast<double>(bin.count) : 0.0;
    out.bins.push_back(bin);
  }
  return out;
}

void MetricsReport::add(const std::string& case_id, const std::string& metric, double value) {
  rows_.push_back({case_id, metric, value});
}

std::vector<double> MetricsReport::values(const std::string& metric) const {
  std::vector<double> v;
  for (const Row& r : rows_)
    if (r.metric == metric) v.push_back(r.value);
  return v;
}

double MetricsReport::mean(const std::string& metric) const {
  auto v = values(metric);
  if (v.empty()) throw std::invalid_argument("MetricsReport: no rows for metric '" + metric + "'");
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double MetricsReport::stddev(const std::string& metric) const {
  auto v = values(metric);
  if (v.empty()) throw std::invalid_argument("MetricsReport: no rows for metric '" + metric + "'");
  const double m = mean(metric);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

void MetricsReport::save_csv(const std::string& path, const std::string& header_comment) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  if (!header_comment.empty()) f << "# " << header_comment << "\n";
  f << "case,metric,value\n";
  f << std::setprecision(17);
  for (const Row& r : rows_) f << r.case_id << "," << r.metric << "," << r.value << "\n";
}

MetricsReport MetricsReport::load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  MetricsReport rep;
  std::string line;
  bool saw_header = false;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != "case,metric,value") throw std::runtime_error("metrics csv: bad header '" + line + "'");
      saw_header = true;
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("metrics csv: bad row '" + line + "'");
    rep.rows_.push_back({line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1), std::stod(line.substr(c2 + 1))});
  }
  return rep;
}

std::string MetricsReport::summary() const {
  std::set<std::string> metrics;
  for (const Row& r : rows_) metrics.insert(r.metric);
  std::ostringstream os;
  os << std::fixed << std::setprecision(5);
  for (const std::string& m : metrics)
    os << m << ": " << mean(m) << " +/- " << stddev(m) << "  (n=" << values(m).size() << ")\n";
  return os.str();
}

}  // namespace hr
