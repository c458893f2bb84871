#pragma once

#include <string>
#include <vector>

#include "hr/nd_array.hpp"

namespace hr {

/// ||x - ref||^2 / ||ref||^2
double nmse(const RArray& x, const RArray& ref);
double nmse(const CArray& x, const CArray& ref);

RArray magnitude(const CArray& x);

/// |pred - ref| / ref * 100% per pixel; 0 where the validity mask is 0 or
/// the reference vanishes.
RArray relative_error_map(const RArray& pred_t1, const RArray& ref_t1, const RArray& valid);

struct T1Bins {
  struct Bin {
    double lo = 0, hi = 0;
    double mean_pct = 0;
    int64_t count = 0;
  };
  std::vector<Bin> bins;
};

/// Mean relative T1 error within fixed-width reference bins (default 400 ms
/// over 800-2000 ms, upper edge inclusive on the last bin).
T1Bins binned_t1_error(const RArray& pred_t1, const RArray& ref_t1, const RArray& valid,
                       double lo = 800, double hi = 2000, double width = 400);

/// Per-case metric rows plus aggregates; CSV layout is `case,metric,value`.
class MetricsReport {
 public:
  struct Row {
    std::string case_id, metric;
    double value = 0;
  };

  void add(const std::string& case_id, const std::string& metric, double value);
  const std::vector<Row>& rows() const { return rows_; }
  std::vector<double> values(const std::string& metric) const;
  double mean(const std::string& metric) const;
  double stddev(const std::string& metric) const;

  void save_csv(const std::string& path, const std::string& header_comment = "") const;
  static MetricsReport load_csv(const std::string& path);
  std::string summary() const;

 private:
  std::vector<Row> rows_;
};

}  // namespace hr
