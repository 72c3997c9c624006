#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chil/domain.hpp"

namespace chil {

struct Histogram {
  std::vector<double> edges;  // size() == counts.size() + 1
  std::vector<std::size_t> counts;
};

struct ComplianceVerdict {
  double limit_pct_per_min = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
  std::size_t violation_count = 0;
  double violation_fraction = 0.0;
  bool pass = true;
};

struct RampReport {
  std::vector<double> rr_pct_per_min;
  std::vector<std::size_t> eval_index;  // later endpoint of each evaluation
  std::size_t stride_samples = 0;
  double rr_interval_s = 0.0;
  double sample_period_s = 0.0;
  double start_time_s = 0.0;
  double max_abs_rr = 0.0;

  // Populated by build_ramp_report.
  std::size_t warmup_skipped = 0;
  ComplianceVerdict verdict_all;
  ComplianceVerdict verdict_after_warmup;
  Histogram histogram;
};

/// Ramp rate in %/min of rated power at every evaluation point:
/// 100 * (P[k] - P[k-m]) / ((interval_s / 60) * P_rated).
/// Non-overlapping evaluation steps by m samples; sliding evaluates every k >= m.
RampReport ramp_rate_series(const PowerSeries& series, double rr_interval_s,
                            RampAlignment alignment = RampAlignment::non_overlapping);

/// Counts |RR| > limit. Evaluation points whose earlier endpoint falls inside the
/// first warmup_samples samples are left out.
ComplianceVerdict compliance(const RampReport& report, double limit_pct_per_min,
                             std::size_t warmup_samples = 0);

/// Bins of width w centred on zero. A value on a bin boundary goes to the bin
/// nearer zero, so the outermost edges are inclusive.
Histogram histogram(std::span<const double> rates, double bin_width);

/// Rates plus histogram plus both compliance verdicts.
RampReport build_ramp_report(const PowerSeries& series, const ScenarioConfig& cfg, std::size_t warmup_samples);

nlohmann::json to_json(const RampReport& report);

/// Two columns: time of the later endpoint (s) and RR (%/min).
std::string rates_table(const RampReport& report);

}  // namespace chil
