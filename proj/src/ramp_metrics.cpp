#include "chil/ramp_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "chil/text.hpp"

namespace chil {

RampReport ramp_rate_series(const PowerSeries& series, double rr_interval_s, RampAlignment alignment) {
  const auto stride = whole_multiple(rr_interval_s, series.sample_period_s);
  if (!stride || *stride == 0) {
    throw InputError("ramp interval is not a whole number of sample periods");
  }
  const std::size_t m = *stride;
  if (series.size() < m + 1) {
    throw InputError("series too short for one ramp interval");
  }
  if (!(series.rated_power_w > 0.0)) {
    throw InputError("rated power must be positive");
  }

  RampReport report;
  report.stride_samples = m;
  report.rr_interval_s = rr_interval_s;
  report.sample_period_s = series.sample_period_s;
  report.start_time_s = series.start_time_s;

  const double minutes = rr_interval_s / 60.0;
  const double denom = minutes * series.rated_power_w;
  const std::size_t step = alignment == RampAlignment::sliding ? 1 : m;
  for (std::size_t k = m; k < series.size(); k += step) {
    const double rr = 100.0 * (series.samples[k] - series.samples[k - m]) / denom;
    report.rr_pct_per_min.push_back(rr);
    report.eval_index.push_back(k);
    report.max_abs_rr = std::max(report.max_abs_rr, std::abs(rr));
  }
  return report;
}

ComplianceVerdict compliance(const RampReport& report, double limit_pct_per_min, std::size_t warmup_samples) {
  ComplianceVerdict v;
  v.limit_pct_per_min = limit_pct_per_min;
  for (std::size_t i = 0; i < report.rr_pct_per_min.size(); ++i) {
    const std::size_t earlier = report.eval_index[i] - report.stride_samples;
    if (earlier < warmup_samples) {
      ++v.excluded;
      continue;
    }
    ++v.evaluated;
    if (std::abs(report.rr_pct_per_min[i]) > limit_pct_per_min) {
      ++v.violation_count;
    }
  }
  v.violation_fraction =
      v.evaluated == 0 ? 0.0 : static_cast<double>(v.violation_count) / static_cast<double>(v.evaluated);
  v.pass = v.violation_count == 0;
  return v;
}

namespace {

// round(r / w) with exact halves going toward zero.
long long bin_of(double rate, double width) {
  const double q = rate / width;
  const double magnitude = std::abs(q);
  double idx = std::floor(magnitude);
  if (magnitude - idx > 0.5) idx += 1.0;
  return static_cast<long long>(q < 0 ? -idx : idx);
}

}  // namespace

Histogram histogram(std::span<const double> rates, double bin_width) {
  if (rates.empty()) {
    throw InputError("histogram of an empty rate list");
  }
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw InputError("histogram bin width must be positive");
  }
  long long reach = 0;
  for (double r : rates) {
    if (!std::isfinite(r)) {
      throw InputError("histogram input is not finite");
    }
    reach = std::max(reach, std::abs(bin_of(r, bin_width)));
  }
  Histogram h;
  const std::size_t bins = static_cast<std::size_t>(2 * reach + 1);
  h.counts.assign(bins, 0);
  h.edges.reserve(bins + 1);
  for (long long j = -reach; j <= reach + 1; ++j) {
    h.edges.push_back((static_cast<double>(j) - 0.5) * bin_width);
  }
  for (double r : rates) {
    ++h.counts[static_cast<std::size_t>(bin_of(r, bin_width) + reach)];
  }
  return h;
}

RampReport build_ramp_report(const PowerSeries& series, const ScenarioConfig& cfg, std::size_t warmup_samples) {
  RampReport report = ramp_rate_series(series, cfg.rr_interval_s, cfg.rr_alignment);
  report.warmup_skipped = warmup_samples;
  report.verdict_all = compliance(report, cfg.ramp_limit_pct_per_min, 0);
  report.verdict_after_warmup = compliance(report, cfg.ramp_limit_pct_per_min, warmup_samples);
  if (!report.rr_pct_per_min.empty()) {
    report.histogram = histogram(report.rr_pct_per_min, cfg.histogram_bin_width);
  }
  return report;
}

namespace {

nlohmann::json verdict_json(const ComplianceVerdict& v) {
  return {{"limit_pct_per_min", v.limit_pct_per_min},
          {"evaluated", v.evaluated},
          {"excluded", v.excluded},
          {"violation_count", v.violation_count},
          {"violation_fraction", v.violation_fraction},
          {"pass", v.pass}};
}

}  // namespace

nlohmann::json to_json(const RampReport& r) {
  return {{"rr_interval_s", r.rr_interval_s},
          {"sample_period_s", r.sample_period_s},
          {"evaluation_points", r.rr_pct_per_min.size()},
          {"max_abs_rr_pct_per_min", r.max_abs_rr},
          {"warmup_skipped", r.warmup_skipped},
          {"compliance", verdict_json(r.verdict_all)},
          {"compliance_excluding_warmup", verdict_json(r.verdict_after_warmup)},
          {"histogram", {{"bin_edges_pct_per_min", r.histogram.edges}, {"counts", r.histogram.counts}}}};
}

std::string rates_table(const RampReport& r) {
  std::ostringstream os;
  os << "time_s,rr_pct_per_min\n";
  for (std::size_t i = 0; i < r.rr_pct_per_min.size(); ++i) {
    const double t = r.start_time_s + static_cast<double>(r.eval_index[i]) * r.sample_period_s;
    os << format_double(t) << ',' << format_double(r.rr_pct_per_min[i]) << '\n';
  }
  return os.str();
}

}  // namespace chil
