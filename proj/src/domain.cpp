#include "chil/domain.hpp"

#include <cmath>
#include <sstream>

namespace chil {

namespace {

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

std::optional<std::size_t> whole_multiple(double value, double unit) {
  if (!std::isfinite(value) || !finite_positive(unit) || value < 0.0) {
    return std::nullopt;
  }
  const double ratio = value / unit;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) > 1e-9 * std::max(1.0, nearest)) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(nearest);
}

void check_series(const PowerSeries& series) {
  if (series.samples.empty()) {
    throw InputError("power series is empty");
  }
  if (!finite_positive(series.sample_period_s)) {
    throw InputError("sample_period_s must be positive");
  }
  if (!finite_positive(series.rated_power_w)) {
    throw InputError("rated_power_w must be positive");
  }
  for (std::size_t k = 0; k < series.samples.size(); ++k) {
    const double p = series.samples[k];
    if (!std::isfinite(p)) {
      throw InputError("sample " + std::to_string(k) + " is not finite");
    }
    if (p < 0.0 || p > series.rated_power_w) {
      std::ostringstream os;
      os << "sample " << k << " = " << p << " W outside [0, " << series.rated_power_w << "]";
      throw InputError(os.str());
    }
  }
}

double power_resolution(double rated_power_w) {
  if (!finite_positive(rated_power_w)) {
    throw InputError("rated_power_w must be positive");
  }
  return std::ldexp(1.0, std::ilogb(rated_power_w) - 40);
}

double snap_power(double watts, double resolution_w) { return std::round(watts / resolution_w) * resolution_w; }

PowerSeries snap_series(PowerSeries series) {
  const double res = power_resolution(series.rated_power_w);
  for (double& p : series.samples) {
    double snapped = snap_power(p, res);
    if (snapped > series.rated_power_w) {
      snapped = std::floor(p / res) * res;
    }
    if (snapped < 0.0) {
      snapped = 0.0;
    }
    p = snapped;
  }
  return series;
}

PowerSeries scale_series(const PowerSeries& src, double target_rated_w) {
  if (!finite_positive(target_rated_w)) {
    throw InputError("target rated power must be positive");
  }
  if (!finite_positive(src.rated_power_w)) {
    throw InputError("source rated power must be positive");
  }
  const double factor = target_rated_w / src.rated_power_w;
  PowerSeries out = src;
  out.rated_power_w = target_rated_w;
  for (double& p : out.samples) {
    p *= factor;
    if (!std::isfinite(p)) {
      throw InputError("scaled sample is not finite");
    }
  }
  return out;
}

ValidationResult validate_scenario(const ScenarioConfig& cfg) {
  std::vector<ConfigIssue> issues;
  auto issue = [&issues](std::string field, std::string message) {
    issues.push_back({std::move(field), std::move(message)});
  };

  ScenarioConfig out = cfg;

  if (!finite_positive(cfg.sample_period_s)) {
    issue("sample_period_s", "must be > 0");
  } else {
    const auto n = whole_multiple(cfg.window_s, cfg.sample_period_s);
    if (!n) {
      issue("window_s", "window not multiple of period");
    } else if (*n < 1) {
      issue("window_s", "window must hold at least one sample");
    } else {
      out.window_samples = *n;
    }
    const auto m = whole_multiple(cfg.rr_interval_s, cfg.sample_period_s);
    if (!m) {
      issue("rr_interval_s", "ramp interval not multiple of period");
    } else if (*m < 1) {
      issue("rr_interval_s", "ramp interval must span at least one sample");
    } else {
      out.rr_interval_samples = *m;
    }
  }
  if (!std::isfinite(cfg.ramp_limit_pct_per_min) || cfg.ramp_limit_pct_per_min < 0.0) {
    issue("ramp_limit_pct_per_min", "must be >= 0");
  }
  if (!finite_positive(cfg.histogram_bin_width)) {
    issue("histogram_bin_width", "must be > 0");
  }
  if (cfg.rated_policy == RatedPolicy::config && !finite_positive(cfg.rated_power_w)) {
    issue("rated_power_w", "must be > 0");
  }
  if (!(cfg.supply_limit_a > 0.0)) {
    issue("supply_limit_a", "must be > 0");
  }

  const BatteryParams& b = cfg.battery;
  if (!finite_positive(b.capacity_wh)) issue("battery.capacity_wh", "must be > 0");
  if (!finite_positive(b.nominal_voltage_v)) issue("battery.nominal_voltage_v", "must be > 0");
  if (!std::isfinite(b.v_min_v) || !std::isfinite(b.v_max_v) || !(b.v_min_v < b.v_max_v)) {
    issue("battery.v_min_v", "v_min_v must be < v_max_v");
  }
  if (!(b.v_min_v > 0.0)) issue("battery.v_min_v", "must be > 0");
  if (!std::isfinite(b.internal_resistance_ohm) || b.internal_resistance_ohm < 0.0) {
    issue("battery.internal_resistance_ohm", "must be >= 0");
  }
  if (!(b.current_limit_a > 0.0)) issue("battery.current_limit_a", "must be > 0");
  if (!(b.soc_min >= 0.0 && b.soc_max <= 1.0 && b.soc_min < b.soc_max)) {
    issue("battery.soc_min", "require 0 <= soc_min < soc_max <= 1");
  }
  if (!(b.soc_init >= b.soc_min && b.soc_init <= b.soc_max)) {
    issue("battery.soc_init", "must lie in [soc_min, soc_max]");
  }
  if (!(b.coulombic_efficiency > 0.0 && b.coulombic_efficiency <= 1.0)) {
    issue("battery.coulombic_efficiency", "must lie in (0, 1]");
  }

  const TransportConfig& t = cfg.transport;
  if (!std::isfinite(t.latency_ms) || t.latency_ms < 0.0) issue("transport.latency_ms", "must be >= 0");
  if (!std::isfinite(t.jitter_ms) || t.jitter_ms < 0.0) {
    issue("transport.jitter_ms", "must be >= 0");
  } else if (t.jitter_ms > t.latency_ms) {
    issue("transport.jitter_ms", "jitter must not exceed latency");
  }
  if (t.quantization.enabled && (t.quantization.bits < 8 || t.quantization.bits > 16)) {
    issue("transport.quantization.bits", "must lie in [8, 16]");
  }

  if (!std::isfinite(cfg.scaling.target_rated_w) || cfg.scaling.target_rated_w < 0.0) {
    issue("scaling.target_rated_w", "must be >= 0");
  }

  if (!issues.empty()) {
    return issues;
  }
  out.transport.seed = cfg.seed;
  return out;
}

ScenarioConfig require_valid(const ScenarioConfig& cfg) {
  auto result = validate_scenario(cfg);
  if (auto* issues = std::get_if<std::vector<ConfigIssue>>(&result)) {
    std::string msg = "invalid scenario:";
    for (const auto& i : *issues) {
      msg += "\n  " + i.field + ": " + i.message;
    }
    throw InputError(msg);
  }
  return std::get<ScenarioConfig>(result);
}

}  // namespace chil
