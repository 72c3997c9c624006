#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace chil {

/// Uniformly sampled PV power trace. Sample k sits at start_time_s + k * sample_period_s.
struct PowerSeries {
  std::vector<double> samples;  // W
  double sample_period_s = 5.0;
  double rated_power_w = 1.0;
  double start_time_s = 0.0;

  std::size_t size() const { return samples.size(); }
  double time_at(std::size_t k) const { return start_time_s + static_cast<double>(k) * sample_period_s; }

  bool operator==(const PowerSeries&) const = default;
};

/// Throws InputError when a PowerSeries invariant does not hold.
void check_series(const PowerSeries& series);

/// Resolution of PV power readings crossing the plant/controller boundary:
/// 2^(floor(log2 rated) - 40) W, i.e. about 1e-12 of rated power. Coarse
/// enough that the controller's power split is exact in double arithmetic.
double power_resolution(double rated_power_w);

/// Round to the nearest multiple of resolution_w.
double snap_power(double watts, double resolution_w);
/// Snap every sample to power_resolution(rated), staying within [0, rated].
PowerSeries snap_series(PowerSeries series);

PowerSeries scale_series(const PowerSeries& src, double target_rated_w);

enum class VoltageModel { constant, linear_ocv };

struct BatteryParams {
  // Two 1.2 kWh / 26.5 V modules in series behind one terminal.
  double capacity_wh = 2400.0;
  double nominal_voltage_v = 53.0;
  double v_min_v = 48.0;
  double v_max_v = 58.0;
  double internal_resistance_ohm = 0.05;
  double current_limit_a = 55.0;
  double soc_min = 0.10;
  double soc_max = 0.90;
  double soc_init = 0.50;
  double coulombic_efficiency = 1.0;
  VoltageModel voltage_model = VoltageModel::constant;
  bool soc_clamping = true;

  double capacity_ah() const { return capacity_wh / nominal_voltage_v; }
  bool operator==(const BatteryParams&) const = default;
};

enum class TransportMode { lockstep, free_running };

struct QuantizationConfig {
  bool enabled = false;
  int bits = 12;
  bool operator==(const QuantizationConfig&) const = default;
};

struct TransportConfig {
  TransportMode mode = TransportMode::lockstep;
  double latency_ms = 0.0;
  double jitter_ms = 0.0;
  QuantizationConfig quantization;
  std::uint64_t seed = 0;
  bool operator==(const TransportConfig&) const = default;
};

enum class RampAlignment { non_overlapping, sliding };
enum class RatedPolicy { config, series_max };

struct ScalingConfig {
  double target_rated_w = 0.0;  // 0 leaves the input untouched
  bool operator==(const ScalingConfig&) const = default;
};

struct ScenarioConfig {
  double sample_period_s = 5.0;
  double window_s = 1800.0;
  double ramp_limit_pct_per_min = 5.0;
  double rr_interval_s = 60.0;
  RampAlignment rr_alignment = RampAlignment::non_overlapping;
  double histogram_bin_width = 1.0;
  double rated_power_w = 3000.0;
  RatedPolicy rated_policy = RatedPolicy::config;
  double supply_limit_a = 55.0;
  BatteryParams battery;
  TransportConfig transport;
  ScalingConfig scaling;
  std::uint64_t seed = 0;

  // Filled in by validate_scenario.
  std::size_t window_samples = 0;
  std::size_t rr_interval_samples = 0;

  bool operator==(const ScenarioConfig&) const = default;
};

struct ConfigIssue {
  std::string field;
  std::string message;
  bool operator==(const ConfigIssue&) const = default;
};

using ValidationResult = std::variant<ScenarioConfig, std::vector<ConfigIssue>>;

/// Checks every scenario invariant and computes the derived sample counts.
/// Either the whole config is accepted or every violation is reported.
ValidationResult validate_scenario(const ScenarioConfig& cfg);

/// validate_scenario that throws InputError listing all issues.
ScenarioConfig require_valid(const ScenarioConfig& cfg);

// Errors map onto the runner's exit codes.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantBreach : public std::runtime_error {
 public:
  InvariantBreach(const std::string& what, std::size_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class ProtocolFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric helpers: integer multiple test for grid-aligned seconds.
std::optional<std::size_t> whole_multiple(double value, double unit);

}  // namespace chil
