#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "chil/domain.hpp"

namespace chil {

struct BatteryState {
  double soc = 0.5;
  double v_terminal_v = 0.0;
  double i_applied_a = 0.0;  // charging positive
  std::uint64_t clamp_events = 0;
  bool fault = false;  // last request was rejected
};

/// Open-circuit voltage for the configured voltage model.
double open_circuit_voltage(const BatteryParams& params, double soc);

BatteryState initial_battery(const BatteryParams& params);

/// One coulomb-counting step.
///
/// The request is limited to +/- current_limit_a. If the step would carry SOC
/// past a bound (soc_min/soc_max when clamping, else 0/1), the current is cut
/// to the value that lands exactly on the bound; at the bound that is zero in
/// the blocked direction. Either cut counts one clamp event.
/// Charging scales by the coulombic efficiency, discharging by its inverse.
/// A non-finite request leaves the state untouched and sets `fault`.
BatteryState battery_step(const BatteryState& state, const BatteryParams& params, double i_request_a,
                          double dt_s);

/// The bidirectional DC supply never passes more than 55 A either way.
inline constexpr double kSupplyHardLimitA = 55.0;
double supply_apply(double i_request_a, double supply_limit_a);

/// Sensor pair handed to the controller.
struct SensorReading {
  double p_pv_w = 0.0;
  double v_batt_v = 0.0;
};

struct PlantTraceRow {
  std::size_t k = 0;
  double p_pv_w = 0.0;
  double i_request_a = 0.0;
  double i_applied_a = 0.0;
  double v_terminal_v = 0.0;
  double soc = 0.0;
  double realized_p_batt_w = 0.0;
  double p_grid_w = 0.0;
};

struct QuantizerRanges {
  double power_lo = 0.0, power_hi = 0.0;
  double voltage_lo = 0.0, voltage_hi = 0.0;
  double current_lo = 0.0, current_hi = 0.0;
};

QuantizerRanges default_quantizer_ranges(const ScenarioConfig& cfg, double rated_power_w);

/// Discrete-time plant: PV playback, supply, battery.
///
/// Sample k covers [k*T, (k+1)*T). sensor() reports PV power of sample k on
/// the power_resolution grid together with the terminal voltage left by step
/// k-1; step() applies a setpoint for sample k and advances.
class Plant {
 public:
  Plant(const PowerSeries& series, const ScenarioConfig& cfg);

  bool done() const { return k_ >= series_.size(); }
  std::size_t k() const { return k_; }
  std::size_t size() const { return series_.size(); }
  const BatteryState& battery() const { return battery_; }
  const PowerSeries& series() const { return series_; }

  SensorReading sensor() const;
  /// Plant-side view of a received current setpoint (DAC quantization if enabled).
  double receive_setpoint(double i_set_a) const;
  /// Throws InvariantBreach if SOC leaves its window.
  PlantTraceRow step(double setpoint_a);

 private:
  PowerSeries series_;
  ScenarioConfig cfg_;
  BatteryState battery_;
  QuantizerRanges ranges_;
  std::size_t k_ = 0;
};

}  // namespace chil
