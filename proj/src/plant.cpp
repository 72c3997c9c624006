#include "chil/plant.hpp"

#include <algorithm>
#include <cmath>

#include "chil/bus/quantize.hpp"

namespace chil {

double open_circuit_voltage(const BatteryParams& params, double soc) {
  if (params.voltage_model == VoltageModel::linear_ocv) {
    return params.v_min_v + (params.v_max_v - params.v_min_v) * soc;
  }
  return params.nominal_voltage_v;
}

BatteryState initial_battery(const BatteryParams& params) {
  BatteryState s;
  s.soc = params.soc_init;
  s.v_terminal_v = open_circuit_voltage(params, s.soc);
  return s;
}

BatteryState battery_step(const BatteryState& state, const BatteryParams& params, double i_request_a,
                          double dt_s) {
  BatteryState next = state;
  if (!std::isfinite(i_request_a) || !(dt_s > 0.0)) {
    next.fault = true;
    return next;
  }
  next.fault = false;

  double current = std::clamp(i_request_a, -params.current_limit_a, params.current_limit_a);
  const double lo = params.soc_clamping ? params.soc_min : 0.0;
  const double hi = params.soc_clamping ? params.soc_max : 1.0;
  const double charge_as = 3600.0 * params.capacity_ah();
  const double eta = current > 0.0 ? params.coulombic_efficiency : 1.0 / params.coulombic_efficiency;

  double soc = state.soc + eta * current * dt_s / charge_as;
  if (current > 0.0 && soc > hi) {
    current = state.soc >= hi ? 0.0 : (hi - state.soc) * charge_as / (eta * dt_s);
    soc = std::max(state.soc, hi);
    ++next.clamp_events;
  } else if (current < 0.0 && soc < lo) {
    current = state.soc <= lo ? 0.0 : (lo - state.soc) * charge_as / (eta * dt_s);
    soc = std::min(state.soc, lo);
    ++next.clamp_events;
  }

  next.soc = soc;
  next.i_applied_a = current;
  next.v_terminal_v = open_circuit_voltage(params, soc) + current * params.internal_resistance_ohm;
  return next;
}

double supply_apply(double i_request_a, double supply_limit_a) {
  const double limit = std::min(supply_limit_a, kSupplyHardLimitA);
  return std::clamp(i_request_a, -limit, limit);
}

QuantizerRanges default_quantizer_ranges(const ScenarioConfig& cfg, double rated_power_w) {
  QuantizerRanges r;
  r.power_lo = 0.0;
  r.power_hi = 2.0 * rated_power_w;
  r.voltage_lo = 0.0;
  r.voltage_hi = 1.5 * cfg.battery.v_max_v;
  double i_limit = cfg.battery.current_limit_a;
  if (!std::isfinite(i_limit)) {
    i_limit = std::min(cfg.supply_limit_a, kSupplyHardLimitA);
  }
  r.current_lo = -2.0 * i_limit;
  r.current_hi = 2.0 * i_limit;
  return r;
}

Plant::Plant(const PowerSeries& series, const ScenarioConfig& cfg)
    : series_(snap_series(series)),
      cfg_(cfg),
      battery_(initial_battery(cfg.battery)),
      ranges_(default_quantizer_ranges(cfg, series.rated_power_w)) {}

SensorReading Plant::sensor() const {
  SensorReading r{series_.samples.at(k_), battery_.v_terminal_v};
  const auto& q = cfg_.transport.quantization;
  if (q.enabled) {
    r.p_pv_w = snap_power(bus::quantize(r.p_pv_w, q.bits, ranges_.power_lo, ranges_.power_hi),
                         power_resolution(series_.rated_power_w));
    r.v_batt_v = bus::quantize(r.v_batt_v, q.bits, ranges_.voltage_lo, ranges_.voltage_hi);
  }
  return r;
}

double Plant::receive_setpoint(double i_set_a) const {
  const auto& q = cfg_.transport.quantization;
  if (q.enabled && std::isfinite(i_set_a)) {
    return bus::quantize(i_set_a, q.bits, ranges_.current_lo, ranges_.current_hi);
  }
  return i_set_a;
}

PlantTraceRow Plant::step(double setpoint_a) {
  if (done()) {
    throw std::out_of_range("plant stepped past the end of the series");
  }
  PlantTraceRow row;
  row.k = k_;
  row.p_pv_w = series_.samples[k_];
  row.i_request_a = setpoint_a;

  const double supplied = supply_apply(setpoint_a, cfg_.supply_limit_a);
  battery_ = battery_step(battery_, cfg_.battery, supplied, series_.sample_period_s);
  if (battery_.fault) {
    battery_.i_applied_a = 0.0;
  }

  const double lo = cfg_.battery.soc_clamping ? cfg_.battery.soc_min : 0.0;
  const double hi = cfg_.battery.soc_clamping ? cfg_.battery.soc_max : 1.0;
  if (!(battery_.soc >= lo && battery_.soc <= hi)) {
    throw InvariantBreach("SOC left its operating window", k_);
  }

  row.i_applied_a = battery_.i_applied_a;
  row.v_terminal_v = battery_.v_terminal_v;
  row.soc = battery_.soc;
  row.realized_p_batt_w = row.i_applied_a * row.v_terminal_v;
  row.p_grid_w = row.p_pv_w - row.realized_p_batt_w;
  ++k_;
  return row;
}

}  // namespace chil
