#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chil/plant.hpp"

using namespace chil;

namespace {

ScenarioConfig ideal_config() {
  ScenarioConfig cfg;
  cfg.battery.internal_resistance_ohm = 0;
  cfg.battery.capacity_wh = 1e9;
  cfg.battery.soc_clamping = false;
  cfg.battery.current_limit_a = INFINITY;
  return require_valid(cfg);
}

}  // namespace

TEST(Battery, TenthOfCapacityInOneHour) {
  BatteryParams p;
  const double amps = p.capacity_ah() / 10;
  auto s = initial_battery(p);
  for (int i = 0; i < 720; ++i) s = battery_step(s, p, amps, 5);
  EXPECT_NEAR(s.soc, 0.6, 1e-12);
  EXPECT_EQ(s.clamp_events, 0u);
  EXPECT_NEAR(s.v_terminal_v, 53 + amps * 0.05, 1e-12);
}

TEST(Battery, ZeroCurrentHoldsSoc) {
  BatteryParams p;
  auto s = initial_battery(p);
  for (int i = 0; i < 100; ++i) s = battery_step(s, p, 0, 5);
  EXPECT_EQ(s.soc, 0.5);
  EXPECT_EQ(s.v_terminal_v, 53);
}

TEST(Battery, ClampLandsOnBound) {
  BatteryParams p;
  p.soc_init = 0.8999;
  auto s = initial_battery(p);
  s = battery_step(s, p, 50, 5);
  EXPECT_EQ(s.soc, 0.9);
  EXPECT_EQ(s.clamp_events, 1u);
  EXPECT_GT(s.i_applied_a, 0);
  EXPECT_LT(s.i_applied_a, 50);
  s = battery_step(s, p, 50, 5);
  EXPECT_EQ(s.soc, 0.9);
  EXPECT_EQ(s.i_applied_a, 0);
  EXPECT_EQ(s.clamp_events, 2u);
  s = battery_step(s, p, -10, 5);
  EXPECT_LT(s.soc, 0.9);
  EXPECT_EQ(s.i_applied_a, -10);
}

TEST(Battery, ClampAtLowerBound) {
  BatteryParams p;
  p.soc_init = 0.1;
  auto s = battery_step(initial_battery(p), p, -20, 5);
  EXPECT_EQ(s.soc, 0.1);
  EXPECT_EQ(s.i_applied_a, 0);
}

TEST(Battery, CurrentLimit) {
  BatteryParams p;
  p.current_limit_a = 30;
  auto s = battery_step(initial_battery(p), p, 80, 5);
  EXPECT_EQ(s.i_applied_a, 30);
  s = battery_step(s, p, -80, 5);
  EXPECT_EQ(s.i_applied_a, -30);
}

TEST(Battery, EfficiencyDirection) {
  BatteryParams p;
  p.coulombic_efficiency = 0.9;
  const double per_amp = 5 / (3600 * p.capacity_ah());
  auto s = battery_step(initial_battery(p), p, 10, 5);
  EXPECT_NEAR(s.soc, 0.5 + 0.9 * 10 * per_amp, 1e-15);
  auto d = battery_step(initial_battery(p), p, -10, 5);
  EXPECT_NEAR(d.soc, 0.5 - 10 * per_amp / 0.9, 1e-15);
}

TEST(Battery, LinearOcv) {
  BatteryParams p;
  p.voltage_model = VoltageModel::linear_ocv;
  EXPECT_DOUBLE_EQ(open_circuit_voltage(p, 0), 48);
  EXPECT_DOUBLE_EQ(open_circuit_voltage(p, 1), 58);
  EXPECT_DOUBLE_EQ(initial_battery(p).v_terminal_v, 53);
}

TEST(Battery, NonFiniteRequestFaults) {
  BatteryParams p;
  auto s0 = initial_battery(p);
  auto s = battery_step(s0, p, std::nan(""), 5);
  EXPECT_TRUE(s.fault);
  EXPECT_EQ(s.soc, s0.soc);
}

TEST(Battery, CoulombCountOracle) {
  BatteryParams p;
  p.coulombic_efficiency = 0.95;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-30, 30);
  auto s = initial_battery(p);
  long double charge = 0;
  for (int i = 0; i < 5000; ++i) {
    s = battery_step(s, p, u(rng), 5);
    const double eta = s.i_applied_a > 0 ? 0.95 : 1 / 0.95;
    charge += static_cast<long double>(eta * s.i_applied_a * 5);
  }
  const double expect = 0.5 + static_cast<double>(charge / (3600.0L * p.capacity_ah()));
  EXPECT_NEAR(s.soc, expect, 1e-9);
  EXPECT_GE(s.soc, p.soc_min);
  EXPECT_LE(s.soc, p.soc_max);
}

TEST(Supply, HardLimit) {
  EXPECT_EQ(supply_apply(80, 55), 55);
  EXPECT_EQ(supply_apply(-80, 55), -55);
  EXPECT_EQ(supply_apply(80, 100), 55);
  EXPECT_EQ(supply_apply(20, 55), 20);
  EXPECT_EQ(supply_apply(80, 40), 40);
}

TEST(Plant, SensorAndStep) {
  auto cfg = require_valid(ScenarioConfig{});
  PowerSeries s{{100, 200, 300}, 5, 3000, 0};
  Plant plant(s, cfg);
  EXPECT_EQ(plant.sensor().p_pv_w, 100);
  EXPECT_EQ(plant.sensor().v_batt_v, 53);
  auto row = plant.step(2);
  EXPECT_EQ(row.k, 0u);
  EXPECT_EQ(row.i_applied_a, 2);
  EXPECT_DOUBLE_EQ(row.v_terminal_v, 53.1);
  EXPECT_EQ(plant.sensor().p_pv_w, 200);
  EXPECT_DOUBLE_EQ(plant.sensor().v_batt_v, 53.1);
  plant.step(0);
  plant.step(0);
  EXPECT_TRUE(plant.done());
  EXPECT_THROW(plant.step(0), std::out_of_range);
}

TEST(Plant, SupplyClampShowsInTrace) {
  auto cfg = require_valid(ScenarioConfig{});
  Plant plant(PowerSeries{{100}, 5, 3000, 0}, cfg);
  auto row = plant.step(80);
  EXPECT_EQ(row.i_request_a, 80);
  EXPECT_EQ(row.i_applied_a, 55);
}

TEST(Plant, IdealRealizesRequest) {
  auto cfg = ideal_config();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-50, 50);
  PowerSeries s{std::vector<double>(500, 1000), 5, 3000, 0};
  Plant plant(s, cfg);
  while (!plant.done()) {
    const double i = u(rng);
    auto row = plant.step(i);
    EXPECT_EQ(row.i_applied_a, i);
    EXPECT_EQ(row.v_terminal_v, 53);
    EXPECT_EQ(row.realized_p_batt_w, i * 53);
  }
}

TEST(Plant, QuantizedSensor) {
  ScenarioConfig cfg;
  cfg.transport.quantization.enabled = true;
  cfg.transport.quantization.bits = 12;
  cfg = require_valid(cfg);
  Plant plant(PowerSeries{{1000.3}, 5, 3000, 0}, cfg);
  // Power range [0, 6000] over 4096 codes.
  const double step = 6000.0 / 4096.0;
  EXPECT_DOUBLE_EQ(plant.sensor().p_pv_w, std::round(1000.3 / step) * step);
}
