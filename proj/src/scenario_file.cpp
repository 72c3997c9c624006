#include "chil/scenario_file.hpp"

#include <functional>
#include <map>
#include <sstream>

#include "chil/text.hpp"

namespace chil {

namespace {

using Setter = std::function<bool(ScenarioConfig&, std::string_view)>;

Setter number(double ScenarioConfig::*field) {
  return [field](ScenarioConfig& c, std::string_view v) {
    auto d = parse_double(v);
    if (!d) return false;
    c.*field = *d;
    return true;
  };
}

Setter battery_number(double BatteryParams::*field) {
  return [field](ScenarioConfig& c, std::string_view v) {
    auto d = parse_double(v);
    if (!d) return false;
    c.battery.*field = *d;
    return true;
  };
}

Setter transport_number(double TransportConfig::*field) {
  return [field](ScenarioConfig& c, std::string_view v) {
    auto d = parse_double(v);
    if (!d) return false;
    c.transport.*field = *d;
    return true;
  };
}

std::optional<bool> parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  return std::nullopt;
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"sample_period_s", number(&ScenarioConfig::sample_period_s)},
      {"window_s", number(&ScenarioConfig::window_s)},
      {"ramp_limit_pct_per_min", number(&ScenarioConfig::ramp_limit_pct_per_min)},
      {"rr_interval_s", number(&ScenarioConfig::rr_interval_s)},
      {"rr_alignment",
       [](ScenarioConfig& c, std::string_view v) {
         if (v == "non_overlapping") c.rr_alignment = RampAlignment::non_overlapping;
         else if (v == "sliding") c.rr_alignment = RampAlignment::sliding;
         else return false;
         return true;
       }},
      {"histogram_bin_width", number(&ScenarioConfig::histogram_bin_width)},
      {"rated_power_w", number(&ScenarioConfig::rated_power_w)},
      {"rated_policy",
       [](ScenarioConfig& c, std::string_view v) {
         if (v == "config") c.rated_policy = RatedPolicy::config;
         else if (v == "series_max") c.rated_policy = RatedPolicy::series_max;
         else return false;
         return true;
       }},
      {"supply_limit_a", number(&ScenarioConfig::supply_limit_a)},
      {"seed",
       [](ScenarioConfig& c, std::string_view v) {
         auto i = parse_int(v);
         if (!i || *i < 0) return false;
         c.seed = static_cast<std::uint64_t>(*i);
         return true;
       }},
      {"scaling.target_rated_w",
       [](ScenarioConfig& c, std::string_view v) {
         auto d = parse_double(v);
         if (!d) return false;
         c.scaling.target_rated_w = *d;
         return true;
       }},
      {"battery.capacity_wh", battery_number(&BatteryParams::capacity_wh)},
      {"battery.nominal_voltage_v", battery_number(&BatteryParams::nominal_voltage_v)},
      {"battery.v_min_v", battery_number(&BatteryParams::v_min_v)},
      {"battery.v_max_v", battery_number(&BatteryParams::v_max_v)},
      {"battery.internal_resistance_ohm", battery_number(&BatteryParams::internal_resistance_ohm)},
      {"battery.current_limit_a", battery_number(&BatteryParams::current_limit_a)},
      {"battery.soc_min", battery_number(&BatteryParams::soc_min)},
      {"battery.soc_max", battery_number(&BatteryParams::soc_max)},
      {"battery.soc_init", battery_number(&BatteryParams::soc_init)},
      {"battery.coulombic_efficiency", battery_number(&BatteryParams::coulombic_efficiency)},
      {"battery.voltage_model",
       [](ScenarioConfig& c, std::string_view v) {
         if (v == "constant") c.battery.voltage_model = VoltageModel::constant;
         else if (v == "linear_ocv") c.battery.voltage_model = VoltageModel::linear_ocv;
         else return false;
         return true;
       }},
      {"battery.soc_clamping",
       [](ScenarioConfig& c, std::string_view v) {
         auto b = parse_bool(v);
         if (!b) return false;
         c.battery.soc_clamping = *b;
         return true;
       }},
      {"transport.mode",
       [](ScenarioConfig& c, std::string_view v) {
         if (v == "lockstep") c.transport.mode = TransportMode::lockstep;
         else if (v == "free_running") c.transport.mode = TransportMode::free_running;
         else return false;
         return true;
       }},
      {"transport.latency_ms", transport_number(&TransportConfig::latency_ms)},
      {"transport.jitter_ms", transport_number(&TransportConfig::jitter_ms)},
      {"transport.quantization.enabled",
       [](ScenarioConfig& c, std::string_view v) {
         auto b = parse_bool(v);
         if (!b) return false;
         c.transport.quantization.enabled = *b;
         return true;
       }},
      {"transport.quantization.bits",
       [](ScenarioConfig& c, std::string_view v) {
         auto i = parse_int(v);
         if (!i) return false;
         c.transport.quantization.bits = static_cast<int>(*i);
         return true;
       }},
  };
  return table;
}

const char* name_of(RampAlignment a) { return a == RampAlignment::sliding ? "sliding" : "non_overlapping"; }
const char* name_of(RatedPolicy p) { return p == RatedPolicy::series_max ? "series_max" : "config"; }
const char* name_of(VoltageModel m) { return m == VoltageModel::linear_ocv ? "linear_ocv" : "constant"; }
const char* name_of(TransportMode m) { return m == TransportMode::free_running ? "free_running" : "lockstep"; }

}  // namespace

ScenarioConfig parse_scenario(std::string_view text) {
  ScenarioConfig cfg;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("scenario line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) {
      throw InputError("scenario line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
    if (!it->second(cfg, value)) {
      throw InputError("scenario line " + std::to_string(line_no) + ": bad value '" + std::string(value) +
                       "' for " + std::string(key));
    }
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario(read_file(path)); }

std::string scenario_to_text(const ScenarioConfig& c) {
  std::ostringstream os;
  auto kv = [&os](const char* key, const std::string& value) { os << key << " = " << value << '\n'; };
  auto num = [](double v) { return format_double(v); };
  kv("sample_period_s", num(c.sample_period_s));
  kv("window_s", num(c.window_s));
  kv("ramp_limit_pct_per_min", num(c.ramp_limit_pct_per_min));
  kv("rr_interval_s", num(c.rr_interval_s));
  kv("rr_alignment", name_of(c.rr_alignment));
  kv("histogram_bin_width", num(c.histogram_bin_width));
  kv("rated_power_w", num(c.rated_power_w));
  kv("rated_policy", name_of(c.rated_policy));
  kv("supply_limit_a", num(c.supply_limit_a));
  kv("seed", std::to_string(c.seed));
  kv("scaling.target_rated_w", num(c.scaling.target_rated_w));
  const BatteryParams& b = c.battery;
  kv("battery.capacity_wh", num(b.capacity_wh));
  kv("battery.nominal_voltage_v", num(b.nominal_voltage_v));
  kv("battery.v_min_v", num(b.v_min_v));
  kv("battery.v_max_v", num(b.v_max_v));
  kv("battery.internal_resistance_ohm", num(b.internal_resistance_ohm));
  kv("battery.current_limit_a", num(b.current_limit_a));
  kv("battery.soc_min", num(b.soc_min));
  kv("battery.soc_max", num(b.soc_max));
  kv("battery.soc_init", num(b.soc_init));
  kv("battery.coulombic_efficiency", num(b.coulombic_efficiency));
  kv("battery.voltage_model", name_of(b.voltage_model));
  kv("battery.soc_clamping", b.soc_clamping ? "true" : "false");
  kv("transport.mode", name_of(c.transport.mode));
  kv("transport.latency_ms", num(c.transport.latency_ms));
  kv("transport.jitter_ms", num(c.transport.jitter_ms));
  kv("transport.quantization.enabled", c.transport.quantization.enabled ? "true" : "false");
  kv("transport.quantization.bits", std::to_string(c.transport.quantization.bits));
  return os.str();
}

std::string config_hash(const ScenarioConfig& cfg) { return sha256_hex(scenario_to_text(cfg)); }

}  // namespace chil
