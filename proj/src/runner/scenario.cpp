#include "chil/runner/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <sstream>

#include "chil/plant.hpp"
#include "chil/scenario_file.hpp"
#include "chil/text.hpp"

namespace chil {

PowerSeries prepare_series(const PowerSeries& input, const ScenarioConfig& cfg) {
  PowerSeries s = input;
  if (cfg.scaling.target_rated_w > 0.0) {
    s = scale_series(s, cfg.scaling.target_rated_w);
  }
  if (cfg.rated_policy == RatedPolicy::series_max) {
    s.rated_power_w = s.samples.empty() ? 0.0 : *std::max_element(s.samples.begin(), s.samples.end());
  } else if (cfg.scaling.target_rated_w <= 0.0) {
    s.rated_power_w = cfg.rated_power_w;
  }
  check_series(s);
  if (whole_multiple(s.sample_period_s, cfg.sample_period_s) != std::optional<std::size_t>{1}) {
    throw InputError("series period " + format_double(s.sample_period_s) + " s differs from scenario period " +
                     format_double(cfg.sample_period_s) + " s");
  }
  return s;
}

PowerSeries smoothed_series(const std::vector<ControllerLogRow>& log, const PowerSeries& like) {
  PowerSeries s;
  s.sample_period_s = like.sample_period_s;
  s.rated_power_w = like.rated_power_w;
  s.start_time_s = like.start_time_s;
  for (const auto& row : log) {
    if (row.status == StepStatus::ok) s.samples.push_back(row.p_hat_w);
  }
  return s;
}

std::string plant_trace_table(const std::vector<PlantTraceRow>& rows) {
  std::ostringstream os;
  os << "k,p_pv_w,i_request_a,i_applied_a,v_terminal_v,soc,realized_p_batt_w,p_grid_w\n";
  for (const auto& r : rows) {
    os << r.k << ',' << format_double(r.p_pv_w) << ',' << format_double(r.i_request_a) << ','
       << format_double(r.i_applied_a) << ',' << format_double(r.v_terminal_v) << ',' << format_double(r.soc) << ','
       << format_double(r.realized_p_batt_w) << ',' << format_double(r.p_grid_w) << '\n';
  }
  return os.str();
}

namespace {

std::string histogram_table(const RunArtifacts& a) {
  std::ostringstream os;
  os << "series,bin_lo_pct_per_min,bin_hi_pct_per_min,count\n";
  auto emit = [&os](const char* name, const Histogram& h) {
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      os << name << ',' << format_double(h.edges[i]) << ',' << format_double(h.edges[i + 1]) << ',' << h.counts[i]
         << '\n';
    }
  };
  emit("raw", a.raw.histogram);
  emit("smoothed", a.smoothed.histogram);
  emit("grid", a.grid.histogram);
  return os.str();
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_artifacts(RunArtifacts& a, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  a.plant_trace = dir / "plant_trace.csv";
  a.controller_log = dir / "controller_log.csv";
  a.frame_log = dir / "frames.hex";
  a.metrics = dir / "metrics.json";
  a.histogram = dir / "histogram.csv";
  a.metadata = dir / "metadata.json";

  write_file_atomic(a.plant_trace, plant_trace_table(a.session.trace));
  write_file_atomic(a.controller_log, controller_log_table(a.session.controller_log, a.warmup_samples));
  write_file_atomic(a.frame_log, bus::frame_log_text(a.session.frames));
  write_file_atomic(dir / "rates_raw.csv", rates_table(a.raw));
  write_file_atomic(dir / "rates_smoothed.csv", rates_table(a.smoothed));
  write_file_atomic(dir / "rates_grid.csv", rates_table(a.grid));
  write_file_atomic(a.histogram, histogram_table(a));
  write_file_atomic(dir / "scenario.cfg", scenario_to_text(a.config));

  const auto& st = a.session.controller_stats;
  nlohmann::json metrics = {
      {"config_hash", a.config_hash},
      {"samples", a.series.size()},
      {"window_samples", a.config.window_samples},
      {"warmup_samples", a.warmup_samples},
      {"ramp", {{"raw", to_json(a.raw)}, {"smoothed", to_json(a.smoothed)}, {"grid", to_json(a.grid)}}},
      {"soc",
       {{"initial", a.soc.initial},
        {"min", a.soc.min},
        {"max", a.soc.max},
        {"final", a.soc.final},
        {"clamp_events", a.soc.clamp_events}}},
      {"bus",
       {{"frames", a.session.frames.size()},
        {"controller_decode_errors", st.decode_errors},
        {"controller_voltage_faults", st.voltage_faults},
        {"plant_decode_errors", a.session.plant_decode_errors}}},
  };
  write_file_atomic(a.metrics, metrics.dump(2) + "\n");

  nlohmann::json meta = {
      {"config_hash", a.config_hash},
      {"seed", a.config.seed},
      {"version", kVersion},
      {"created_utc", utc_now()},
  };
  write_file_atomic(a.metadata, meta.dump(2) + "\n");
}

}  // namespace

RunArtifacts run_scenario(const ScenarioConfig& input_cfg, const PowerSeries& input_series,
                          const RunOptions& options) {
  RunArtifacts a;
  a.config = require_valid(input_cfg);
  a.config_hash = config_hash(a.config);
  a.warmup_samples = a.config.window_samples;

  Plant plant(prepare_series(input_series, a.config), a.config);
  a.series = plant.series();

  bus::SessionOptions session_opts;
  session_opts.link = options.link;
  session_opts.corrupt = options.corrupt;
  session_opts.pace_realtime = options.pace_realtime;
  a.session = bus::session_run(plant, a.config, session_opts);

  if (a.session.protocol_fault) {
    throw ProtocolFault(a.session.fault_message);
  }
  const auto& log = a.session.controller_log;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& row = log[i];
    if (row.status == StepStatus::ok &&
        (row.p_hat_w + row.p_batt_w != row.p_pv_w || row.p_batt_w != row.p_pv_w - row.p_hat_w)) {
      throw InvariantBreach("power split p_pv = p_hat + p_batt violated", i);
    }
  }
  if (a.session.trace.size() != a.series.size()) {
    throw InvariantBreach("plant did not play back the whole series", a.session.trace.size());
  }

  a.soc.initial = a.config.battery.soc_init;
  a.soc.min = a.soc.max = a.soc.initial;
  for (const auto& row : a.session.trace) {
    a.soc.min = std::min(a.soc.min, row.soc);
    a.soc.max = std::max(a.soc.max, row.soc);
  }
  a.soc.final = plant.battery().soc;
  a.soc.clamp_events = plant.battery().clamp_events;

  a.raw = build_ramp_report(a.series, a.config, a.warmup_samples);
  a.smoothed = build_ramp_report(smoothed_series(log, a.series), a.config, a.warmup_samples);
  PowerSeries grid = a.series;
  for (std::size_t k = 0; k < grid.size(); ++k) grid.samples[k] = a.session.trace[k].p_grid_w;
  a.grid = build_ramp_report(grid, a.config, a.warmup_samples);

  if (!options.out_dir.empty()) {
    write_artifacts(a, options.out_dir);
  }
  return a;
}

}  // namespace chil
