#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "chil/bus/session.hpp"
#include "chil/domain.hpp"
#include "chil/ramp_metrics.hpp"

namespace chil {

inline constexpr const char* kVersion = "0.3.0";

struct RunOptions {
  std::filesystem::path out_dir;  // empty: compute only, write nothing
  bus::LinkKind link = bus::LinkKind::in_process;
  std::optional<bus::CorruptFrame> corrupt;
  bool pace_realtime = false;
};

struct SocSummary {
  double initial = 0.0;
  double min = 0.0;
  double max = 0.0;
  double final = 0.0;
  std::uint64_t clamp_events = 0;
};

struct RunArtifacts {
  std::filesystem::path plant_trace;
  std::filesystem::path controller_log;
  std::filesystem::path frame_log;
  std::filesystem::path metrics;
  std::filesystem::path histogram;
  std::filesystem::path metadata;

  ScenarioConfig config;  // validated
  PowerSeries series;     // as played back by the plant
  std::string config_hash;
  std::size_t warmup_samples = 0;
  RampReport raw;
  RampReport smoothed;  // p_hat from the controller log
  RampReport grid;      // p_grid from the plant trace
  SocSummary soc;
  bus::SessionResult session;
};

/// Applies scaling and the rated-power policy, then checks the series.
PowerSeries prepare_series(const PowerSeries& input, const ScenarioConfig& cfg);

/// Smoothed-power series rebuilt from a controller log (ok rows only).
PowerSeries smoothed_series(const std::vector<ControllerLogRow>& log, const PowerSeries& like);

/// Runs the closed loop, asserts the conservation and SOC invariants, scores
/// raw/smoothed/grid ramps and writes the artifact set.
/// Throws InputError, InvariantBreach or ProtocolFault.
RunArtifacts run_scenario(const ScenarioConfig& cfg, const PowerSeries& series, const RunOptions& options = {});

std::string plant_trace_table(const std::vector<PlantTraceRow>& rows);

}  // namespace chil
