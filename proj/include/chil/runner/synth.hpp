#pragma once

#include <cstdint>

#include "chil/domain.hpp"

namespace chil {

enum class SynthProfile { clear, cloud_square, cloud_random };
enum class BaseShape { bell, flat };

struct SynthSpec {
  SynthProfile profile = SynthProfile::clear;
  double duration_s = 7200.0;
  double sample_period_s = 5.0;
  double rated_w = 3000.0;
  std::uint64_t seed = 0;
  BaseShape base = BaseShape::bell;

  // cloud_square: cloudy while (t - phase) mod period < duty * period.
  double depth = 0.8;
  double cloud_period_s = 600.0;
  double cloud_duty = 0.5;
  double cloud_phase_s = 300.0;

  // cloud_random: two-state telegraph process with exponential dwell times;
  // each cloud draws its depth uniformly from [min_depth, max_depth].
  double mean_clear_s = 300.0;
  double mean_cloudy_s = 120.0;
  double min_depth = 0.6;
  double max_depth = 0.9;
};

/// duration_s / sample_period_s samples starting at t = 0, all within [0, rated_w].
PowerSeries synth_pv(const SynthSpec& spec);

}  // namespace chil
