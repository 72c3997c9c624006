#include "chil/runner/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace chil {

namespace {

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double exponential_draw(std::mt19937_64& rng, double mean) { return -mean * std::log1p(-unit_draw(rng)); }

double base_shape(const SynthSpec& spec, double t) {
  if (spec.base == BaseShape::flat) return 1.0;
  const double s = std::sin(std::numbers::pi * t / spec.duration_s);
  return s * s;
}

}  // namespace

PowerSeries synth_pv(const SynthSpec& spec) {
  const auto n = whole_multiple(spec.duration_s, spec.sample_period_s);
  if (!n || *n == 0) {
    throw InputError("synth duration must be a positive multiple of the sample period");
  }
  if (!(spec.rated_w > 0.0)) {
    throw InputError("synth rated power must be positive");
  }

  PowerSeries series;
  series.sample_period_s = spec.sample_period_s;
  series.rated_power_w = spec.rated_w;
  series.samples.reserve(*n);

  std::mt19937_64 rng(spec.seed);
  bool cloudy = false;
  double next_switch = exponential_draw(rng, spec.mean_clear_s);
  double cloud_depth = 0.0;

  for (std::size_t k = 0; k < *n; ++k) {
    const double t = static_cast<double>(k) * spec.sample_period_s;
    double attenuation = 0.0;
    switch (spec.profile) {
      case SynthProfile::clear:
        break;
      case SynthProfile::cloud_square: {
        const double phase = std::fmod(t - spec.cloud_phase_s, spec.cloud_period_s);
        const double wrapped = phase < 0.0 ? phase + spec.cloud_period_s : phase;
        if (t >= spec.cloud_phase_s && wrapped < spec.cloud_duty * spec.cloud_period_s) {
          attenuation = spec.depth;
        }
        break;
      }
      case SynthProfile::cloud_random: {
        while (t >= next_switch) {
          cloudy = !cloudy;
          if (cloudy) {
            cloud_depth = spec.min_depth + (spec.max_depth - spec.min_depth) * unit_draw(rng);
          }
          next_switch += exponential_draw(rng, cloudy ? spec.mean_cloudy_s : spec.mean_clear_s);
        }
        attenuation = cloudy ? cloud_depth : 0.0;
        break;
      }
    }
    const double p = spec.rated_w * base_shape(spec, t) * (1.0 - attenuation);
    series.samples.push_back(std::clamp(p, 0.0, spec.rated_w));
  }
  return series;
}

}  // namespace chil
