#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "chil/domain.hpp"

namespace chil {

enum class TimestampFormat { epoch_s, iso8601 };

struct IngestSpec {
  std::filesystem::path path;
  std::string time_column = "time_s";
  std::string power_column = "power_w";
  TimestampFormat timestamp_format = TimestampFormat::epoch_s;
  bool resample = false;          // zero-order hold onto sample_period_s
  double sample_period_s = 5.0;   // grid for resampling, or for single-row files
  double power_scale = 1.0;       // e.g. 1000 for kW columns
  bool clamp_negative = false;
  bool clamp_to_rated = false;
  std::optional<double> rated_power_w;  // nullopt: take the series maximum
};

struct IngestResult {
  PowerSeries series;
  std::size_t rows = 0;
  std::size_t clamped_negative = 0;
  std::size_t clamped_above_rated = 0;
  std::size_t held_samples = 0;  // grid points filled from an earlier row
};

IngestResult ingest_csv(const IngestSpec& spec);
IngestResult ingest_csv_text(std::string_view text, const IngestSpec& spec);

/// Seconds since the Unix epoch for YYYY-MM-DD[T ]HH:MM:SS[.fff][Z|+HH:MM|-HH:MM].
std::optional<double> parse_iso8601(std::string_view text);

/// Canonical two-column form (time_s, power_w) readable by ingest_csv.
std::string series_to_csv(const PowerSeries& series);

}  // namespace chil
