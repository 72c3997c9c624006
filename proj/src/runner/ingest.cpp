#include "chil/runner/ingest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "chil/text.hpp"

namespace chil {

namespace {

struct Row {
  double t;
  double p;
  std::size_t line;
};

std::optional<int> digits(std::string_view s, std::size_t pos, std::size_t count) {
  if (pos + count > s.size()) return std::nullopt;
  int v = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (s[i] < '0' || s[i] > '9') return std::nullopt;
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

}  // namespace

std::optional<double> parse_iso8601(std::string_view s) {
  s = trim(s);
  const auto y = digits(s, 0, 4);
  const auto mo = digits(s, 5, 2);
  const auto d = digits(s, 8, 2);
  const auto h = digits(s, 11, 2);
  const auto mi = digits(s, 14, 2);
  const auto sec = digits(s, 17, 2);
  if (!y || !mo || !d || !h || !mi || !sec || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':') {
    return std::nullopt;
  }
  using namespace std::chrono;
  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
  if (!ymd.ok() || *h > 23 || *mi > 59 || *sec > 60) return std::nullopt;
  double t = static_cast<double>(sys_days{ymd}.time_since_epoch().count()) * 86400.0 + *h * 3600.0 + *mi * 60.0 +
             *sec;

  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    std::size_t end = pos + 1;
    while (end < s.size() && s[end] >= '0' && s[end] <= '9') ++end;
    auto frac = parse_double(std::string("0") + std::string(s.substr(pos, end - pos)));
    if (!frac || end == pos + 1) return std::nullopt;
    t += *frac;
    pos = end;
  }
  if (pos == s.size()) return t;
  if (s[pos] == 'Z' && pos + 1 == s.size()) return t;
  if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
    const auto oh = digits(s, pos + 1, 2);
    const auto om = digits(s, pos + 4, 2);
    if (!oh || !om) return std::nullopt;
    const double offset = *oh * 3600.0 + *om * 60.0;
    return s[pos] == '+' ? t - offset : t + offset;
  }
  return std::nullopt;
}

IngestResult ingest_csv(const IngestSpec& spec) { return ingest_csv_text(read_file(spec.path), spec); }

IngestResult ingest_csv_text(std::string_view text, const IngestSpec& spec) {
  auto lines = split(text, '\n');
  std::size_t header_line = 0;
  while (header_line < lines.size() && trim(lines[header_line]).empty()) ++header_line;
  if (header_line == lines.size()) {
    throw InputError("PV file has no header row");
  }
  const auto header = split(trim(lines[header_line]), ',');
  auto column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw InputError("PV file has no column '" + name + "'");
  };
  const std::size_t time_col = column(spec.time_column);
  const std::size_t power_col = column(spec.power_column);

  IngestResult result;
  std::vector<Row> rows;
  std::vector<std::string> errors;
  for (std::size_t i = header_line + 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const std::size_t line_no = i + 1;
    const auto cols = split(line, ',');
    if (cols.size() <= std::max(time_col, power_col)) {
      errors.push_back("line " + std::to_string(line_no) + ": missing columns");
      continue;
    }
    const auto t = spec.timestamp_format == TimestampFormat::epoch_s ? parse_double(cols[time_col])
                                                                      : parse_iso8601(cols[time_col]);
    const auto p = parse_double(cols[power_col]);
    if (!t || !std::isfinite(*t)) {
      errors.push_back("line " + std::to_string(line_no) + ": bad timestamp '" + std::string(trim(cols[time_col])) +
                       "'");
      continue;
    }
    if (!p || !std::isfinite(*p)) {
      errors.push_back("line " + std::to_string(line_no) + ": bad power '" + std::string(trim(cols[power_col])) + "'");
      continue;
    }
    double watts = *p * spec.power_scale;
    if (watts < 0.0) {
      if (!spec.clamp_negative) {
        errors.push_back("line " + std::to_string(line_no) + ": negative power (enable clamp_negative)");
        continue;
      }
      watts = 0.0;
      ++result.clamped_negative;
    }
    rows.push_back({*t, watts, line_no});
  }
  if (!errors.empty()) {
    std::string msg = "unparseable PV rows:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw InputError(msg);
  }
  if (rows.empty()) {
    throw InputError("PV file has no data rows");
  }
  result.rows = rows.size();

  PowerSeries& series = result.series;
  if (spec.resample) {
    if (!(spec.sample_period_s > 0.0)) throw InputError("resample period must be positive");
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    series.start_time_s = rows.front().t;
    series.sample_period_s = spec.sample_period_s;
    const double steps = (rows.back().t - rows.front().t) / spec.sample_period_s;
    const auto span = static_cast<std::size_t>(std::floor(steps + 1e-9));
    std::size_t next = 0;
    double held = rows.front().p;
    for (std::size_t k = 0; k <= span; ++k) {
      const double g = series.start_time_s + static_cast<double>(k) * spec.sample_period_s;
      bool fresh = false;
      while (next < rows.size() && rows[next].t <= g + 1e-9) {
        held = rows[next].p;
        fresh = true;
        ++next;
      }
      if (!fresh) ++result.held_samples;
      series.samples.push_back(held);
    }
  } else {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (!(rows[i].t > rows[i - 1].t)) {
        throw InputError("line " + std::to_string(rows[i].line) + ": non-monotone time (enable resampling)");
      }
    }
    series.start_time_s = rows.front().t;
    series.sample_period_s = rows.size() > 1 ? rows[1].t - rows[0].t : spec.sample_period_s;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double expected = series.start_time_s + static_cast<double>(i) * series.sample_period_s;
      if (std::abs(rows[i].t - expected) > 1e-6 * std::max(1.0, series.sample_period_s)) {
        throw InputError("line " + std::to_string(rows[i].line) + ": irregular sample spacing (enable resampling)");
      }
    }
    for (const auto& r : rows) series.samples.push_back(r.p);
  }

  const double peak = *std::max_element(series.samples.begin(), series.samples.end());
  series.rated_power_w = spec.rated_power_w.value_or(peak);
  if (!(series.rated_power_w > 0.0)) {
    throw InputError("rated power is zero: supply rated_power_w");
  }
  for (double& p : series.samples) {
    if (p > series.rated_power_w) {
      if (!spec.clamp_to_rated) {
        throw InputError("sample above rated power (enable clamp_to_rated)");
      }
      p = series.rated_power_w;
      ++result.clamped_above_rated;
    }
  }
  check_series(series);
  return result;
}

std::string series_to_csv(const PowerSeries& series) {
  std::ostringstream os;
  os << "time_s,power_w\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    os << format_double(series.time_at(k)) << ',' << format_double(series.samples[k]) << '\n';
  }
  return os.str();
}

}  // namespace chil
