// chilsim: PV smoothing co-simulation driver.
//
// Exit codes: 0 success, 2 invariant breach, 3 input error, 4 protocol fault.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>

#include "chil/bus/frame.hpp"
#include "chil/bus/session.hpp"
#include "chil/controller_service.hpp"
#include "chil/ramp_metrics.hpp"
#include "chil/runner/ingest.hpp"
#include "chil/runner/scenario.hpp"
#include "chil/runner/synth.hpp"
#include "chil/scenario_file.hpp"
#include "chil/text.hpp"

namespace {

constexpr int kExitInvariant = 2;
constexpr int kExitInput = 3;
constexpr int kExitProtocol = 4;

struct IngestArgs {
  std::string input;
  std::string time_col = "time_s";
  std::string power_col = "power_w";
  std::string timestamp_format = "epoch_s";
  bool resample = false;
  double period = 5.0;
  double power_scale = 1.0;
  bool clamp_negative = false;
  bool clamp_to_rated = false;
  double rated = 0.0;
};

void add_ingest_options(CLI::App* cmd, IngestArgs& a, const char* input_flag) {
  cmd->add_option(input_flag, a.input, "PV data file (delimited text)")->required();
  cmd->add_option("--time-col", a.time_col, "time column name");
  cmd->add_option("--power-col", a.power_col, "power column name");
  cmd->add_option("--timestamp-format", a.timestamp_format, "epoch_s or iso8601")
      ->check(CLI::IsMember({"epoch_s", "iso8601"}));
  cmd->add_flag("--resample", a.resample, "zero-order hold onto --period");
  cmd->add_option("--period", a.period, "sample period in seconds");
  cmd->add_option("--power-scale", a.power_scale, "multiplier to watts (1000 for kW)");
  cmd->add_flag("--clamp-negative", a.clamp_negative, "replace negative power with 0");
  cmd->add_flag("--clamp-to-rated", a.clamp_to_rated, "cap samples at the rated power");
  cmd->add_option("--rated", a.rated, "nameplate of the input in W (default: series maximum)");
}

chil::IngestResult do_ingest(const IngestArgs& a) {
  chil::IngestSpec spec;
  spec.path = a.input;
  spec.time_column = a.time_col;
  spec.power_column = a.power_col;
  spec.timestamp_format =
      a.timestamp_format == "iso8601" ? chil::TimestampFormat::iso8601 : chil::TimestampFormat::epoch_s;
  spec.resample = a.resample;
  spec.sample_period_s = a.period;
  spec.power_scale = a.power_scale;
  spec.clamp_negative = a.clamp_negative;
  spec.clamp_to_rated = a.clamp_to_rated;
  if (a.rated > 0.0) spec.rated_power_w = a.rated;
  return chil::ingest_csv(spec);
}

int cmd_synth(const std::string& profile, chil::SynthSpec spec, const std::string& base, const std::string& out) {
  static const std::map<std::string, chil::SynthProfile> profiles = {
      {"clear", chil::SynthProfile::clear},
      {"cloud_square", chil::SynthProfile::cloud_square},
      {"cloud_random", chil::SynthProfile::cloud_random}};
  spec.profile = profiles.at(profile);
  spec.base = base == "flat" ? chil::BaseShape::flat : chil::BaseShape::bell;
  const auto series = chil::synth_pv(spec);
  const auto csv = chil::series_to_csv(series);
  if (out.empty()) {
    std::cout << csv;
  } else {
    chil::write_file_atomic(out, csv);
    std::cerr << "wrote " << series.size() << " samples to " << out << "\n";
  }
  return 0;
}

int cmd_ingest(const IngestArgs& a, const std::string& out) {
  const auto r = do_ingest(a);
  if (!out.empty()) chil::write_file_atomic(out, chil::series_to_csv(r.series));
  std::cout << "rows " << r.rows << ", samples " << r.series.size() << ", period "
            << chil::format_double(r.series.sample_period_s) << " s, rated "
            << chil::format_double(r.series.rated_power_w) << " W, negative clamped " << r.clamped_negative
            << ", above-rated clamped " << r.clamped_above_rated << ", held " << r.held_samples << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const IngestArgs& pv, const std::string& out_dir,
            const std::string& transport, std::optional<std::uint64_t> seed, long long corrupt_frame,
            std::size_t corrupt_bit, bool pace) {
  chil::ScenarioConfig cfg = config_path.empty() ? chil::ScenarioConfig{} : chil::load_scenario(config_path);
  if (seed) cfg.seed = *seed;
  const auto ingested = do_ingest(pv);

  chil::RunOptions opts;
  opts.out_dir = out_dir;
  opts.link = transport == "socket" ? chil::bus::LinkKind::socket : chil::bus::LinkKind::in_process;
  if (corrupt_frame >= 0) opts.corrupt = chil::bus::CorruptFrame{static_cast<std::size_t>(corrupt_frame), corrupt_bit};
  opts.pace_realtime = pace;

  const auto a = chil::run_scenario(cfg, ingested.series, opts);
  std::cout << "samples            " << a.series.size() << "\n"
            << "raw max ramp       " << chil::format_double(a.raw.max_abs_rr) << " %/min\n"
            << "smoothed max ramp  " << chil::format_double(a.smoothed.max_abs_rr) << " %/min\n"
            << "smoothed violations (excl. warm-up) " << a.smoothed.verdict_after_warmup.violation_count << "\n"
            << "soc min/max/final  " << chil::format_double(a.soc.min) << " / " << chil::format_double(a.soc.max)
            << " / " << chil::format_double(a.soc.final) << "\n"
            << "config hash        " << a.config_hash << "\n";
  if (!out_dir.empty()) std::cout << "artifacts in " << out_dir << "\n";
  return 0;
}

int cmd_metrics(const std::string& path, const std::string& column, double rated, double period,
                double interval, double limit, const std::string& alignment, double bin_width,
                std::size_t warmup, const std::string& out) {
  chil::PowerSeries series;
  if (column == "p_hat_w") {
    const auto rows = chil::parse_controller_log(chil::read_file(path));
    chil::PowerSeries like;
    like.sample_period_s = period;
    like.rated_power_w = rated;
    series = chil::smoothed_series(rows, like);
  } else {
    chil::IngestSpec spec;
    spec.path = path;
    spec.power_column = column;
    if (rated > 0.0) spec.rated_power_w = rated;
    series = chil::ingest_csv(spec).series;
  }
  chil::ScenarioConfig cfg;
  cfg.sample_period_s = series.sample_period_s;
  cfg.rr_interval_s = interval;
  cfg.ramp_limit_pct_per_min = limit;
  cfg.rr_alignment =
      alignment == "sliding" ? chil::RampAlignment::sliding : chil::RampAlignment::non_overlapping;
  cfg.histogram_bin_width = bin_width;
  const auto report = chil::build_ramp_report(series, cfg, warmup);
  const auto doc = chil::to_json(report).dump(2) + "\n";
  if (out.empty()) {
    std::cout << doc;
  } else {
    chil::write_file_atomic(out, doc);
    chil::write_file_atomic(out + ".rates.csv", chil::rates_table(report));
  }
  return report.verdict_all.pass ? 0 : 1;
}

// Conformance: reference frames, round trip, every single-bit flip rejected.
int cmd_protocol_check(const std::string& write_path, const std::string& verify_path) {
  using namespace chil::bus;
  if (!verify_path.empty()) {
    std::size_t line_no = 0;
    std::size_t bad = 0;
    const std::string text = chil::read_file(verify_path);
    for (auto line : chil::split(text, '\n')) {
      ++line_no;
      line = chil::trim(line);
      if (line.empty()) continue;
      const auto fields = chil::split(line, ' ');
      const auto bytes = from_hex(fields.back());
      const auto decoded = decode_frame(bytes);
      if (const auto* err = std::get_if<DecodeError>(&decoded)) {
        std::cout << "line " << line_no << ": " << to_string(*err) << "\n";
        ++bad;
      }
    }
    std::cout << (bad == 0 ? "all frames valid" : std::to_string(bad) + " invalid frame(s)") << "\n";
    return bad == 0 ? 0 : kExitProtocol;
  }

  const std::vector<BusFrame> reference = {make_sensor(1, 0, 0.0, 53.0), make_setpoint(1, 0, -12.5),
                                           make_end(2, 5000), make_fault(7, 35000)};
  std::vector<FrameLogEntry> entries;
  bool ok = true;
  for (const auto& f : reference) {
    const auto bytes = encode_frame(f);
    const auto back = decode_frame(bytes);
    const bool round_trip = std::holds_alternative<BusFrame>(back) && std::get<BusFrame>(back) == f;
    std::size_t caught = 0;
    for (std::size_t bit = 0; bit < bytes.size() * 8; ++bit) {
      auto copy = bytes;
      flip_bit(copy, bit);
      if (std::holds_alternative<DecodeError>(decode_frame(copy))) ++caught;
    }
    const bool flips = caught == bytes.size() * 8;
    ok = ok && round_trip && flips;
    std::printf("%-8s %3zu bytes  round-trip %s  bit flips rejected %zu/%zu\n",
                f.type == MsgType::sensor     ? "SENSOR"
                : f.type == MsgType::setpoint ? "SETPOINT"
                : f.type == MsgType::end      ? "END"
                                              : "FAULT",
                bytes.size(), round_trip ? "ok" : "FAIL", caught, bytes.size() * 8);
    entries.push_back({Direction::plant_to_controller, 0, 0, 0, bytes});
  }
  if (!write_path.empty()) chil::write_file_atomic(write_path, frame_log_text(entries));
  return ok ? 0 : kExitProtocol;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PV smoothing controller/plant co-simulation"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic PV profile");
  std::string profile = "clear";
  std::string base = "bell";
  std::string synth_out;
  chil::SynthSpec synth_spec;
  synth->add_option("--profile", profile)->check(CLI::IsMember({"clear", "cloud_square", "cloud_random"}));
  synth->add_option("--duration", synth_spec.duration_s, "seconds");
  synth->add_option("--period", synth_spec.sample_period_s, "seconds");
  synth->add_option("--rated", synth_spec.rated_w, "W");
  synth->add_option("--seed", synth_spec.seed);
  synth->add_option("--base", base)->check(CLI::IsMember({"bell", "flat"}));
  synth->add_option("--depth", synth_spec.depth, "cloud_square attenuation");
  synth->add_option("--cloud-period", synth_spec.cloud_period_s, "cloud_square period, s");
  synth->add_option("-o,--out", synth_out);

  auto* ingest = app.add_subcommand("ingest", "validate and normalise a PV data file");
  IngestArgs ingest_args;
  std::string ingest_out;
  add_ingest_options(ingest, ingest_args, "-i,--input");
  ingest->add_option("-o,--out", ingest_out, "canonical time_s,power_w output");

  auto* run = app.add_subcommand("run", "run the closed-loop experiment");
  std::string config_path;
  IngestArgs run_pv;
  std::string out_dir;
  std::string transport = "inproc";
  std::optional<std::uint64_t> run_seed;
  long long corrupt_frame = -1;
  std::size_t corrupt_bit = 0;
  bool pace = false;
  run->add_option("-c,--config", config_path, "scenario file");
  add_ingest_options(run, run_pv, "--pv");
  run->add_option("-o,--out", out_dir, "artifact directory");
  run->add_option("--transport", transport)->check(CLI::IsMember({"inproc", "socket"}));
  run->add_option("--seed", run_seed, "overrides the scenario seed");
  run->add_option("--corrupt-frame", corrupt_frame, "flip a bit in this sensor frame (0-based)");
  run->add_option("--corrupt-bit", corrupt_bit, "bit to flip");
  run->add_flag("--pace", pace, "pace lockstep on wall-clock time");

  auto* metrics = app.add_subcommand("metrics", "ramp-rate report for a power file");
  std::string metrics_in;
  std::string metrics_col = "power_w";
  std::string metrics_out;
  double metrics_rated = 0.0;
  double metrics_period = 5.0;
  double metrics_interval = 60.0;
  double metrics_limit = 5.0;
  double metrics_bin = 1.0;
  std::size_t metrics_warmup = 0;
  std::string metrics_align = "non_overlapping";
  metrics->add_option("-i,--input", metrics_in)->required();
  metrics->add_option("--column", metrics_col, "power column, or p_hat_w for a controller log");
  metrics->add_option("--rated", metrics_rated, "W (default: series maximum)");
  metrics->add_option("--period", metrics_period, "sample period of a controller log, s");
  metrics->add_option("--interval", metrics_interval, "ramp interval, s");
  metrics->add_option("--limit", metrics_limit, "%/min");
  metrics->add_option("--alignment", metrics_align)->check(CLI::IsMember({"non_overlapping", "sliding"}));
  metrics->add_option("--bin-width", metrics_bin, "%/min");
  metrics->add_option("--warmup", metrics_warmup, "samples excluded from the second verdict");
  metrics->add_option("-o,--out", metrics_out);

  auto* protocol = app.add_subcommand("protocol-check", "wire-format conformance");
  std::string protocol_write;
  std::string protocol_verify;
  protocol->add_option("--write", protocol_write, "write reference frames as a hex log");
  protocol->add_option("--verify", protocol_verify, "decode every frame of a hex log");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(profile, synth_spec, base, synth_out);
    if (*ingest) return cmd_ingest(ingest_args, ingest_out);
    if (*run) {
      return cmd_run(config_path, run_pv, out_dir, transport, run_seed, corrupt_frame, corrupt_bit, pace);
    }
    if (*metrics) {
      return cmd_metrics(metrics_in, metrics_col, metrics_rated, metrics_period, metrics_interval,
                         metrics_limit, metrics_align, metrics_bin, metrics_warmup, metrics_out);
    }
    if (*protocol) return cmd_protocol_check(protocol_write, protocol_verify);
  } catch (const chil::InvariantBreach& e) {
    std::cerr << "invariant breach: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const chil::ProtocolFault& e) {
    std::cerr << "protocol fault: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const chil::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
