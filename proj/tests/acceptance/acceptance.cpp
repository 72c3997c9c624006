// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
//
// Usage: acceptance --fixtures DIR --chilsim PATH --workdir DIR

#include <sys/wait.h>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chil/bus/frame.hpp"
#include "chil/bus/session.hpp"
#include "chil/controller.hpp"
#include "chil/controller_service.hpp"
#include "chil/ramp_metrics.hpp"
#include "chil/runner/ingest.hpp"
#include "chil/runner/scenario.hpp"
#include "chil/runner/synth.hpp"
#include "chil/text.hpp"

using namespace chil;
namespace fs = std::filesystem;

namespace {

struct Args {
  fs::path fixtures;
  fs::path chilsim;
  fs::path workdir;
};

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

PowerSeries load_fixture(const Args& args, const std::string& name) {
  IngestSpec spec;
  spec.path = args.fixtures / name;
  spec.rated_power_w = 3000;
  return ingest_csv(spec).series;
}

ScenarioConfig ideal_config() {
  ScenarioConfig cfg;
  cfg.battery.internal_resistance_ohm = 0;
  cfg.battery.capacity_wh = 1e9;
  cfg.battery.soc_clamping = false;
  cfg.battery.current_limit_a = INFINITY;
  return cfg;
}

bool split_exact(const ControllerLogRow& r) {
  return r.p_hat_w + r.p_batt_w == r.p_pv_w && r.p_pv_w - r.p_batt_w == r.p_hat_w;
}

// Shared across criteria 1 to 3: random on-grid sequences through the controller.
struct RandomSweep {
  std::size_t sequences = 0;
  std::size_t steps = 0;
  double worst_rel = 0.0;
  std::size_t mismatches = 0;
  std::size_t split_breaches = 0;
  double max_smoothed_rr = 0.0;
  double seconds = 0.0;
};

RandomSweep random_sweep() {
  constexpr std::size_t kWindow = 360;
  constexpr double kRated = 3000;
  RandomSweep out;
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> len(1, 2000);
  std::uniform_real_distribution<double> power(0, kRated);
  std::uniform_real_distribution<double> volts(47, 59);
  std::bernoulli_distribution extreme(0.2);

  const auto t0 = Clock::now();
  for (std::size_t s = 0; s < 1000; ++s) {
    const std::size_t n = len(rng);
    SmoothingController c(kWindow, 5);
    std::deque<double> window;
    long double sum = 0;
    PowerSeries smoothed{{}, 5, kRated, 0};
    for (std::size_t k = 0; k < n; ++k) {
      // Mix in full-scale swings so the ramp bound is pushed.
      double p = extreme(rng) ? ((rng() & 1) ? kRated : 0.0) : snap_power(power(rng), power_resolution(kRated));
      const double v = volts(rng);
      window.push_back(p);
      sum += p;
      if (window.size() > kWindow) {
        sum -= window.front();
        window.pop_front();
      }
      const double expect = static_cast<double>(sum / kWindow);
      const auto got = c.step(p, v);
      const double err = std::abs(got.p_hat_w - expect);
      if (err > 1e-12 * std::abs(expect)) ++out.mismatches;
      if (expect != 0.0) out.worst_rel = std::max(out.worst_rel, err / std::abs(expect));
      ControllerLogRow row{k + 1, static_cast<std::uint32_t>(k + 1), p, v, got.p_hat_w, got.p_batt_w, got.i_set_a,
                           StepStatus::ok};
      if (!split_exact(row)) ++out.split_breaches;
      smoothed.samples.push_back(got.p_hat_w);
      ++out.steps;
    }
    if (n > 12) {
      out.max_smoothed_rr = std::max(out.max_smoothed_rr, ramp_rate_series(smoothed, 60).max_abs_rr);
    }
    ++out.sequences;
  }
  out.seconds = seconds_since(t0);
  return out;
}

Outcome criterion1(const RandomSweep& sw) {
  Outcome o;
  o.pass = sw.mismatches == 0 && sw.seconds < 10.0;
  o.detail = std::to_string(sw.sequences) + " sequences, " + std::to_string(sw.steps) + " steps, " +
             std::to_string(sw.mismatches) + " outside 1e-12 rel, worst " + fmt("%.3g", sw.worst_rel) + ", " +
             fmt("%.2f s", sw.seconds);
  return o;
}

Outcome criterion2(const RandomSweep& sw) {
  Outcome o;
  o.pass = sw.max_smoothed_rr <= 3.33334;
  o.detail = "max |RR| of smoothed output " + fmt("%.6f", sw.max_smoothed_rr) + " %/min (bound 3.33334)";
  return o;
}

Outcome criterion3(const Args& args, const RandomSweep& sw) {
  Outcome o;
  std::size_t breaches = sw.split_breaches;
  std::size_t rows = sw.steps;
  for (const auto& cfg : {ScenarioConfig{}, ideal_config()}) {
    auto a = run_scenario(cfg, load_fixture(args, "cloud_random_seed42.csv"));
    for (const auto& r : a.session.controller_log) {
      ++rows;
      if (!split_exact(r)) ++breaches;
    }
  }
  auto ideal = run_scenario(ideal_config(), load_fixture(args, "cloud_random_seed42.csv"));
  std::size_t grid_mismatch = 0;
  std::size_t not_ideal = 0;
  for (std::size_t k = 0; k < ideal.session.trace.size(); ++k) {
    const auto& t = ideal.session.trace[k];
    if (t.i_applied_a != t.i_request_a) ++not_ideal;
    if (t.p_grid_w != ideal.session.controller_log[k].p_hat_w) ++grid_mismatch;
  }
  o.pass = breaches == 0 && grid_mismatch == 0 && not_ideal == 0;
  o.detail = std::to_string(breaches) + " split breaches in " + std::to_string(rows) + " steps; ideal plant: " +
             std::to_string(grid_mismatch) + " p_grid != p_hat, " + std::to_string(not_ideal) + " clamped currents";
  return o;
}

Outcome criterion4(const Args& args) {
  Outcome o;
  const auto series = load_fixture(args, "cloud_random_seed42.csv");
  const auto t0 = Clock::now();
  auto a = run_scenario(ScenarioConfig{}, series);
  const double secs = seconds_since(t0);
  const auto& v = a.smoothed.verdict_after_warmup;
  o.pass = a.raw.max_abs_rr >= 50 && v.violation_fraction == 0.0 && secs < 1.0;
  // Max smoothed ramp outside warm-up.
  double post = 0;
  for (std::size_t i = 0; i < a.smoothed.rr_pct_per_min.size(); ++i) {
    if (a.smoothed.eval_index[i] >= a.warmup_samples + a.smoothed.stride_samples) {
      post = std::max(post, std::abs(a.smoothed.rr_pct_per_min[i]));
    }
  }
  o.pass = o.pass && post <= 5.0;
  o.detail = "raw max " + fmt("%.2f", a.raw.max_abs_rr) + " %/min, smoothed max after warm-up " + fmt("%.3f", post) +
             " %/min, violation fraction " + fmt("%g", v.violation_fraction) + ", run " + fmt("%.3f s", secs);
  return o;
}

Outcome criterion5(const Args& args) {
  Outcome o;
  double worst = 0;
  bool bounds = true;
  std::uint64_t clamps = 0;
  std::vector<std::pair<ScenarioConfig, std::string>> cases;
  cases.emplace_back(ScenarioConfig{}, "cloud_random_seed42.csv");
  {
    ScenarioConfig c;
    c.battery.coulombic_efficiency = 0.95;
    c.battery.voltage_model = VoltageModel::linear_ocv;
    cases.emplace_back(c, "cloud_random_seed42.csv");
  }
  {
    ScenarioConfig c;
    c.battery.capacity_wh = 50;  // forces the SOC clamps
    cases.emplace_back(c, "cloud_random_seed42.csv");
  }
  for (const auto& [cfg, file] : cases) {
    auto a = run_scenario(cfg, load_fixture(args, file));
    const auto& b = a.config.battery;
    long double charge = 0;
    for (const auto& row : a.session.trace) {
      const double eta = row.i_applied_a > 0 ? b.coulombic_efficiency : 1.0 / b.coulombic_efficiency;
      charge += static_cast<long double>(eta * row.i_applied_a * a.config.sample_period_s);
      if (row.soc < b.soc_min || row.soc > b.soc_max) bounds = false;
    }
    const double expect = b.soc_init + static_cast<double>(charge / (3600.0L * b.capacity_ah()));
    worst = std::max(worst, std::abs(a.soc.final - expect));
    clamps += a.soc.clamp_events;
  }
  o.pass = worst <= 1e-9 && bounds && clamps > 0;
  o.detail = "max |SOC - coulomb count| " + fmt("%.3g", worst) + ", bounds " + (bounds ? "held" : "BROKEN") +
             ", clamp events " + std::to_string(clamps);
  return o;
}

Outcome criterion6(const Args& args) {
  Outcome o;
  const auto base = load_fixture(args, "cloud_random_seed42.csv");
  auto ref = run_scenario(ScenarioConfig{}, base);
  double worst = 0;
  bool verdicts = true;
  for (double factor : {10.0, 0.1}) {
    ScenarioConfig cfg;
    cfg.rated_power_w = 3000 * factor;
    cfg.battery.capacity_wh *= factor;
    PowerSeries s = base;
    s.rated_power_w *= factor;
    for (double& p : s.samples) p *= factor;
    auto a = run_scenario(cfg, s);
    for (const auto* pair : {&ref.raw, &ref.smoothed}) {
      const auto& other = pair == &ref.raw ? a.raw : a.smoothed;
      for (std::size_t i = 0; i < pair->rr_pct_per_min.size(); ++i) {
        const double x = pair->rr_pct_per_min[i];
        worst = std::max(worst, std::abs(x - other.rr_pct_per_min[i]) / std::max(1.0, std::abs(x)));
      }
      verdicts = verdicts && pair->verdict_after_warmup.violation_count == other.verdict_after_warmup.violation_count;
    }
  }
  o.pass = worst <= 1e-9 && verdicts;
  o.detail = "x10 and x0.1: worst relative RR difference " + fmt("%.3g", worst) + ", verdicts " +
             (verdicts ? "equal" : "DIFFER");
  return o;
}

Outcome criterion7(const Args& args) {
  using namespace chil::bus;
  Outcome o;
  std::ostringstream detail;

  std::mt19937_64 rng(7);
  std::size_t bad_round_trips = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto seq = static_cast<std::uint32_t>(rng());
    const std::uint64_t t = rng() >> 20;
    BusFrame f;
    switch (rng() % 4) {
      case 0: f = make_sensor(seq, t, std::bit_cast<double>(rng()), std::bit_cast<double>(rng())); break;
      case 1: f = make_setpoint(seq, t, std::bit_cast<double>(rng())); break;
      case 2: f = make_end(seq, t); break;
      default: f = make_fault(seq, t); break;
    }
    auto back = decode_frame(encode_frame(f));
    if (!std::holds_alternative<BusFrame>(back) || !(std::get<BusFrame>(back) == f)) ++bad_round_trips;
  }
  detail << "round trips 100000 (" << bad_round_trips << " bad); ";

  std::size_t flips = 0;
  std::size_t accepted = 0;
  for (const auto& f : {make_sensor(1, 0, 1500.25, 53.0), make_setpoint(1, 0, 4.75), make_end(2, 5000),
                        make_fault(2, 5000)}) {
    const auto good = encode_frame(f);
    for (std::size_t bit = 0; bit < good.size() * 8; ++bit) {
      Bytes b = good;
      flip_bit(b, bit);
      ++flips;
      if (!std::holds_alternative<DecodeError>(decode_frame(b))) ++accepted;
    }
  }
  detail << "bit flips " << flips << " (" << accepted << " accepted); ";

  const auto series = load_fixture(args, "cloud_random_seed42.csv");
  RunOptions sock;
  sock.link = LinkKind::socket;
  auto a = run_scenario(ScenarioConfig{}, series);
  auto b = run_scenario(ScenarioConfig{}, series, sock);
  const bool links_equal =
      plant_trace_table(a.session.trace) == plant_trace_table(b.session.trace) &&
      controller_log_table(a.session.controller_log) == controller_log_table(b.session.controller_log) &&
      frame_log_text(a.session.frames) == frame_log_text(b.session.frames);
  detail << "in-process vs socket " << (links_equal ? "identical" : "DIFFER") << "; ";

  ScenarioConfig fr;
  fr.transport.mode = TransportMode::free_running;
  fr.transport.latency_ms = 2000;
  fr.transport.jitter_ms = 1500;
  fr.seed = 42;
  auto f1 = run_scenario(fr, series);
  auto f2 = run_scenario(fr, series);
  const bool schedule_equal = frame_log_text(f1.session.frames) == frame_log_text(f2.session.frames) &&
                              plant_trace_table(f1.session.trace) == plant_trace_table(f2.session.trace);
  // Replay the delivery schedule: each sample applies the newest setpoint
  // delivered at or before its instant.
  std::size_t replay_mismatch = 0;
  {
    std::uint32_t best = 0;
    double value = 0;
    std::vector<std::pair<std::int64_t, BusFrame>> down;
    for (const auto& e : f1.session.frames) {
      if (e.direction == Direction::controller_to_plant) {
        down.emplace_back(e.deliver_us, std::get<BusFrame>(decode_frame(e.bytes)));
      }
    }
    std::size_t j = 0;
    for (std::size_t k = 0; k < f1.session.trace.size(); ++k) {
      const std::int64_t t = static_cast<std::int64_t>(k) * 5000000;
      while (j < down.size() && down[j].first <= t) {
        if (down[j].second.seq > best) {
          best = down[j].second.seq;
          value = down[j].second.payload[0];
        }
        ++j;
      }
      if (f1.session.trace[k].i_request_a != value) ++replay_mismatch;
    }
  }
  detail << "free-running seed 42 " << (schedule_equal ? "reproduced" : "NOT reproduced") << ", replay mismatches "
         << replay_mismatch;

  o.pass = bad_round_trips == 0 && accepted == 0 && links_equal && schedule_equal && replay_mismatch == 0;
  o.detail = detail.str();
  return o;
}

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string strip_created(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.find("\"created_utc\"") == std::string::npos) out += line + "\n";
  }
  return out;
}

Outcome criterion8(const Args& args) {
  Outcome o;
  const fs::path fixture = args.fixtures / "cloud_random_seed42.csv";
  fs::path dirs[2] = {args.workdir / "run_a", args.workdir / "run_b"};
  for (const auto& d : dirs) {
    fs::remove_all(d);
    const std::string cmd = args.chilsim.string() + " run --pv " + fixture.string() + " --rated 3000 --seed 42 -o " +
                            d.string() + " >/dev/null";
    if (run_command(cmd) != 0) {
      o.pass = false;
      o.detail = "chilsim run failed";
      return o;
    }
  }
  std::size_t files = 0;
  std::vector<std::string> differ;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const auto name = entry.path().filename();
    ++files;
    if (!fs::exists(dirs[1] / name)) {
      differ.push_back(name.string() + " (missing)");
      continue;
    }
    std::string x = read_file(dirs[0] / name);
    std::string y = read_file(dirs[1] / name);
    if (name == "metadata.json") {
      x = strip_created(x);
      y = strip_created(y);
    }
    if (x != y) differ.push_back(name.string());
  }
  o.pass = differ.empty() && files >= 10;
  o.detail = std::to_string(files) + " artifacts compared";
  for (const auto& d : differ) o.detail += ", differs: " + d;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  Args args;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string key = argv[i];
    if (key == "--fixtures") args.fixtures = argv[i + 1];
    else if (key == "--chilsim") args.chilsim = argv[i + 1];
    else if (key == "--workdir") args.workdir = argv[i + 1];
  }
  if (args.fixtures.empty() || args.chilsim.empty() || args.workdir.empty()) {
    std::fprintf(stderr, "usage: acceptance --fixtures DIR --chilsim PATH --workdir DIR\n");
    return 3;
  }
  fs::create_directories(args.workdir);

  const RandomSweep sweep = random_sweep();
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, [&] { return criterion1(sweep); }},
      {2, [&] { return criterion2(sweep); }},
      {3, [&] { return criterion3(args, sweep); }},
      {4, [&] { return criterion4(args); }},
      {5, [&] { return criterion5(args); }},
      {6, [&] { return criterion6(args); }},
      {7, [&] { return criterion7(args); }},
      {8, [&] { return criterion8(args); }},
  };

  int failed = 0;
  for (const auto& [id, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
