#include "chil/bus/session.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <queue>
#include <thread>

#include "chil/bus/frame.hpp"

namespace chil::bus {

DelayModel::DelayModel(double latency_ms, double jitter_ms, std::uint64_t seed)
    : latency_ms_(latency_ms), jitter_ms_(jitter_ms), rng_(seed) {}

std::int64_t DelayModel::draw_us() {
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;  // [0, 1)
  const double ms = latency_ms_ + (2.0 * u - 1.0) * jitter_ms_;
  return std::max<std::int64_t>(0, std::llround(ms * 1000.0));
}

namespace {

std::int64_t sample_time_us(std::size_t k, double period_s) {
  return std::llround(static_cast<double>(k) * period_s * 1e6);
}

std::uint64_t to_ms(std::int64_t us) { return static_cast<std::uint64_t>(us / 1000); }

class Corrupter {
 public:
  explicit Corrupter(const std::optional<CorruptFrame>& spec) : spec_(spec) {}
  void apply(Bytes& frame) {
    if (spec_ && sent_ == spec_->frame_index) flip_bit(frame, spec_->bit_index);
    ++sent_;
  }

 private:
  std::optional<CorruptFrame> spec_;
  std::size_t sent_ = 0;
};

SessionResult run_lockstep(Plant& plant, const ScenarioConfig& cfg, const SessionOptions& options) {
  const std::size_t window = cfg.window_samples;
  const double period = cfg.sample_period_s;
  DelayModel delays(cfg.transport.latency_ms, cfg.transport.jitter_ms, cfg.transport.seed);
  Corrupter corrupter(options.corrupt);

  std::unique_ptr<Endpoint> plant_end;
  std::unique_ptr<Endpoint> controller_end;
  std::optional<TcpListener> listener;
  if (options.link == LinkKind::in_process) {
    std::tie(plant_end, controller_end) = make_in_process_pair();
  } else {
    listener.emplace();
  }

  ControllerRun controller_run;
  std::exception_ptr controller_error;
  std::thread controller_thread([&, port = listener ? listener->port() : std::uint16_t{0}] {
    try {
      if (!controller_end) controller_end = tcp_connect(port);
      controller_run = run_controller(*controller_end, window, period);
    } catch (...) {
      controller_error = std::current_exception();
    }
  });

  SessionResult result;
  auto finish = [&] {
    if (plant_end) plant_end->close();
    controller_thread.join();
  };

  try {
    if (listener) plant_end = listener->accept();
    std::uint32_t seq = 0;
    const auto wall_start = std::chrono::steady_clock::now();
    while (!plant.done()) {
      const std::size_t k = plant.k();
      const std::int64_t t_us = sample_time_us(k, period);
      const SensorReading reading = plant.sensor();
      Bytes sensor = encode_frame(make_sensor(++seq, to_ms(t_us), reading.p_pv_w, reading.v_batt_v));
      corrupter.apply(sensor);
      plant_end->send(sensor);
      const std::int64_t d_up = delays.draw_us();
      result.frames.push_back({Direction::plant_to_controller, t_us, d_up, t_us + d_up, sensor});

      auto reply = plant_end->receive();
      if (!reply) {
        result.protocol_fault = true;
        result.fault_message = "controller closed the link at seq " + std::to_string(seq);
        break;
      }
      const std::int64_t reply_send = t_us + d_up;
      const std::int64_t d_down = delays.draw_us();
      result.frames.push_back({Direction::controller_to_plant, reply_send, d_down, reply_send + d_down, *reply});

      double setpoint = 0.0;
      auto decoded = decode_frame(*reply);
      if (auto* frame = std::get_if<BusFrame>(&decoded)) {
        if (frame->type == MsgType::fault) {
          result.protocol_fault = true;
          result.fault_message = "controller reported a protocol fault at seq " + std::to_string(frame->seq);
          break;
        }
        if (frame->type != MsgType::setpoint || frame->seq != seq) {
          plant_end->send(encode_frame(make_fault(seq, to_ms(t_us))));
          result.protocol_fault = true;
          result.fault_message = "setpoint sequence gap: expected " + std::to_string(seq) + ", got " +
                                 std::to_string(frame->seq);
          break;
        }
        setpoint = frame->payload[0];
      } else {
        ++result.plant_decode_errors;
      }

      result.trace.push_back(plant.step(plant.receive_setpoint(setpoint)));
      if (options.pace_realtime) {
        std::this_thread::sleep_until(wall_start + std::chrono::microseconds(sample_time_us(k + 1, period)));
      }
    }
    if (!result.protocol_fault) {
      const std::int64_t t_end = sample_time_us(plant.k(), period);
      Bytes end = encode_frame(make_end(seq + 1, to_ms(t_end)));
      plant_end->send(end);
      const std::int64_t d_end = delays.draw_us();
      result.frames.push_back({Direction::plant_to_controller, t_end, d_end, t_end + d_end, std::move(end)});
    }
  } catch (...) {
    finish();
    throw;
  }
  finish();
  if (controller_error) std::rethrow_exception(controller_error);

  result.controller_log = std::move(controller_run.log);
  result.controller_stats = controller_run.stats;
  if (result.controller_stats.protocol_faults > 0 && !result.protocol_fault) {
    result.protocol_fault = true;
    result.fault_message = "controller reported a protocol violation";
  }
  return result;
}

enum class EventKind { tick, apply, to_controller, to_plant };

struct Event {
  std::int64_t t_us;
  int priority;  // same instant: deliveries and ticks before the plant applies
  std::uint64_t order;
  EventKind kind;
  Bytes bytes;

  bool operator>(const Event& o) const {
    if (t_us != o.t_us) return t_us > o.t_us;
    if (priority != o.priority) return priority > o.priority;
    return order > o.order;
  }
};

SessionResult run_free_running(Plant& plant, const ScenarioConfig& cfg, const SessionOptions& options) {
  const double period = cfg.sample_period_s;
  DelayModel delays(cfg.transport.latency_ms, cfg.transport.jitter_ms, cfg.transport.seed);
  Corrupter corrupter(options.corrupt);
  ControllerService service(cfg.window_samples, period);

  SessionResult result;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  std::uint64_t order = 0;
  std::int64_t last_delivery[2] = {std::numeric_limits<std::int64_t>::min(),
                                   std::numeric_limits<std::int64_t>::min()};

  auto push = [&](std::int64_t t, int priority, EventKind kind, Bytes bytes = {}) {
    queue.push(Event{t, priority, order++, kind, std::move(bytes)});
  };
  auto transmit = [&](Direction dir, std::int64_t t, Bytes bytes) {
    const std::int64_t delay = delays.draw_us();
    auto& last = last_delivery[dir == Direction::plant_to_controller ? 0 : 1];
    const std::int64_t deliver = std::max(t + delay, last);
    last = deliver;
    result.frames.push_back({dir, t, delay, deliver, bytes});
    push(deliver, 0, dir == Direction::plant_to_controller ? EventKind::to_controller : EventKind::to_plant,
         std::move(bytes));
  };

  std::uint32_t seq = 0;
  std::uint32_t last_setpoint_seq = 0;
  double held_setpoint = 0.0;
  if (!plant.done()) push(0, 0, EventKind::tick);

  while (!queue.empty() && !result.protocol_fault) {
    Event ev = queue.top();
    queue.pop();
    switch (ev.kind) {
      case EventKind::tick: {
        const SensorReading reading = plant.sensor();
        Bytes sensor = encode_frame(make_sensor(++seq, to_ms(ev.t_us), reading.p_pv_w, reading.v_batt_v));
        corrupter.apply(sensor);
        transmit(Direction::plant_to_controller, ev.t_us, std::move(sensor));
        push(ev.t_us, 1, EventKind::apply);
        break;
      }
      case EventKind::apply: {
        result.trace.push_back(plant.step(plant.receive_setpoint(held_setpoint)));
        const std::int64_t next = sample_time_us(plant.k(), period);
        if (!plant.done()) {
          push(next, 0, EventKind::tick);
        } else {
          transmit(Direction::plant_to_controller, next, encode_frame(make_end(seq + 1, to_ms(next))));
        }
        break;
      }
      case EventKind::to_controller: {
        if (auto reply = service.handle(ev.bytes)) {
          transmit(Direction::controller_to_plant, ev.t_us, std::move(*reply));
        }
        break;
      }
      case EventKind::to_plant: {
        auto decoded = decode_frame(ev.bytes);
        if (auto* frame = std::get_if<BusFrame>(&decoded)) {
          if (frame->type == MsgType::fault) {
            result.protocol_fault = true;
            result.fault_message = "controller reported a protocol fault at seq " + std::to_string(frame->seq);
          } else if (frame->type == MsgType::setpoint && frame->seq > last_setpoint_seq) {
            last_setpoint_seq = frame->seq;
            held_setpoint = frame->payload[0];
          }
        } else {
          ++result.plant_decode_errors;
        }
        break;
      }
    }
  }

  result.controller_log = service.log();
  result.controller_stats = service.stats();
  return result;
}

}  // namespace

SessionResult session_run(Plant& plant, const ScenarioConfig& cfg, const SessionOptions& options) {
  if (cfg.window_samples == 0) {
    throw InputError("session_run needs a validated scenario");
  }
  if (cfg.transport.mode == TransportMode::free_running) {
    return run_free_running(plant, cfg, options);
  }
  return run_lockstep(plant, cfg, options);
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw InputError("odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw InputError("invalid hex digit");
    out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
  }
  return out;
}

std::string frame_log_text(const std::vector<FrameLogEntry>& frames) {
  std::string out;
  char stamp[96];
  for (const auto& f : frames) {
    std::snprintf(stamp, sizeof(stamp), "%s %lld.%03lld %lld.%03lld ",
                  f.direction == Direction::plant_to_controller ? "P>C" : "C>P",
                  static_cast<long long>(f.send_us / 1000), static_cast<long long>(f.send_us % 1000),
                  static_cast<long long>(f.deliver_us / 1000), static_cast<long long>(f.deliver_us % 1000));
    out += stamp;
    out += to_hex(f.bytes);
    out += '\n';
  }
  return out;
}

}  // namespace chil::bus
