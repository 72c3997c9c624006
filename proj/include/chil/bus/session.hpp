#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chil/bus/transport.hpp"
#include "chil/controller_service.hpp"
#include "chil/domain.hpp"
#include "chil/plant.hpp"

namespace chil::bus {

enum class Direction { plant_to_controller, controller_to_plant };

struct FrameLogEntry {
  Direction direction = Direction::plant_to_controller;
  std::int64_t send_us = 0;
  std::int64_t delay_us = 0;
  std::int64_t deliver_us = 0;
  Bytes bytes;
};

/// Link delay: latency + uniform(-jitter, +jitter), drawn from a seeded
/// mt19937_64 (53-bit mantissa mapping, so draws are portable).
class DelayModel {
 public:
  DelayModel(double latency_ms, double jitter_ms, std::uint64_t seed);
  std::int64_t draw_us();

 private:
  double latency_ms_;
  double jitter_ms_;
  std::mt19937_64 rng_;
};

enum class LinkKind { in_process, socket };

struct CorruptFrame {
  std::size_t frame_index = 0;  // 0-based, plant -> controller direction
  std::size_t bit_index = 0;
};

struct SessionOptions {
  LinkKind link = LinkKind::in_process;
  std::optional<CorruptFrame> corrupt;
  bool pace_realtime = false;  // lockstep only: sleep one period per sample
};

struct SessionResult {
  std::vector<PlantTraceRow> trace;
  std::vector<ControllerLogRow> controller_log;
  ControllerStats controller_stats;
  std::vector<FrameLogEntry> frames;
  std::size_t plant_decode_errors = 0;
  bool protocol_fault = false;
  std::string fault_message;
};

/// Closed loop between a Plant and a SmoothingController over the bus.
///
/// Lockstep: SENSOR(k) -> SETPOINT(k) strictly alternate over a real link;
/// delays only stamp the frame log. Free running: a virtual-clock event loop
/// where frames arrive after their drawn delay through FIFO channels and the
/// plant applies the newest setpoint that has arrived by each sample instant.
SessionResult session_run(Plant& plant, const ScenarioConfig& cfg, const SessionOptions& options = {});

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);

/// One line per frame: direction, send/deliver time in ms, hex bytes.
std::string frame_log_text(const std::vector<FrameLogEntry>& frames);

}  // namespace chil::bus
