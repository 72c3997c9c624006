#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chil/bus/frame.hpp"
#include "chil/bus/transport.hpp"
#include "chil/controller.hpp"

namespace chil {

enum class StepStatus { ok, voltage_fault, rejected };

struct ControllerLogRow {
  std::uint64_t k = 0;  // controller sample index, 0 for rejected frames
  std::uint32_t seq = 0;
  double p_pv_w = 0.0;
  double v_batt_v = 0.0;
  double p_hat_w = 0.0;
  double p_batt_w = 0.0;
  double i_set_a = 0.0;
  StepStatus status = StepStatus::ok;
};

struct ControllerStats {
  std::size_t frames_received = 0;
  std::size_t setpoints_sent = 0;
  std::size_t decode_errors = 0;
  std::size_t voltage_faults = 0;
  std::size_t protocol_faults = 0;
  std::size_t conservation_breaches = 0;
  bool got_end = false;
};

/// Frame-level wrapper around SmoothingController.
///
/// Each SENSOR frame gets exactly one SETPOINT with the same seq. A frame that
/// fails to decode is answered with a zero setpoint for the next expected seq.
/// A seq other than last + 1 is a protocol violation answered by FAULT, after
/// which the service is finished.
class ControllerService {
 public:
  ControllerService(std::size_t window_samples, double control_period_s);

  /// Reply to send back, or nullopt when nothing is owed (END, FAULT, finished).
  std::optional<bus::Bytes> handle(std::span<const std::uint8_t> frame);

  bool finished() const { return finished_; }
  const std::vector<ControllerLogRow>& log() const { return log_; }
  const ControllerStats& stats() const { return stats_; }
  const SmoothingController& controller() const { return controller_; }

 private:
  bus::Bytes reply_setpoint(std::uint32_t seq, std::uint64_t t_ms, double i_set_a);

  SmoothingController controller_;
  std::vector<ControllerLogRow> log_;
  ControllerStats stats_;
  std::uint32_t last_seq_ = 0;
  std::uint64_t last_time_ms_ = 0;
  bool finished_ = false;
};

struct ControllerRun {
  std::vector<ControllerLogRow> log;
  ControllerStats stats;
};

/// Serve one session: receive, compute, reply until END, FAULT or the peer closes.
ControllerRun run_controller(bus::Endpoint& endpoint, std::size_t window_samples, double control_period_s);

std::string_view to_string(StepStatus s);

/// Delimited step log, one row per handled frame. Rows with seq <= warmup_samples
/// carry warmup = 1.
std::string controller_log_table(const std::vector<ControllerLogRow>& rows, std::size_t warmup_samples = 0);
std::vector<ControllerLogRow> parse_controller_log(std::string_view text);

}  // namespace chil
