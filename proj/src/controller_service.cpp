#include "chil/controller_service.hpp"

#include <sstream>

#include "chil/domain.hpp"
#include "chil/text.hpp"

namespace chil {

ControllerService::ControllerService(std::size_t window_samples, double control_period_s)
    : controller_(window_samples, control_period_s) {}

bus::Bytes ControllerService::reply_setpoint(std::uint32_t seq, std::uint64_t t_ms, double i_set_a) {
  ++stats_.setpoints_sent;
  return bus::encode_frame(bus::make_setpoint(seq, t_ms, i_set_a));
}

std::optional<bus::Bytes> ControllerService::handle(std::span<const std::uint8_t> bytes) {
  if (finished_) return std::nullopt;
  ++stats_.frames_received;

  auto decoded = bus::decode_frame(bytes);
  if (std::holds_alternative<bus::DecodeError>(decoded)) {
    ++stats_.decode_errors;
    ++last_seq_;
    ControllerLogRow row;
    row.seq = last_seq_;
    row.status = StepStatus::rejected;
    log_.push_back(row);
    return reply_setpoint(last_seq_, last_time_ms_, 0.0);
  }

  const auto& frame = std::get<bus::BusFrame>(decoded);
  switch (frame.type) {
    case bus::MsgType::end:
      stats_.got_end = true;
      finished_ = true;
      return std::nullopt;
    case bus::MsgType::fault:
      ++stats_.protocol_faults;
      finished_ = true;
      return std::nullopt;
    case bus::MsgType::setpoint:
      ++stats_.protocol_faults;
      finished_ = true;
      return bus::encode_frame(bus::make_fault(frame.seq, frame.sim_time_ms));
    case bus::MsgType::sensor:
      break;
  }

  if (frame.seq != last_seq_ + 1) {
    ++stats_.protocol_faults;
    finished_ = true;
    return bus::encode_frame(bus::make_fault(frame.seq, frame.sim_time_ms));
  }
  last_seq_ = frame.seq;
  last_time_ms_ = frame.sim_time_ms;

  ControllerLogRow row;
  row.seq = frame.seq;
  row.k = controller_.k();
  row.p_pv_w = frame.payload[0];
  row.v_batt_v = frame.payload[1];
  const ControllerOutput out = controller_.step(row.p_pv_w, row.v_batt_v);
  if (out.fault) {
    ++stats_.voltage_faults;
    row.status = StepStatus::voltage_fault;
  } else {
    row.p_hat_w = out.p_hat_w;
    row.p_batt_w = out.p_batt_w;
    row.i_set_a = out.i_set_a;
    if (row.p_hat_w + row.p_batt_w != row.p_pv_w) {
      ++stats_.conservation_breaches;
    }
  }
  log_.push_back(row);
  return reply_setpoint(frame.seq, frame.sim_time_ms, row.i_set_a);
}

ControllerRun run_controller(bus::Endpoint& endpoint, std::size_t window_samples, double control_period_s) {
  ControllerService service(window_samples, control_period_s);
  while (!service.finished()) {
    auto frame = endpoint.receive();
    if (!frame) break;
    if (auto reply = service.handle(*frame)) {
      endpoint.send(*reply);
    }
  }
  endpoint.close();
  return {service.log(), service.stats()};
}

std::string_view to_string(StepStatus s) {
  switch (s) {
    case StepStatus::ok:
      return "ok";
    case StepStatus::voltage_fault:
      return "voltage_fault";
    case StepStatus::rejected:
      return "rejected";
  }
  return "ok";
}

std::string controller_log_table(const std::vector<ControllerLogRow>& rows, std::size_t warmup_samples) {
  std::ostringstream os;
  os << "k,seq,p_pv_w,v_batt_v,p_hat_w,p_batt_w,i_set_a,status,warmup\n";
  for (const auto& r : rows) {
    os << r.k << ',' << r.seq << ',' << format_double(r.p_pv_w) << ',' << format_double(r.v_batt_v) << ','
       << format_double(r.p_hat_w) << ',' << format_double(r.p_batt_w) << ',' << format_double(r.i_set_a) << ','
       << to_string(r.status) << ',' << (r.seq <= warmup_samples ? 1 : 0) << '\n';
  }
  return os.str();
}

std::vector<ControllerLogRow> parse_controller_log(std::string_view text) {
  std::vector<ControllerLogRow> rows;
  auto lines = split(text, '\n');
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto line = trim(lines[i]);
    if (line.empty()) continue;
    auto cols = split(line, ',');
    if (cols.size() != 9) {
      throw InputError("controller log line " + std::to_string(i + 1) + ": expected 9 columns");
    }
    ControllerLogRow r;
    auto num = [&](std::size_t c) {
      auto v = parse_double(cols[c]);
      if (!v) throw InputError("controller log line " + std::to_string(i + 1) + ": bad number");
      return *v;
    };
    r.k = static_cast<std::uint64_t>(parse_int(cols[0]).value_or(0));
    r.seq = static_cast<std::uint32_t>(parse_int(cols[1]).value_or(0));
    r.p_pv_w = num(2);
    r.v_batt_v = num(3);
    r.p_hat_w = num(4);
    r.p_batt_w = num(5);
    r.i_set_a = num(6);
    r.status = cols[7] == "ok" ? StepStatus::ok
               : cols[7] == "voltage_fault" ? StepStatus::voltage_fault
                                            : StepStatus::rejected;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace chil
