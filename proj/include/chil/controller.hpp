#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace chil {

struct ControllerOutput {
  double p_hat_w = 0.0;   // smoothed PV power
  double p_batt_w = 0.0;  // > 0 charges the battery
  double i_set_a = 0.0;   // > 0 is charging current
  bool fault = false;     // non-positive or non-finite voltage: zero setpoint issued
};

/// Moving-average PV smoothing.
///
/// The buffer starts zero-filled, sample k (1-based) overwrites slot
/// ((k-1) mod N), the smoothed power is the buffer mean, the battery takes
/// the difference and the current setpoint is that power over the measured
/// battery voltage.
///
/// The mean is kept as a running sum that is recomputed from the buffer every
/// N steps. Before the split the mean is rounded to the ulp grid of the larger
/// of |p_pv| and |mean|, which makes p_pv - p_hat and p_hat + p_batt exact in
/// double arithmetic for PV power on the plant's power grid. It is then moved
/// by up to 16 grid steps looking for a value where (p_batt / v) * v is exact
/// too; at a constant 53 V one is always found, for arbitrary voltages a few
/// in 10^4 steps keep the nearest grid point.
class SmoothingController {
 public:
  SmoothingController(std::size_t window_samples, double control_period_s);

  ControllerOutput step(double p_pv_w, double v_batt_v);

  std::size_t window() const { return buffer_.size(); }
  /// 1-based index of the next sample.
  std::uint64_t k() const { return k_; }
  double control_period_s() const { return period_s_; }
  const std::vector<double>& buffer() const { return buffer_; }
  /// 0-based slot the next sample will be written to.
  std::size_t write_slot() const { return static_cast<std::size_t>((k_ - 1) % buffer_.size()); }

 private:
  std::vector<double> buffer_;
  double sum_ = 0.0;
  std::uint64_t k_ = 1;
  double period_s_;
};

/// p_hat adjusted so the power split and the current round trip are exact.
/// Exposed for testing.
double representable_split(double p_pv_w, double mean_w, double v_batt_v);

}  // namespace chil
