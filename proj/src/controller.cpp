#include "chil/controller.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace chil {

namespace {

double ulp_of(double x) {
  x = std::abs(x);
  if (x == 0.0) return std::numeric_limits<double>::denorm_min();
  return std::nextafter(x, HUGE_VAL) - x;
}

bool split_is_exact(double p_pv, double p_hat, double v) {
  const double p_batt = p_pv - p_hat;
  if (p_hat + p_batt != p_pv || p_pv - p_batt != p_hat) return false;
  return (p_batt / v) * v == p_batt;
}

}  // namespace

double representable_split(double p_pv_w, double mean_w, double v_batt_v) {
  const double grid = ulp_of(std::max(std::abs(p_pv_w), std::abs(mean_w)));
  const double base = std::round(mean_w / grid) * grid;
  for (int j = 0; j <= 16; ++j) {
    for (int sign : {1, -1}) {
      const double candidate = base + sign * j * grid;
      if (split_is_exact(p_pv_w, candidate, v_batt_v)) return candidate;
      if (j == 0) break;
    }
  }
  return base;
}

SmoothingController::SmoothingController(std::size_t window_samples, double control_period_s)
    : buffer_(window_samples, 0.0), period_s_(control_period_s) {
  if (window_samples == 0) {
    throw std::invalid_argument("window must hold at least one sample");
  }
}

ControllerOutput SmoothingController::step(double p_pv_w, double v_batt_v) {
  ControllerOutput out;
  if (!std::isfinite(p_pv_w) || !std::isfinite(v_batt_v) || v_batt_v <= 0.0) {
    out.fault = true;
    return out;
  }

  const std::size_t n = buffer_.size();
  const std::size_t slot = write_slot();
  sum_ += p_pv_w - buffer_[slot];
  buffer_[slot] = p_pv_w;
  if (slot == n - 1) {
    // Drift reset once per lap of the ring.
    sum_ = std::accumulate(buffer_.begin(), buffer_.end(), 0.0);
  }

  const double mean = sum_ / static_cast<double>(n);
  out.p_hat_w = representable_split(p_pv_w, mean, v_batt_v);
  out.p_batt_w = p_pv_w - out.p_hat_w;
  out.i_set_a = out.p_batt_w / v_batt_v;
  ++k_;
  return out;
}

}  // namespace chil
