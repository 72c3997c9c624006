#include "chil/bus/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chil::bus {

double quantize(double value, int bits, double lo, double hi) {
  if (!(lo < hi)) {
    throw std::invalid_argument("quantize requires lo < hi");
  }
  const double top = std::ldexp(1.0, bits) - 1.0;
  const double step = (hi - lo) / std::ldexp(1.0, bits);
  const double clamped = std::clamp(value, lo, hi);
  const double code = std::clamp(std::round((clamped - lo) / step), 0.0, top);
  return lo + code * step;
}

}  // namespace chil::bus
