#pragma once

namespace chil::bus {

/// ADC emulation: clamp to [lo, hi], snap to the nearest of 2^bits codes
/// spaced (hi - lo) / 2^bits apart starting at lo, map back. Ties round away
/// from zero. Requires lo < hi.
double quantize(double value, int bits, double lo, double hi);

}  // namespace chil::bus
