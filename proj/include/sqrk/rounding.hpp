#pragma once

#include <cmath>
#include <cstddef>

namespace sqrk {

// Products like q * |S| or beta * m are computed in floating point, so a
// value that is mathematically an integer may land a few ulps below it
// (1/51 * 51, 1e-4 * 50000). The counting helpers absorb that drift before
// rounding; anything more than ~1e-9 (relative) away from an integer rounds
// exactly as floor/ceil would.
inline std::size_t floor_count(double x) {
  if (!(x > 0.0)) return 0;
  const double slack = 1e-9 * std::fmax(1.0, x);
  return static_cast<std::size_t>(std::floor(x + slack));
}

inline std::size_t ceil_count(double x) {
  if (!(x > 0.0)) return 0;
  const double slack = 1e-9 * std::fmax(1.0, x);
  const double c = std::ceil(x - slack);
  return c < 0.0 ? 0 : static_cast<std::size_t>(c);
}

}  // namespace sqrk
