#pragma once

#include <cmath>

namespace garnet {

// A point on the 2D similarity map.
struct GSPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const GSPoint&, const GSPoint&) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline GSPoint operator+(GSPoint a, GSPoint b) { return {a.x + b.x, a.y + b.y}; }
inline GSPoint operator-(GSPoint a, GSPoint b) { return {a.x - b.x, a.y - b.y}; }

}  // namespace garnet
