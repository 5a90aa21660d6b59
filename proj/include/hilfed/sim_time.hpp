#pragma once

#include <cmath>
#include <cstdint>

namespace hilfed {

/// Simulation time in integer microseconds.
using SimTime = std::int64_t;

constexpr SimTime kMicrosPerSecond = 1'000'000;

inline SimTime from_seconds(double s) { return SimTime(std::llround(s * double(kMicrosPerSecond))); }
constexpr double to_seconds(SimTime t) { return double(t) / double(kMicrosPerSecond); }

}  // namespace hilfed
