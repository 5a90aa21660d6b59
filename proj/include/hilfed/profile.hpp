#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hilfed/grid_model.hpp"

namespace hilfed {

inline constexpr double kProfileStepSeconds = 300.0;

/// Time series on a fixed 300 s grid, held constant between samples.
struct Profile {
    std::vector<double> values;

    /// Sample in effect at `t_s`; the last sample is held past the end.
    [[nodiscard]] double at(double t_s) const;
    [[nodiscard]] double duration_s() const { return double(values.size()) * kProfileStepSeconds; }
};

/// CSV with header `time_s,value`; rows must start at 0 and advance by exactly 300 s.
Profile parse_profile_csv(std::string_view text);
Profile load_profile_csv(const std::string& path);

/// Splits a feeder-head series over `loads` in proportion to rated_p.
///
/// Every share except the last is rounded to 0.01 kW; the last load (file order)
/// takes the residual so that summing shares left to right reproduces the head
/// value bit for bit. Result is indexed [load][step].
std::vector<std::vector<double>> disaggregate_feeder_profile(std::span<const double> head_kw, std::span<const ZipLoad> loads);

}  // namespace hilfed
