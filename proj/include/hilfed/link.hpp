#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "hilfed/sim_time.hpp"

namespace hilfed {

struct LatencyDistribution {
    enum class Kind { fixed, uniform, normal };
    Kind kind = Kind::fixed;
    double a = 0.0;  // fixed value, uniform low, or normal mean (seconds)
    double b = 0.0;  // uniform high or normal standard deviation

    static LatencyDistribution fixed(double s) { return {Kind::fixed, s, 0.0}; }
    static LatencyDistribution uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
    static LatencyDistribution normal(double mean, double sd) { return {Kind::normal, mean, sd}; }
};

/// [start, end) in simulation seconds.
struct SeverWindow {
    double start_s = 0.0;
    double end_s = 0.0;
    [[nodiscard]] bool contains(double t) const { return t >= start_s && t < end_s; }
};

struct LinkConfig {
    LatencyDistribution latency;
    double drop_prob = 0.0;
    std::vector<SeverWindow> sever;
};

/// Named presets: "ideal" (zero latency), "vpn", "fileshare". Empty optional if unknown.
std::optional<LinkConfig> link_preset(std::string_view name);

enum class SendOutcome { delivered, dropped, severed };

struct SendDecision {
    SendOutcome outcome = SendOutcome::delivered;
    SimTime delivery = 0;
    double sampled_latency_s = 0.0;
};

/// One directed channel. Every send draws a drop sample and a latency sample from the
/// link's own seeded stream, so the decision sequence depends only on the send sequence.
class Link {
public:
    Link(LinkConfig config, std::uint64_t seed);

    SendDecision send(SimTime send_time);
    [[nodiscard]] const LinkConfig& config() const { return config_; }
    [[nodiscard]] bool severed_during(double from_s, double to_s) const;

private:
    double sample_latency();

    LinkConfig config_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::normal_distribution<double> normal_;
    SimTime last_delivery_ = 0;
};

enum class Freshness { fresh, stale, gap };

struct StalenessResult {
    Freshness status = Freshness::fresh;
    std::int64_t missed = 0;
};

StalenessResult staleness_check(std::int64_t received, std::int64_t last_seen);

}  // namespace hilfed
