#include "hilfed/link.hpp"

#include <algorithm>
#include <stdexcept>

namespace hilfed {

std::optional<LinkConfig> link_preset(std::string_view name) {
    if (name == "ideal") return LinkConfig{LatencyDistribution::fixed(0.0), 0.0, {}};
    if (name == "vpn") return LinkConfig{LatencyDistribution::normal(0.110, 0.02), 0.0, {}};
    if (name == "fileshare") return LinkConfig{LatencyDistribution::uniform(30.0, 90.0), 0.0, {}};
    return std::nullopt;
}

Link::Link(LinkConfig config, std::uint64_t seed) : config_(std::move(config)), rng_(seed) {
    const auto& lat = config_.latency;
    if (config_.drop_prob < 0.0 || config_.drop_prob > 1.0) throw std::invalid_argument("drop probability outside [0, 1]");
    if (lat.kind == LatencyDistribution::Kind::fixed && lat.a < 0.0) throw std::invalid_argument("negative fixed latency");
    if (lat.kind == LatencyDistribution::Kind::uniform && !(lat.a >= 0.0 && lat.b >= lat.a))
        throw std::invalid_argument("uniform latency needs 0 <= low <= high");
    if (lat.kind == LatencyDistribution::Kind::normal && lat.b < 0.0) throw std::invalid_argument("negative latency deviation");
    for (const auto& w : config_.sever)
        if (!(w.end_s >= w.start_s)) throw std::invalid_argument("sever window ends before it starts");
    normal_ = std::normal_distribution<double>(lat.a, lat.b > 0.0 ? lat.b : 1.0);
}

double Link::sample_latency() {
    const auto& lat = config_.latency;
    switch (lat.kind) {
    case LatencyDistribution::Kind::fixed: unit_(rng_); return lat.a;
    case LatencyDistribution::Kind::uniform: return lat.a + (lat.b - lat.a) * unit_(rng_);
    case LatencyDistribution::Kind::normal: {
        const double x = normal_(rng_);
        return lat.b > 0.0 ? x : lat.a;
    }
    }
    return 0.0;
}

bool Link::severed_during(double from_s, double to_s) const {
    return std::any_of(config_.sever.begin(), config_.sever.end(),
                       [&](const SeverWindow& w) { return w.contains(from_s) || (from_s < w.start_s && to_s >= w.start_s); });
}

SendDecision Link::send(SimTime send_time) {
    const bool drop = unit_(rng_) < config_.drop_prob;
    const double latency = std::max(0.0, sample_latency());
    SendDecision d;
    d.sampled_latency_s = latency;
    d.delivery = std::max(send_time + from_seconds(latency), last_delivery_);
    // A message in flight while the link is cut is lost with it.
    if (severed_during(to_seconds(send_time), to_seconds(d.delivery))) {
        d.outcome = SendOutcome::severed;
        return d;
    }
    if (drop) {
        d.outcome = SendOutcome::dropped;
        return d;
    }
    last_delivery_ = d.delivery;
    return d;
}

StalenessResult staleness_check(std::int64_t received, std::int64_t last_seen) {
    if (received == last_seen || received == last_seen + 1) return {Freshness::fresh, 0};
    if (received < last_seen) return {Freshness::stale, 0};
    return {Freshness::gap, received - last_seen - 1};
}

}  // namespace hilfed
