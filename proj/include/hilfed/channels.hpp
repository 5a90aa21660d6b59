#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace hilfed {

// Federate ids double as the same-instant tie-break in simulated mode.
enum class FederateId : int { transmission = 0, distribution = 1, inverter = 2, dist_controller = 3, trans_controller = 4 };
inline constexpr int kFederateCount = 5;

std::string_view federate_name(FederateId id);

enum class Channel : int { trans_to_dist, dist_to_trans, dctl_to_tctl, tctl_to_dctl, dctl_to_inv, inv_to_dist };
inline constexpr int kChannelCount = 6;
inline constexpr std::array<Channel, kChannelCount> kAllChannels = {Channel::trans_to_dist, Channel::dist_to_trans,
                                                                    Channel::dctl_to_tctl,  Channel::tctl_to_dctl,
                                                                    Channel::dctl_to_inv,   Channel::inv_to_dist};

/// "trans->dist", "dist->trans", "dctl->tctl", "tctl->dctl", "dctl->inv", "inv->dist".
std::string_view channel_name(Channel c);
std::optional<Channel> parse_channel(std::string_view name);
FederateId channel_sender(Channel c);
FederateId channel_receiver(Channel c);

/// Per-channel RNG seed derived from the run seed.
std::uint64_t channel_seed(std::uint64_t run_seed, Channel c);

}  // namespace hilfed
