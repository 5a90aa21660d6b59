#include "hilfed/channels.hpp"

namespace hilfed {

namespace {

struct ChannelInfo {
    std::string_view name;
    FederateId sender;
    FederateId receiver;
};

constexpr std::array<ChannelInfo, kChannelCount> kInfo = {{
    {"trans->dist", FederateId::transmission, FederateId::distribution},
    {"dist->trans", FederateId::distribution, FederateId::transmission},
    {"dctl->tctl", FederateId::dist_controller, FederateId::trans_controller},
    {"tctl->dctl", FederateId::trans_controller, FederateId::dist_controller},
    {"dctl->inv", FederateId::dist_controller, FederateId::inverter},
    {"inv->dist", FederateId::inverter, FederateId::distribution},
}};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::string_view federate_name(FederateId id) {
    switch (id) {
    case FederateId::transmission: return "transmission";
    case FederateId::distribution: return "distribution";
    case FederateId::inverter: return "inverter";
    case FederateId::dist_controller: return "dist_controller";
    case FederateId::trans_controller: return "trans_controller";
    }
    return "?";
}

std::string_view channel_name(Channel c) { return kInfo[std::size_t(c)].name; }
FederateId channel_sender(Channel c) { return kInfo[std::size_t(c)].sender; }
FederateId channel_receiver(Channel c) { return kInfo[std::size_t(c)].receiver; }

std::optional<Channel> parse_channel(std::string_view name) {
    for (auto c : kAllChannels)
        if (channel_name(c) == name) return c;
    return std::nullopt;
}

std::uint64_t channel_seed(std::uint64_t run_seed, Channel c) {
    return splitmix64(splitmix64(run_seed) ^ (std::uint64_t(c) + 1));
}

}  // namespace hilfed
