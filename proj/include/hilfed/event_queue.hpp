#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "hilfed/sim_time.hpp"

namespace hilfed {

/// Deterministic discrete-event clock. Events run in (time, federate id, insertion order).
class EventQueue {
public:
    using Action = std::function<void()>;

    void schedule(SimTime at, int federate, Action action);
    /// Runs events with time <= until. Returns the number executed.
    std::size_t run_until(SimTime until);
    [[nodiscard]] SimTime now() const { return now_; }
    [[nodiscard]] bool empty() const { return queue_.empty(); }
    [[nodiscard]] std::size_t size() const { return queue_.size(); }

private:
    struct Event {
        SimTime time;
        int federate;
        std::uint64_t seq;
        Action action;
    };
    struct Later {
        bool operator()(const Event& x, const Event& y) const {
            if (x.time != y.time) return x.time > y.time;
            if (x.federate != y.federate) return x.federate > y.federate;
            return x.seq > y.seq;
        }
    };

    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    SimTime now_ = 0;
    std::uint64_t next_seq_ = 0;
};

}  // namespace hilfed
