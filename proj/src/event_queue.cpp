#include "hilfed/event_queue.hpp"

#include <stdexcept>
#include <string>

namespace hilfed {

void EventQueue::schedule(SimTime at, int federate, Action action) {
    if (at < now_)
        throw std::logic_error("event scheduled in the past: " + std::to_string(at) + " < " + std::to_string(now_));
    queue_.push({at, federate, next_seq_++, std::move(action)});
}

std::size_t EventQueue::run_until(SimTime until) {
    std::size_t count = 0;
    while (!queue_.empty() && queue_.top().time <= until) {
        auto ev = queue_.top();
        queue_.pop();
        now_ = ev.time;
        ev.action();
        ++count;
    }
    if (until > now_) now_ = until;
    return count;
}

}  // namespace hilfed
