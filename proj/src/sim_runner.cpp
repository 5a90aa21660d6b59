#include <array>
#include <memory>
#include <vector>

#include "hilfed/event_queue.hpp"
#include "hilfed/federates.hpp"
#include "hilfed/link.hpp"
#include "hilfed/runner.hpp"

namespace hilfed {

namespace {

class SimulatedFederation {
public:
    SimulatedFederation(const LoadedScenario& sc, RunLog& log) : sc_(sc), log_(log) {
        for (auto c : kAllChannels) links_.emplace_back(sc.spec.links[std::size_t(c)], channel_seed(sc.spec.seed, c));
        federates_ = make_federates(sc, ports_);
        for (int id = 0; id < kFederateCount; ++id) contexts_[std::size_t(id)] = std::make_unique<Context>(*this, FederateId(id));
    }

    void run() {
        for (int id = 0; id < kFederateCount; ++id)
            if (federates_[std::size_t(id)]) federates_[std::size_t(id)]->start(*contexts_[std::size_t(id)]);
        queue_.run_until(from_seconds(sc_.spec.end_s()));
    }

private:
    class Context final : public FederateContext {
    public:
        Context(SimulatedFederation& fed, FederateId id) : fed_(fed), id_(id) {}
        SimTime now() const override { return fed_.queue_.now(); }
        void send(Channel channel, const Frame& frame) override { fed_.send(channel, frame); }
        void schedule(SimTime at, std::function<void()> action) override { fed_.queue_.schedule(at, int(id_), std::move(action)); }
        void log_action(std::string_view marker) override { fed_.log_.event(now(), federate_name(id_), "action", marker); }
        void telemetry(std::string_view stream, double value, std::string_view unit) override {
            fed_.log_.telemetry(now(), stream, value, unit);
        }

    private:
        SimulatedFederation& fed_;
        FederateId id_;
    };

    void send(Channel channel, const Frame& frame) {
        const SimTime now = queue_.now();
        std::string line = encode_frame(frame);
        line.pop_back();
        const auto name = channel_name(channel);
        log_.event(now, name, "send", line);
        const auto decision = links_[std::size_t(channel)].send(now);
        if (decision.outcome == SendOutcome::dropped) {
            log_.event(now, name, "drop", line);
            return;
        }
        if (decision.outcome == SendOutcome::severed) {
            log_.event(now, name, "sever", line);
            return;
        }
        const auto receiver = channel_receiver(channel);
        queue_.schedule(decision.delivery, int(receiver), [this, channel, receiver, line = std::move(line)] {
            log_.event(queue_.now(), channel_name(channel), "recv", line);
            auto& target = federates_[std::size_t(receiver)];
            if (!target) return;
            try {
                const auto frame = decode_frame(line);
                target->on_frame(*contexts_[std::size_t(receiver)], channel, frame);
            } catch (const DecodeError& e) {
                log_.event(queue_.now(), channel_name(channel), "decode_error", e.what());
            }
        });
    }

    const LoadedScenario& sc_;
    RunLog& log_;
    EventQueue queue_;
    LocalPorts ports_;
    std::vector<Link> links_;
    std::array<std::unique_ptr<Federate>, kFederateCount> federates_;
    std::array<std::unique_ptr<Context>, kFederateCount> contexts_;
};

}  // namespace

void run_simulated(const LoadedScenario& scenario, RunLog& log) {
    SimulatedFederation federation(scenario, log);
    federation.run();
}

}  // namespace hilfed
