#pragma once

#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <string_view>
#include <vector>

#include "hilfed/channels.hpp"
#include "hilfed/frames.hpp"
#include "hilfed/powerflow.hpp"
#include "hilfed/scenario.hpp"
#include "hilfed/sim_time.hpp"

namespace hilfed {

/// What a federate may do. The runner behind it decides how time passes and
/// how frames travel.
class FederateContext {
public:
    virtual ~FederateContext() = default;
    [[nodiscard]] virtual SimTime now() const = 0;
    virtual void send(Channel channel, const Frame& frame) = 0;
    virtual void schedule(SimTime at, std::function<void()> action) = 0;
    virtual void log_action(std::string_view marker) = 0;
    virtual void telemetry(std::string_view stream, double value, std::string_view unit) = 0;
};

class Federate {
public:
    virtual ~Federate() = default;
    [[nodiscard]] virtual FederateId id() const = 0;
    virtual void start(FederateContext& ctx) = 0;
    virtual void on_frame(FederateContext& ctx, Channel channel, const Frame& frame) = 0;
};

/// Single-value mailbox shared by a simulator and its co-located controller.
template <typename T>
class Port {
public:
    void put(T value) {
        std::lock_guard lock(mutex_);
        value_ = std::move(value);
        ++version_;
    }
    [[nodiscard]] std::pair<T, std::uint64_t> get() const {
        std::lock_guard lock(mutex_);
        return {value_, version_};
    }

private:
    mutable std::mutex mutex_;
    T value_{};
    std::uint64_t version_ = 0;
};

struct FeederSnapshot {
    PhasorState state;
    FeederInputs inputs;
    PhaseVector head = PhaseVector::Zero();
    FeederAggregate aggregate;
};

struct DistSnapshot {
    SimTime time = 0;
    std::vector<FeederSnapshot> feeders;
    std::vector<double> pv_q_kvar;  // applied, per software PV (flattened over feeders)
    std::vector<double> pv_p_kw;    // output, per software PV
    std::vector<int> shunt_on;      // per shunt (flattened)
    double hw_q_kvar = 0.0;         // hardware inverter Q the feeder currently sees
    bool valid = false;
};

struct DeviceCommands {
    std::vector<double> pv_q_kvar;
    std::vector<double> pv_p_cap_kw;
    std::vector<int> shunt_on;
};

struct TransSnapshot {
    PhasorState state;
    std::vector<BusLoad> boundary;
    std::vector<double> generator_v_set;
    bool valid = false;
};

struct LocalPorts {
    Port<DistSnapshot> dist_snapshot;
    Port<DeviceCommands> device_commands;
    Port<TransSnapshot> trans_snapshot;
    Port<std::vector<double>> generator_commands;
};

/// (feeder, element) positions of software PVs and shunts, flattened in feeder order.
struct DeviceIndex {
    std::vector<std::pair<std::size_t, std::size_t>> pvs;
    std::vector<std::pair<std::size_t, std::size_t>> shunts;

    explicit DeviceIndex(const LoadedScenario& scenario);
};

/// Index of the control interval containing `t` (first interval is 1).
std::int64_t interval_index(const LoadedScenario& scenario, SimTime t);

/// Builds the federates for a scenario, indexed by FederateId. The inverter
/// slot is empty when the scenario has no hardware inverter.
std::array<std::unique_ptr<Federate>, kFederateCount> make_federates(const LoadedScenario& scenario, LocalPorts& ports);

}  // namespace hilfed
