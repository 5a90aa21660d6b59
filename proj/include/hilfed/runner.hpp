#pragma once

#include <cstdio>
#include <cstdint>
#include <istream>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "hilfed/controllers.hpp"
#include "hilfed/scenario.hpp"
#include "hilfed/sim_time.hpp"

namespace hilfed {

/// Writer for `events.csv` and `telemetry.csv`. Safe to share between threads.
///
///     events.csv     time_s,channel,direction,detail
///     telemetry.csv  time_s,stream,value,unit
///
/// `direction` is send, recv, drop, sever, decode_error (frame hops) or action
/// (federate markers, where `channel` carries the federate name).
class RunLog {
public:
    explicit RunLog(const std::string& out_dir);
    ~RunLog();
    RunLog(const RunLog&) = delete;
    RunLog& operator=(const RunLog&) = delete;

    void event(SimTime t, std::string_view channel, std::string_view direction, std::string_view detail);
    void telemetry(SimTime t, std::string_view stream, double value, std::string_view unit);
    void close();

private:
    std::mutex mutex_;
    std::FILE* events_ = nullptr;
    std::FILE* telemetry_ = nullptr;
};

/// Runs on the deterministic event queue. Outputs depend only on the scenario and seed.
void run_simulated(const LoadedScenario& scenario, RunLog& log);

/// Runs each federate on its own thread against the wall clock (scaled by
/// `time_scale`), with every channel carried over a loopback TCP connection.
void run_realtime(const LoadedScenario& scenario, RunLog& log);

struct IntervalQ {
    double time_s = 0.0;
    double requested_kvar = 0.0;
    double delivered_kvar = 0.0;
};

struct RunSummary {
    std::size_t voltage_samples = 0;
    double v_max = 0.0;
    double v_min = 0.0;
    std::size_t band_violations = 0;
    std::vector<std::size_t> feeder_violations;  // index 0 is feeder 1
    double max_abs_tracking_error_kvar = 0.0;
    std::vector<IntervalQ> intervals;
};

/// Reduction over a telemetry CSV stream.
RunSummary summarize_telemetry(std::istream& telemetry, const VoltageBand& band, std::size_t feeder_count);
std::string format_summary(const RunSummary& summary);

struct RunPaths {
    std::string telemetry;
    std::string events;
    std::string summary;
};

/// Runs the scenario in its configured clock mode and writes the three outputs into `out_dir`.
RunPaths run_scenario(const LoadedScenario& scenario, const std::string& out_dir);

}  // namespace hilfed
