#include "hilfed/runner.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "hilfed/error.hpp"

namespace hilfed {

RunLog::RunLog(const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto events = std::filesystem::path(out_dir) / "events.csv";
    const auto telemetry = std::filesystem::path(out_dir) / "telemetry.csv";
    events_ = std::fopen(events.c_str(), "wb");
    telemetry_ = std::fopen(telemetry.c_str(), "wb");
    if (!events_ || !telemetry_) {
        close();
        throw ScenarioError("cannot write outputs in " + out_dir);
    }
    std::fputs("time_s,channel,direction,detail\n", events_);
    std::fputs("time_s,stream,value,unit\n", telemetry_);
}

RunLog::~RunLog() { close(); }

void RunLog::event(SimTime t, std::string_view channel, std::string_view direction, std::string_view detail) {
    std::lock_guard lock(mutex_);
    std::fprintf(events_, "%.6f,%.*s,%.*s,%.*s\n", to_seconds(t), int(channel.size()), channel.data(), int(direction.size()),
                 direction.data(), int(detail.size()), detail.data());
}

void RunLog::telemetry(SimTime t, std::string_view stream, double value, std::string_view unit) {
    std::lock_guard lock(mutex_);
    if (value == 0.0) value = 0.0;
    std::fprintf(telemetry_, "%.6f,%.*s,%.9f,%.*s\n", to_seconds(t), int(stream.size()), stream.data(), value, int(unit.size()),
                 unit.data());
}

void RunLog::close() {
    std::lock_guard lock(mutex_);
    if (events_) std::fclose(events_);
    if (telemetry_) std::fclose(telemetry_);
    events_ = telemetry_ = nullptr;
}

// ---------------------------------------------------------------------------

namespace {

/// Feeder number of a `f<n>.<bus>.<phase>.v_mag` stream, or 0.
std::size_t voltage_stream_feeder(std::string_view stream) {
    constexpr std::string_view suffix = ".v_mag";
    if (stream.size() < 2 || stream[0] != 'f' || !stream.ends_with(suffix)) return 0;
    std::size_t n = 0, i = 1;
    for (; i < stream.size() && stream[i] >= '0' && stream[i] <= '9'; ++i) n = n * 10 + std::size_t(stream[i] - '0');
    return i > 1 && i < stream.size() && stream[i] == '.' ? n : 0;
}

}  // namespace

RunSummary summarize_telemetry(std::istream& telemetry, const VoltageBand& band, std::size_t feeder_count) {
    RunSummary s;
    s.feeder_violations.assign(feeder_count, 0);
    s.v_max = -std::numeric_limits<double>::infinity();
    s.v_min = std::numeric_limits<double>::infinity();
    std::string line;
    std::getline(telemetry, line);  // header
    std::size_t delivered = 0;
    while (std::getline(telemetry, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1), c3 = line.find(',', c2 + 1);
        if (c3 == std::string::npos) throw ScenarioError("malformed telemetry row: " + line);
        const double t = std::strtod(line.c_str(), nullptr);
        const std::string_view stream(line.data() + c1 + 1, c2 - c1 - 1);
        const double value = std::strtod(line.c_str() + c2 + 1, nullptr);
        if (const auto f = voltage_stream_feeder(stream)) {
            ++s.voltage_samples;
            s.v_max = std::max(s.v_max, value);
            s.v_min = std::min(s.v_min, value);
            if (!band.contains(value)) {
                ++s.band_violations;
                if (f > s.feeder_violations.size()) s.feeder_violations.resize(f, 0);
                ++s.feeder_violations[f - 1];
            }
        } else if (stream == "tracking.error") {
            s.max_abs_tracking_error_kvar = std::max(s.max_abs_tracking_error_kvar, std::abs(value));
        } else if (stream == "request.q_req") {
            s.intervals.push_back({t, value, 0.0});
        } else if (stream == "response.q_delivered") {
            if (delivered < s.intervals.size()) s.intervals[delivered].delivered_kvar = value;
            ++delivered;
        }
    }
    if (s.voltage_samples == 0) s.v_max = s.v_min = 0.0;
    return s;
}

std::string format_summary(const RunSummary& s) {
    std::ostringstream out;
    char buf[160];
    const auto kv = [&](const char* key, double value) {
        std::snprintf(buf, sizeof buf, "%s,%.6f\n", key, value);
        out << buf;
    };
    out << "voltage_samples," << s.voltage_samples << '\n';
    kv("v_max", s.v_max);
    kv("v_min", s.v_min);
    out << "band_violations," << s.band_violations << '\n';
    for (std::size_t f = 0; f < s.feeder_violations.size(); ++f)
        out << "band_violations.feeder" << f + 1 << ',' << s.feeder_violations[f] << '\n';
    kv("max_abs_tracking_error_kvar", s.max_abs_tracking_error_kvar);
    double requested = 0.0, delivered = 0.0;
    for (const auto& i : s.intervals) {
        requested += i.requested_kvar;
        delivered += i.delivered_kvar;
    }
    out << "intervals," << s.intervals.size() << '\n';
    kv("total_requested_kvar", requested);
    kv("total_delivered_kvar", delivered);
    out << "\ninterval,time_s,requested_kvar,delivered_kvar\n";
    for (std::size_t k = 0; k < s.intervals.size(); ++k) {
        const auto& i = s.intervals[k];
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", k + 1, i.time_s, i.requested_kvar, i.delivered_kvar);
        out << buf;
    }
    return out.str();
}

RunPaths run_scenario(const LoadedScenario& scenario, const std::string& out_dir) {
    const auto dir = std::filesystem::path(out_dir);
    RunPaths paths{(dir / "telemetry.csv").string(), (dir / "events.csv").string(), (dir / "summary.txt").string()};
    {
        RunLog log(out_dir);
        if (scenario.spec.mode == ClockMode::simulated)
            run_simulated(scenario, log);
        else
            run_realtime(scenario, log);
    }
    std::ifstream telemetry(paths.telemetry, std::ios::binary);
    const auto summary = summarize_telemetry(telemetry, scenario.spec.controllers.band, scenario.feeders.size());
    std::ofstream out(paths.summary, std::ios::binary);
    out << format_summary(summary);
    if (!out) throw ScenarioError("cannot write " + paths.summary);
    return paths;
}

}  // namespace hilfed
