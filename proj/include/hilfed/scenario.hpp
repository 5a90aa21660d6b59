#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hilfed/channels.hpp"
#include "hilfed/controllers.hpp"
#include "hilfed/grid_model.hpp"
#include "hilfed/inverter.hpp"
#include "hilfed/link.hpp"
#include "hilfed/profile.hpp"

namespace hilfed {

enum class ClockMode { simulated, realtime };

struct FeederSpec {
    std::string grid_path;
    std::string load_profile;  // head kW profile id
};

struct HardwareInverterSpec {
    std::string id;
    std::size_t feeder = 0;  // 0-based
    std::string bus;
    PhaseSet phases = PhaseSet::all();  // output splits evenly over these
    InverterParams params;
    std::string solar_profile;  // per-unit availability
};

struct ControllerSettings {
    double interval_s = 300.0;
    double boundary_period_s = 0.1;
    double response_period_s = 60.0;
    double dist_compute_s = 10.0;
    double trans_compute_s = 10.0;
    double dist_vvc_compute_s = 10.0;
    double constraints_deadline_s = 60.0;
    double request_deadline_s = 120.0;
    int hold_intervals = 2;
    double pv_response_hold_s = 180.0;
    double v_target = 1.0;
    VoltageBand band;
    double dispatch_margin_pu = 0.0025;  // distribution VVC plans inside the band by this much
    double generator_step_pu = 0.005;
    double pv_k = 1.1;
    DrCapacity dr;
    double telemetry_period_s = 60.0;
    double tracking_offset_s = 299.0;
};

struct Endpoint {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 picks a free port
};

struct ScenarioSpec {
    std::string source_path;
    std::string transmission_path;
    std::string boundary_bus;
    std::vector<FeederSpec> feeders;
    std::optional<HardwareInverterSpec> inverter;
    std::map<std::string, std::string> profile_paths;
    std::array<LinkConfig, kChannelCount> links;
    std::array<Endpoint, kChannelCount> endpoints;
    ControllerSettings controllers;
    double start_h = 0.0;
    double duration_h = 0.0;
    std::uint64_t seed = 0;
    ClockMode mode = ClockMode::simulated;
    double time_scale = 1.0;  // simulated seconds per wall second in realtime mode

    [[nodiscard]] double start_s() const { return start_h * 3600.0; }
    [[nodiscard]] double end_s() const { return (start_h + duration_h) * 3600.0; }
};

/// Parses a scenario document. Relative paths resolve against `base_dir`.
///
///     [federates]   transmission,<grid>     boundary,<bus id>
///                   feeder,<grid>,<load profile id>          (one per feeder, in order)
///                   inverter,<id>,<feeder #>,<bus>,<phases>,<s_kva>,<k>,<settle_s>,<solar profile id>
///                   start_h,<h>  duration_h,<h>  seed,<n>  mode,sim|realtime  time_scale,<x>
///     [profiles]    <id>,<csv path>
///     [links]       <channel>,<ideal|vpn|fileshare>,<drop_prob>
///                   <channel>,fixed,<drop_prob>,<s>
///                   <channel>,uniform|normal,<drop_prob>,<p1>,<p2>
///                   endpoint,<channel>,<host>,<port>
///     [controllers] <setting>,<value>
///     [faults]      sever,<channel>,<start_h>,<end_h>
///
/// Unlisted channels use the `ideal` preset. Throws ParseError on malformed records.
ScenarioSpec parse_scenario(std::string_view text, const std::string& base_dir);
ScenarioSpec load_scenario_spec(const std::string& path);

/// Everything a run needs, read from disk and cross-checked.
struct LoadedScenario {
    ScenarioSpec spec;
    GridModel transmission;
    std::vector<GridModel> feeders;
    std::map<std::string, Profile> profiles;
    double feeder_base_kva = 1000.0;
};

/// Reads the referenced grids and profiles and checks cross-references.
/// Throws ScenarioError, ParseError or ModelError with a message naming the file or item.
LoadedScenario load_scenario(const ScenarioSpec& spec);

std::string_view to_string(ClockMode mode);

}  // namespace hilfed
