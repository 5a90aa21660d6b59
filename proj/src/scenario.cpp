#include "hilfed/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hilfed/error.hpp"
#include "hilfed/grid_io.hpp"
#include "hilfed/sectioned_text.hpp"

namespace hilfed {

namespace {

namespace fs = std::filesystem;

constexpr std::array<std::string_view, 5> kSections = {"federates", "profiles", "links", "controllers", "faults"};

std::string resolve(const std::string& base_dir, const std::string& path) {
    const fs::path p(path);
    return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

void expect_fields(const TextRecord& r, std::size_t lo, std::size_t hi) {
    if (r.fields.size() < lo || r.fields.size() > hi)
        throw ParseError(r.line, "record \"" + r.fields.front() + "\" in [" + r.section + "] has " +
                                     std::to_string(r.fields.size()) + " fields");
}

Channel channel_field(const TextRecord& r, std::size_t i) {
    const auto c = parse_channel(r.fields[i]);
    if (!c) throw ParseError(r.line, "unknown channel \"" + r.fields[i] + "\"");
    return *c;
}

double number(const TextRecord& r, std::size_t i, std::string_view what) { return parse_decimal(r.fields[i], r.line, what); }

void parse_federate(ScenarioSpec& spec, const TextRecord& r, const std::string& base_dir) {
    const auto& key = r.fields[0];
    if (key == "transmission") {
        expect_fields(r, 2, 2);
        spec.transmission_path = resolve(base_dir, r.fields[1]);
    } else if (key == "boundary") {
        expect_fields(r, 2, 2);
        spec.boundary_bus = r.fields[1];
    } else if (key == "feeder") {
        expect_fields(r, 3, 3);
        spec.feeders.push_back({resolve(base_dir, r.fields[1]), r.fields[2]});
    } else if (key == "inverter") {
        expect_fields(r, 9, 9);
        HardwareInverterSpec inv;
        inv.id = r.fields[1];
        const auto feeder = parse_integer(r.fields[2], r.line, "inverter feeder number");
        if (feeder < 1) throw ParseError(r.line, "inverter feeder number starts at 1");
        inv.feeder = std::size_t(feeder - 1);
        inv.bus = r.fields[3];
        const auto phases = PhaseSet::parse(r.fields[4]);
        if (!phases) throw ParseError(r.line, "invalid inverter phase set \"" + r.fields[4] + "\"");
        inv.phases = *phases;
        inv.params = {number(r, 5, "inverter rating"), number(r, 6, "inverter k"), number(r, 7, "inverter settle time")};
        inv.solar_profile = r.fields[8];
        if (spec.inverter) throw ParseError(r.line, "only one hardware inverter is supported");
        spec.inverter = inv;
    } else if (key == "start_h") {
        expect_fields(r, 2, 2);
        spec.start_h = number(r, 1, "start_h");
    } else if (key == "duration_h") {
        expect_fields(r, 2, 2);
        spec.duration_h = number(r, 1, "duration_h");
    } else if (key == "seed") {
        expect_fields(r, 2, 2);
        const auto s = parse_integer(r.fields[1], r.line, "seed");
        if (s < 0) throw ParseError(r.line, "seed must be non-negative");
        spec.seed = std::uint64_t(s);
    } else if (key == "mode") {
        expect_fields(r, 2, 2);
        if (r.fields[1] == "sim") spec.mode = ClockMode::simulated;
        else if (r.fields[1] == "realtime") spec.mode = ClockMode::realtime;
        else throw ParseError(r.line, "mode must be sim or realtime");
    } else if (key == "time_scale") {
        expect_fields(r, 2, 2);
        spec.time_scale = number(r, 1, "time_scale");
    } else {
        throw ParseError(r.line, "unknown federate setting \"" + key + "\"");
    }
}

void parse_link(ScenarioSpec& spec, const TextRecord& r) {
    if (r.fields[0] == "endpoint") {
        expect_fields(r, 4, 4);
        const auto c = channel_field(r, 1);
        const auto port = parse_integer(r.fields[3], r.line, "port");
        if (port < 0 || port > 65535) throw ParseError(r.line, "port out of range");
        spec.endpoints[std::size_t(c)] = {r.fields[2], int(port)};
        return;
    }
    expect_fields(r, 3, 5);
    const auto c = channel_field(r, 0);
    const auto& kind = r.fields[1];
    LinkConfig cfg;
    if (auto preset = link_preset(kind)) {
        expect_fields(r, 3, 3);
        cfg = *preset;
    } else if (kind == "fixed") {
        expect_fields(r, 4, 4);
        cfg.latency = LatencyDistribution::fixed(number(r, 3, "latency"));
    } else if (kind == "uniform" || kind == "normal") {
        expect_fields(r, 5, 5);
        const double a = number(r, 3, "latency parameter"), b = number(r, 4, "latency parameter");
        cfg.latency = kind == "uniform" ? LatencyDistribution::uniform(a, b) : LatencyDistribution::normal(a, b);
    } else {
        throw ParseError(r.line, "unknown link kind \"" + kind + "\"");
    }
    cfg.drop_prob = number(r, 2, "drop probability");
    if (cfg.drop_prob < 0.0 || cfg.drop_prob > 1.0) throw ParseError(r.line, "drop probability outside [0, 1]");
    cfg.sever = spec.links[std::size_t(c)].sever;
    spec.links[std::size_t(c)] = cfg;
}

void parse_controller(ControllerSettings& s, const TextRecord& r) {
    expect_fields(r, 2, 2);
    const auto& key = r.fields[0];
    const std::map<std::string_view, double*> reals = {
        {"interval_s", &s.interval_s},
        {"boundary_period_s", &s.boundary_period_s},
        {"response_period_s", &s.response_period_s},
        {"dist_compute_s", &s.dist_compute_s},
        {"trans_compute_s", &s.trans_compute_s},
        {"dist_vvc_compute_s", &s.dist_vvc_compute_s},
        {"constraints_deadline_s", &s.constraints_deadline_s},
        {"request_deadline_s", &s.request_deadline_s},
        {"pv_response_hold_s", &s.pv_response_hold_s},
        {"v_target", &s.v_target},
        {"v_lower", &s.band.lower},
        {"v_upper", &s.band.upper},
        {"generator_step_pu", &s.generator_step_pu},
        {"pv_k", &s.pv_k},
        {"dr_p_max_kw", &s.dr.p_max_kw},
        {"dr_p_min_kw", &s.dr.p_min_kw},
        {"telemetry_period_s", &s.telemetry_period_s},
        {"tracking_offset_s", &s.tracking_offset_s},
        {"dispatch_margin_pu", &s.dispatch_margin_pu},
    };
    if (key == "hold_intervals") {
        const auto n = parse_integer(r.fields[1], r.line, key);
        if (n < 0) throw ParseError(r.line, "hold_intervals must be non-negative");
        s.hold_intervals = int(n);
        return;
    }
    const auto it = reals.find(key);
    if (it == reals.end()) throw ParseError(r.line, "unknown controller setting \"" + key + "\"");
    *it->second = parse_decimal(r.fields[1], r.line, key);
}

std::string read_file(const std::string& path, std::string_view what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot read " + std::string(what) + " \"" + path + "\"");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename Fn>
auto with_context(const std::string& what, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ParseError& e) {
        throw ScenarioError(what + ": " + e.what());
    } catch (const ModelError& e) {
        throw ScenarioError(what + ": " + e.what());
    }
}

}  // namespace

std::string_view to_string(ClockMode mode) { return mode == ClockMode::simulated ? "sim" : "realtime"; }

ScenarioSpec parse_scenario(std::string_view text, const std::string& base_dir) {
    ScenarioSpec spec;
    for (auto c : kAllChannels) spec.links[std::size_t(c)] = *link_preset("ideal");
    std::vector<std::pair<Channel, SeverWindow>> severs;
    for (const auto& r : lex_sectioned_text(text, kSections)) {
        if (r.section == "federates") {
            parse_federate(spec, r, base_dir);
        } else if (r.section == "profiles") {
            expect_fields(r, 2, 2);
            if (!spec.profile_paths.emplace(r.fields[0], resolve(base_dir, r.fields[1])).second)
                throw ParseError(r.line, "duplicate profile id \"" + r.fields[0] + "\"");
        } else if (r.section == "links") {
            parse_link(spec, r);
        } else if (r.section == "controllers") {
            parse_controller(spec.controllers, r);
        } else if (r.section == "faults") {
            expect_fields(r, 4, 4);
            if (r.fields[0] != "sever") throw ParseError(r.line, "unknown fault kind \"" + r.fields[0] + "\"");
            const auto c = channel_field(r, 1);
            const SeverWindow w{number(r, 2, "sever start") * 3600.0, number(r, 3, "sever end") * 3600.0};
            if (!(w.end_s > w.start_s)) throw ParseError(r.line, "sever window must end after it starts");
            severs.push_back({c, w});
        }
    }
    for (const auto& [c, w] : severs) spec.links[std::size_t(c)].sever.push_back(w);
    return spec;
}

ScenarioSpec load_scenario_spec(const std::string& path) {
    const auto text = read_file(path, "scenario file");
    auto spec = with_context(path, [&] { return parse_scenario(text, fs::path(path).parent_path().string()); });
    spec.source_path = path;
    return spec;
}

LoadedScenario load_scenario(const ScenarioSpec& spec) {
    LoadedScenario out;
    out.spec = spec;
    const auto& c = spec.controllers;

    if (spec.transmission_path.empty()) throw ScenarioError("scenario names no transmission grid");
    if (spec.boundary_bus.empty()) throw ScenarioError("scenario names no boundary bus");
    if (spec.feeders.empty()) throw ScenarioError("scenario names no feeders");
    if (spec.duration_h < 0.0) throw ScenarioError("duration_h must be non-negative");
    if (!(spec.time_scale > 0.0)) throw ScenarioError("time_scale must be positive");
    if (!(c.interval_s > 0.0 && c.boundary_period_s > 0.0 && c.response_period_s > 0.0 && c.telemetry_period_s > 0.0))
        throw ScenarioError("controller periods must be positive");
    if (c.dist_compute_s < 0.0 || c.trans_compute_s < 0.0 || c.dist_vvc_compute_s < 0.0)
        throw ScenarioError("compute delays must be non-negative");
    if (c.constraints_deadline_s <= c.dist_compute_s || c.request_deadline_s <= c.constraints_deadline_s ||
        c.request_deadline_s >= c.interval_s)
        throw ScenarioError("deadlines must satisfy dist_compute_s < constraints_deadline_s < request_deadline_s < interval_s");
    if (c.tracking_offset_s <= c.request_deadline_s + c.dist_vvc_compute_s || c.tracking_offset_s >= c.interval_s)
        throw ScenarioError("tracking_offset_s must fall after the distribution VVC and inside the interval");
    if (!(c.band.lower < c.band.upper)) throw ScenarioError("v_lower must be below v_upper");
    if (c.dispatch_margin_pu < 0.0 || 2.0 * c.dispatch_margin_pu >= c.band.upper - c.band.lower)
        throw ScenarioError("dispatch_margin_pu must be non-negative and leave a non-empty band");
    if (c.pv_k < 1.0) throw ScenarioError("pv_k must be at least 1");
    if (c.dr.p_min_kw > c.dr.p_max_kw) throw ScenarioError("dr_p_min_kw exceeds dr_p_max_kw");

    for (const auto& [id, path] : spec.profile_paths) {
        const auto text = read_file(path, "profile \"" + id + "\"");
        out.profiles.emplace(id, with_context(path, [&] { return parse_profile_csv(text); }));
    }
    auto require_profile = [&](const std::string& id, const std::string& user) {
        if (!out.profiles.count(id)) throw ScenarioError(user + " references undeclared profile \"" + id + "\"");
    };

    out.transmission = with_context(spec.transmission_path, [&] { return parse_grid_file(read_file(spec.transmission_path, "transmission grid")); });
    const auto b = out.transmission.bus_index(spec.boundary_bus);
    if (!b) throw ScenarioError("boundary bus \"" + spec.boundary_bus + "\" is not in the transmission grid");
    if (out.transmission.buses[*b].kind != BusKind::pq) throw ScenarioError("boundary bus \"" + spec.boundary_bus + "\" must be a pq bus");

    for (std::size_t i = 0; i < spec.feeders.size(); ++i) {
        const auto& f = spec.feeders[i];
        auto model = with_context(f.grid_path, [&] { return parse_grid_file(read_file(f.grid_path, "feeder grid"), {.require_radial = true}); });
        const std::string name = "feeder " + std::to_string(i + 1);
        require_profile(f.load_profile, name);
        for (const auto& s : model.solar) require_profile(s.profile_id, name + " solar farm \"" + s.id + "\"");
        bool scalable = false;
        for (const auto& l : model.loads) scalable = scalable || (!l.fixed && l.rated_p_kw > 0.0);
        if (!scalable) throw ScenarioError(name + " has no profile-driven load");
        if (i == 0) out.feeder_base_kva = model.base_kva();
        else if (model.base_kva() != out.feeder_base_kva) throw ScenarioError("all feeders must share one base_mva");
        out.feeders.push_back(std::move(model));
    }

    if (spec.inverter) {
        const auto& inv = *spec.inverter;
        if (inv.feeder >= out.feeders.size()) throw ScenarioError("inverter \"" + inv.id + "\" names a missing feeder");
        const auto& m = out.feeders[inv.feeder];
        const auto bi = m.bus_index(inv.bus);
        if (!bi) throw ScenarioError("inverter \"" + inv.id + "\" bus \"" + inv.bus + "\" is not in its feeder");
        if (!inv.phases.subset_of(m.buses[*bi].phases)) throw ScenarioError("inverter \"" + inv.id + "\" phases are not all present at its bus");
        if (!(inv.params.s_rating_kva > 0.0) || inv.params.k < 1.0 || inv.params.settle_s < 0.0)
            throw ScenarioError("inverter \"" + inv.id + "\" needs s_kva > 0, k >= 1, settle_s >= 0");
        require_profile(inv.solar_profile, "inverter \"" + inv.id + "\"");
    }

    for (auto ch : kAllChannels)
        for (const auto& w : spec.links[std::size_t(ch)].sever)
            if (w.start_s < spec.start_s() || w.end_s > spec.end_s())
                throw ScenarioError("sever window on " + std::string(channel_name(ch)) + " lies outside the run");
    return out;
}

}  // namespace hilfed
