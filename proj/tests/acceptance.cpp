// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hilfed/channels.hpp"
#include "hilfed/grid_io.hpp"
#include "hilfed/inverter.hpp"
#include "hilfed/link.hpp"
#include "hilfed/powerflow.hpp"
#include "hilfed/scenario.hpp"
#include "support/energy_balance.hpp"
#include "support/nodal_oracle.hpp"
#include "support/random_feeder.hpp"

using namespace hilfed;
namespace fs = std::filesystem;
using cd = std::complex<double>;

namespace {

const std::string kScenarios = HILFED_SCENARIO_DIR;
const std::string kCli = HILFED_CLI;
const std::string kOut = HILFED_ACCEPTANCE_OUT;

// Tolerances.
constexpr double kCapabilityTol = 1e-12;
constexpr double kWorkedExampleTol = 1e-9;
constexpr double kInverterBudgetS = 1.0;
constexpr double kOracleTol = 1e-6;
constexpr double kTwoBusTarget = 0.9795;
constexpr double kTwoBusTol = 1e-4;
constexpr double kBalanceTol = 1e-6;
constexpr double kPowerflowBudgetS = 10.0;
constexpr double kVsmRelTol = 0.05;
constexpr double kVpnMean = 0.110;
constexpr double kStandardErrors = 3.0;
constexpr double kTrackingRel = 0.01;
constexpr double kTrackingAbsKvar = 1.0;
constexpr double kClosedLoopBudgetS = 60.0;
constexpr double kDeficitTolKvar = 1.0;
constexpr double kViolationPu = 1.05;
constexpr double kTimelineTolS = 1e-3;

int failures = 0;

void report(bool ok, const char* name, const std::string& detail) {
    std::printf("%s %-22s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Row {
    double t;
    std::string a, b, c;  // events: channel, direction, detail; telemetry: stream, value, unit
};

std::vector<Row> read_csv(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1), c3 = line.find(',', c2 + 1);
        rows.push_back({std::stod(line.substr(0, c1)), line.substr(c1 + 1, c2 - c1 - 1), line.substr(c2 + 1, c3 - c2 - 1),
                        line.substr(c3 + 1)});
    }
    return rows;
}

/// Telemetry as stream -> (time -> value).
using Series = std::map<std::string, std::map<double, double>>;

Series read_telemetry(const std::string& path) {
    Series s;
    for (const auto& r : read_csv(path)) s[r.a][r.t] = std::stod(r.b);
    return s;
}

struct CliRun {
    int rc = -1;
    double wall_s = 0.0;
    std::string dir;
};

CliRun run_cli(const std::string& scenario, const std::string& out) {
    fs::remove_all(out);
    const std::string cmd = "\"" + kCli + "\" run \"" + kScenarios + "/" + scenario + "\" --mode sim --seed 42 --out \"" + out +
                            "\" > /dev/null 2>&1";
    const auto t0 = std::chrono::steady_clock::now();
    const int status = std::system(cmd.c_str());
    return {status, seconds_since(t0), out};
}

// ---------------------------------------------------------------------------

void inverter_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(7);
    const InverterParams params{1.0, 1.1, 30.0};
    const double ks = params.k * params.s_rating_kva;
    std::uniform_real_distribution<double> q_dist(-2.0 * ks, 2.0 * ks), p_dist(0.0, 1.2 * params.s_rating_kva);
    constexpr int kSamples = 20000;
    double worst_excess = -1.0;
    for (int i = 0; i < kSamples; ++i) {
        const auto op = apply_q_command(q_dist(rng), p_dist(rng), params);
        const double lhs = std::pow(op.p_kw / params.s_rating_kva, 2) + std::pow(op.q_kvar / ks, 2);
        worst_excess = std::max(worst_excess, lhs - 1.0);
    }

    // Worked examples by direct substitution: q = clamp(q_cm, -kS, kS), p = min(sqrt(S^2 - (q/k)^2), p_avail).
    struct Example {
        double q_cm, p_avail, p, q;
    };
    const Example examples[] = {{2.0, 0.5, 0.0, 1.1}, {0.5, 1.0, std::sqrt(1.0 - (0.5 / 1.1) * (0.5 / 1.1)), 0.5}, {-1.5, 0.3, 0.0, -1.1}};
    double worst_example = 0.0;
    for (const auto& e : examples) {
        const auto op = apply_q_command(e.q_cm, e.p_avail, params);
        worst_example = std::max({worst_example, std::abs(op.p_kw - e.p), std::abs(op.q_kvar - e.q)});
    }

    const InverterParams circle{1.0, 1.0, 0.0};
    double worst_circle = 0.0;
    for (int i = 0; i <= 64; ++i) {
        const double q = -1.0 + 2.0 * i / 64.0;
        const auto op = apply_q_command(q, 2.0, circle);
        worst_circle = std::max(worst_circle, std::abs(op.p_kw * op.p_kw + op.q_kvar * op.q_kvar - 1.0));
    }
    const double wall = seconds_since(t0);
    const bool ok = worst_excess <= kCapabilityTol && worst_example <= kWorkedExampleTol && worst_circle <= kCapabilityTol &&
                    wall < kInverterBudgetS;
    report(ok, "inverter_capability",
           fmt("%d samples, max ellipse excess %.2e; worked examples err %.2e; semicircle err %.2e; %.3f s", kSamples, worst_excess,
               worst_example, worst_circle, wall));
}

void powerflow_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240601);
    constexpr int kNetworks = 150;
    double worst_oracle = 0.0, worst_balance = 0.0;
    int nonconverged = 0;
    for (int n = 0; n < kNetworks; ++n) {
        const auto m = testgen::random_radial_feeder(rng);
        const auto head = balanced_voltage(0.98 + 0.04 * double(rng() % 100) / 100.0, double(rng() % 20) - 10.0);
        const auto st = solve_feeder(m, head);
        if (!st.converged) {
            ++nonconverged;
            continue;
        }
        const auto ref = oracle::solve_feeder_nodal(m, head);
        for (std::size_t b = 0; b < m.buses.size(); ++b) worst_oracle = std::max(worst_oracle, (st.voltage[b] - ref[b]).cwiseAbs().maxCoeff());
        const auto agg = feeder_aggregate(st, m);
        const cd demand = oracle::net_demand(m, st);
        const double base = m.base_kva();
        worst_balance = std::max({worst_balance, std::abs(agg.p_total_kw / base - (demand.real() + agg.losses_kw / base)),
                                  std::abs(agg.q_total_kvar / base - (demand.imag() + agg.reactive_losses_kvar / base))});
    }

    const auto two_bus = parse_grid_file("[buses]\nS,a,4.16,slack\nL,a,4.16,pq\n[branches]\nS,L,0.01,0.02\n[loads]\nld,L,a,constant_power,1000,500\n");
    const auto st = solve_feeder(two_bus, balanced_voltage(1.0, 0.0));
    // Fixed-point oracle V2 <- 1 - z conj(S / V2).
    cd v2{1.0, 0.0};
    for (int i = 0; i < 200; ++i) v2 = 1.0 - cd{0.01, 0.02} * std::conj(cd{1.0, 0.5} / v2);
    const double got = std::abs(st.voltage[1](0));
    const double wall = seconds_since(t0);
    const bool ok = nonconverged == 0 && worst_oracle < kOracleTol && worst_balance < kBalanceTol && st.converged &&
                    std::abs(got - std::abs(v2)) < kTwoBusTol && std::abs(got - kTwoBusTarget) < kTwoBusTol && wall < kPowerflowBudgetS;
    report(ok, "powerflow_oracle",
           fmt("%d networks, max |dV| %.2e, max balance %.2e; 2-bus |V2| %.6f (oracle %.6f); %.3f s", kNetworks, worst_oracle,
               worst_balance, got, std::abs(v2), wall));
}

void vsm_suite() {
    const auto m = parse_grid_file(
        "[buses]\nA,abc,4.16,slack\nB,abc,4.16,pq\nC,abc,4.16,pq\n[branches]\n"
        "A,B,0.01,0.03,0.002,0.006,0.002,0.006,0.01,0.03,0.002,0.006,0.01,0.03\n"
        "B,C,0.012,0.035,0.002,0.006,0.002,0.006,0.012,0.035,0.002,0.006,0.012,0.035\n"
        "[loads]\nlb,B,abc,constant_power,300,100\nlc,C,abc,constant_current,200,80\n");
    const auto head = balanced_voltage(1.0, 0.0);
    const auto st = solve_feeder(m, head);
    const auto nodes = all_nodes(m);
    const std::vector<Actuator> acts = {{"mid", "B", PhaseSet::all()}, {"end", "C", PhaseSet::all()}};
    constexpr double delta = 0.01;
    const auto vsm = compute_vsm(m, head, {}, st, nodes, acts, delta);

    auto v_with = [&](const Actuator& a, double q_pu) {
        FeederInputs in;
        in.extra.push_back({a.bus, a.phases, 0.0, q_pu * m.base_kva()});
        return solve_feeder(m, head, in).voltage;
    };
    double worst_rel = 0.0;
    bool positive = true;
    for (std::size_t a = 0; a < acts.size(); ++a) {
        const auto up = v_with(acts[a], delta / 2), down = v_with(acts[a], -delta / 2);
        for (std::size_t r = 0; r < nodes.size(); ++r) {
            const auto [bus, phase] = nodes[r];
            if (bus == 0) continue;
            const double central = (std::abs(up[bus](int(phase))) - std::abs(down[bus](int(phase)))) / delta;
            const double entry = vsm.dv_dq(Eigen::Index(r), Eigen::Index(a));
            worst_rel = std::max(worst_rel, std::abs(entry - central) / std::abs(central));
            if (acts[a].id == "end") positive = positive && entry > 0.0;
        }
    }
    report(vsm.valid[0] && vsm.valid[1] && worst_rel < kVsmRelTol && positive, "vsm_central_difference",
           fmt("3-bus chain, max relative deviation %.3f%%; downstream capacitive entries %s", worst_rel * 100.0,
               positive ? "all positive" : "NOT all positive"));
}

void determinism(const CliRun& a, const CliRun& b) {
    const bool telemetry_same = slurp(a.dir + "/telemetry.csv") == slurp(b.dir + "/telemetry.csv");
    const bool events_same = slurp(a.dir + "/events.csv") == slurp(b.dir + "/events.csv");
    const auto bytes = fs::file_size(a.dir + "/events.csv") + fs::file_size(a.dir + "/telemetry.csv");
    report(a.rc == 0 && b.rc == 0 && telemetry_same && events_same, "federation_determinism",
           fmt("two sim runs, seed 42: telemetry %s, events %s (%zu bytes)", telemetry_same ? "identical" : "DIFFER",
               events_same ? "identical" : "DIFFER", std::size_t(bytes)));
}

/// Deliveries never fall in a sever window of their channel, and arrive in send order.
struct LogCheck {
    std::size_t recv = 0, in_window = 0, out_of_order = 0;
};

void check_log(const std::vector<Row>& events, const ScenarioSpec& spec, LogCheck& out) {
    std::map<std::string, std::vector<std::string>> sent;
    std::map<std::string, std::size_t> cursor;
    std::map<std::string, double> last;
    for (const auto& r : events) {
        if (r.b == "send") sent[r.a].push_back(r.c);
        if (r.b != "recv") continue;
        ++out.recv;
        const auto ch = parse_channel(r.a);
        for (const auto& w : spec.links[std::size_t(*ch)].sever)
            if (w.contains(r.t)) ++out.in_window;
        auto& i = cursor[r.a];
        const auto& s = sent[r.a];
        while (i < s.size() && s[i] != r.c) ++i;
        if (i == s.size() || (last.count(r.a) && r.t < last[r.a])) ++out.out_of_order;
        ++i;
        last[r.a] = r.t;
    }
}

void link_statistics(const std::vector<std::pair<std::vector<Row>, ScenarioSpec>>& runs) {
    const auto vpn = *link_preset("vpn");
    Link link(vpn, 42);
    constexpr int kMessages = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < kMessages; ++i) {
        const SimTime t = from_seconds(double(i));
        const auto d = link.send(t);
        const double lat = to_seconds(d.delivery - t);
        sum += lat;
        sum2 += lat * lat;
    }
    const double mean = sum / kMessages;
    const double sd = std::sqrt((sum2 - kMessages * mean * mean) / (kMessages - 1));
    const double se = sd / std::sqrt(double(kMessages));

    // Synthetic jittery, lossy channel with windows.
    LinkConfig jitter{LatencyDistribution::uniform(0.0, 3.0), 0.1, {SeverWindow{100.0, 150.0}, SeverWindow{400.0, 401.0}}};
    Link lossy(jitter, 3);
    LogCheck synthetic;
    SimTime last = 0;
    for (int i = 0; i < 5000; ++i) {
        const SimTime t = from_seconds(0.1 * i);
        const auto d = lossy.send(t);
        if (d.outcome != SendOutcome::delivered) continue;
        ++synthetic.recv;
        for (const auto& w : jitter.sever)
            if (w.contains(to_seconds(d.delivery))) ++synthetic.in_window;
        if (d.delivery < last) ++synthetic.out_of_order;
        last = d.delivery;
    }

    LogCheck logs;
    for (const auto& [events, spec] : runs) check_log(events, spec, logs);
    const bool ok = std::abs(mean - kVpnMean) < kStandardErrors * se && synthetic.in_window == 0 && synthetic.out_of_order == 0 &&
                    logs.in_window == 0 && logs.out_of_order == 0 && logs.recv > 0;
    report(ok, "link_statistics",
           fmt("vpn mean %.5f s over %d (3 SE = %.5f); deliveries inside sever windows %zu; FIFO violations %zu (%zu deliveries checked)",
               mean, kMessages, kStandardErrors * se, synthetic.in_window + logs.in_window, synthetic.out_of_order + logs.out_of_order,
               synthetic.recv + logs.recv));
}

bool in_any_window(const ScenarioSpec& spec, double t) {
    for (const auto& l : spec.links)
        for (const auto& w : l.sever)
            if (w.contains(t)) return true;
    return false;
}

std::size_t band_violations(const Series& s, const std::function<bool(const std::string&)>& feeder_filter, double& v_max) {
    std::size_t n = 0;
    v_max = 0.0;
    for (const auto& [stream, values] : s) {
        if (stream.size() < 6 || stream[0] != 'f' || !stream.ends_with(".v_mag") || !feeder_filter(stream)) continue;
        for (const auto& [t, v] : values) {
            v_max = std::max(v_max, v);
            if (v < 0.95 || v > 1.05) ++n;
        }
    }
    return n;
}

void closed_loop(const CliRun& run, const ScenarioSpec& spec) {
    const auto s = read_telemetry(run.dir + "/telemetry.csv");
    const auto& req = s.at("request.q_req");
    const auto& got = s.at("response.q_delivered");
    const auto& degraded = s.at("control.degraded");
    std::size_t healthy = 0, bad = 0;
    double worst = 0.0;
    for (const auto& [t, q_req] : req) {
        if (degraded.at(t) != 0.0 || in_any_window(spec, t)) continue;
        ++healthy;
        const double err = std::abs(got.at(t) - q_req);
        worst = std::max(worst, err);
        if (!(err < std::max(kTrackingRel * std::abs(q_req), kTrackingAbsKvar))) ++bad;
    }
    double v_max = 0.0;
    const auto violations = band_violations(s, [](const std::string&) { return true; }, v_max);
    const bool ok = run.rc == 0 && healthy == req.size() && healthy == 24 && bad == 0 && violations == 0 && run.wall_s < kClosedLoopBudgetS;
    report(ok, "closed_loop_tracking",
           fmt("%zu/%zu healthy intervals, %zu outside tolerance, max |error| %.4f kVAR; band violations %zu; %.2f s", healthy,
               req.size(), bad, worst, violations, run.wall_s));
}

void sever_window(const CliRun& run, const ScenarioSpec& spec) {
    const auto s = read_telemetry(run.dir + "/telemetry.csv");
    const auto& inv = *spec.inverter;
    const auto& windows = spec.links[std::size_t(Channel::dctl_to_inv)].sever;
    const auto& req = s.at("request.q_req");
    const auto& got = s.at("response.q_delivered");
    const auto& alloc = s.at("dispatch." + inv.id + ".q_alloc");
    std::size_t samples = 0;
    double worst = 0.0, deficit_sum = 0.0;
    for (const auto& [t, q_req] : req) {
        if (!in_any_window(spec, t)) continue;
        ++samples;
        const double deficit = q_req - got.at(t);
        deficit_sum += deficit;
        worst = std::max(worst, std::abs(deficit - alloc.at(t)));
    }
    const std::string host = "f" + std::to_string(inv.feeder + 1) + ".";
    double host_max_in_window = 0.0;
    for (const auto& [stream, values] : s) {
        if (!stream.starts_with(host) || !stream.ends_with(".v_mag")) continue;
        for (const auto& [t, v] : values)
            for (const auto& w : windows)
                if (w.contains(t)) host_max_in_window = std::max(host_max_in_window, v);
    }
    double other_max = 0.0;
    const auto other_violations = band_violations(s, [&](const std::string& st) { return !st.starts_with(host); }, other_max);
    const bool ok = run.rc == 0 && samples > 0 && worst < kDeficitTolKvar && host_max_in_window > kViolationPu && other_violations == 0;
    report(ok, "sever_window",
           fmt("%zu intervals in window, mean deficit %.1f kVAR, max |deficit - allocation| %.4f kVAR; host feeder max %.4f pu; "
               "other-feeder violations %zu",
               samples, samples ? deficit_sum / double(samples) : 0.0, worst, host_max_in_window, other_violations));
}

/// Replays every channel's link decisions from the logged send times and checks
/// the causal chain of each control interval against configured delays.
void timeline(const CliRun& run, const ScenarioSpec& spec) {
    const auto events = read_csv(run.dir + "/events.csv");
    const auto& c = spec.controllers;

    // Link replay: logged outcome and delivery time per send.
    std::map<std::string, Link> links;
    for (auto ch : kAllChannels) links.emplace(std::string(channel_name(ch)), Link(spec.links[std::size_t(ch)], channel_seed(spec.seed, ch)));
    std::map<std::string, std::vector<std::pair<std::string, double>>> expected;  // channel -> (frame, delivery) in order
    std::map<std::string, std::size_t> next;
    double worst_delivery = 0.0;
    std::size_t replay_mismatch = 0;
    for (const auto& r : events) {
        auto it = links.find(r.a);
        if (it == links.end()) continue;
        if (r.b == "send") {
            const auto d = it->second.send(from_seconds(r.t));
            if (d.outcome == SendOutcome::delivered) expected[r.a].emplace_back(r.c, to_seconds(d.delivery));
        } else if (r.b == "recv") {
            auto& i = next[r.a];
            const auto& e = expected[r.a];
            if (i >= e.size() || e[i].first != r.c) {
                ++replay_mismatch;
                continue;
            }
            worst_delivery = std::max(worst_delivery, std::abs(r.t - e[i].second));
            ++i;
        }
    }

    auto find = [&](double from, double to, const std::string& a, const std::string& b, const std::string& prefix) -> const Row* {
        for (const auto& r : events)
            if (r.t >= from - kTimelineTolS && r.t < to && r.a == a && r.b == b && r.c.starts_with(prefix)) return &r;
        return nullptr;
    };
    auto recv_of = [&](const Row* sent) -> const Row* {
        if (!sent) return nullptr;
        for (const auto& r : events)
            if (r.t >= sent->t && r.a == sent->a && r.b == "recv" && r.c == sent->c) return &r;
        return nullptr;
    };

    const double start = spec.start_s();
    const int intervals = int(std::floor((spec.end_s() - start) / c.interval_s + 1e-9));
    int good = 0;
    double worst_offset = 0.0;
    std::string first_bad;
    for (int k = 1; k <= intervals; ++k) {
        const double t0 = start + (k - 1) * c.interval_s, t1 = t0 + c.interval_s;
        const std::string tag = "|interval=" + std::to_string(k);
        const Row* pull = find(t0, t1, "dist_controller", "action", "PULL_MEASUREMENTS" + tag);
        const Row* gen = find(t0, t1, "trans_controller", "action", "GEN_COMMANDS" + tag);
        const Row* cons = find(t0, t1, "dctl->tctl", "send", "DT_CONSTRAINTS");
        const Row* cons_rx = recv_of(cons);
        const Row* tvvc = find(t0, t1, "trans_controller", "action", "TVVC_SOLVE" + tag);
        const Row* request = find(t0, t1, "tctl->dctl", "send", "TD_REQUEST");
        const Row* request_rx = recv_of(request);
        const Row* dvvc = find(t0, t1, "dist_controller", "action", "DVVC_SOLVE" + tag);
        const Row* command = find(t0, t1, "dctl->inv", "send", "DPV_COMMAND");
        const Row* command_rx = recv_of(command);
        const Row* response = command_rx ? find(command_rx->t, t1, "inv->dist", "send", "PVD_RESPONSE") : nullptr;
        if (!(pull && gen && cons_rx && tvvc && request_rx && dvvc && command_rx && response)) {
            if (first_bad.empty()) first_bad = fmt("interval %d: missing step", k);
            continue;
        }
        const double response_tick = start + std::ceil((command_rx->t - start) / c.response_period_s - 1e-9) * c.response_period_s;
        const double offsets[] = {
            pull->t - t0,
            gen->t - t0,
            cons->t - (pull->t + c.dist_compute_s),
            tvvc->t - (cons_rx->t + c.trans_compute_s),
            request->t - tvvc->t,
            dvvc->t - (request_rx->t + c.dist_vvc_compute_s),
            command->t - dvvc->t,
            response->t - response_tick,
        };
        double worst = 0.0;
        for (double o : offsets) worst = std::max(worst, std::abs(o));
        worst_offset = std::max(worst_offset, worst);
        const bool ordered = pull < gen && gen->t <= cons->t && cons_rx->t <= tvvc->t && tvvc->t <= request->t &&
                             request_rx->t <= dvvc->t && dvvc->t <= command->t && command_rx->t <= response->t;
        if (ordered && worst < kTimelineTolS)
            ++good;
        else if (first_bad.empty())
            first_bad = fmt("interval %d: %s, offset %.6f s", k, ordered ? "ordered" : "OUT OF ORDER", worst);
    }
    const bool ok = run.rc == 0 && intervals > 0 && good == intervals && replay_mismatch == 0 && worst_delivery < kTimelineTolS;
    report(ok, "timeline_conformance",
           fmt("%d/%d intervals ordered pull>gen>constraints>TVVC>DVVC>response, max offset %.2e s; replayed deliveries max err %.2e s, "
               "%zu mismatches%s%s",
               good, intervals, worst_offset, worst_delivery, replay_mismatch, first_bad.empty() ? "" : "; first failure: ",
               first_bad.c_str()));
}

}  // namespace

int main() {
    inverter_suite();
    powerflow_suite();
    vsm_suite();

    const auto healthy_spec = load_scenario_spec(kScenarios + "/desk_healthy.scn");
    const auto sever_spec = load_scenario_spec(kScenarios + "/desk_sever.scn");
    const auto healthy = run_cli("desk_healthy.scn", kOut + "/healthy_a");
    const auto repeat = run_cli("desk_healthy.scn", kOut + "/healthy_b");
    const auto sever = run_cli("desk_sever.scn", kOut + "/sever");
    determinism(healthy, repeat);
    link_statistics({{read_csv(healthy.dir + "/events.csv"), healthy_spec}, {read_csv(sever.dir + "/events.csv"), sever_spec}});
    closed_loop(healthy, healthy_spec);
    sever_window(sever, sever_spec);
    timeline(healthy, healthy_spec);

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
