#include "hilfed/federates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "hilfed/controllers.hpp"
#include "hilfed/error.hpp"
#include "hilfed/inverter.hpp"
#include "hilfed/link.hpp"

namespace hilfed {

DeviceIndex::DeviceIndex(const LoadedScenario& scenario) {
    for (std::size_t f = 0; f < scenario.feeders.size(); ++f) {
        for (std::size_t i = 0; i < scenario.feeders[f].solar.size(); ++i) pvs.push_back({f, i});
        for (std::size_t i = 0; i < scenario.feeders[f].shunts.size(); ++i) shunts.push_back({f, i});
    }
}

std::int64_t interval_index(const LoadedScenario& scenario, SimTime t) {
    const SimTime interval = from_seconds(scenario.spec.controllers.interval_s);
    return (t - from_seconds(scenario.spec.start_s())) / interval + 1;
}

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::string marker(std::string_view name, std::int64_t interval) {
    return std::string(name) + "|interval=" + std::to_string(interval);
}

bool same_inputs(const FeederInputs& x, const FeederInputs& y) {
    if (x.load_demand_kva != y.load_demand_kva || x.solar_kva != y.solar_kva || x.shunt_blocks_on != y.shunt_blocks_on ||
        x.extra.size() != y.extra.size())
        return false;
    for (std::size_t i = 0; i < x.extra.size(); ++i)
        if (x.extra[i].bus != y.extra[i].bus || x.extra[i].phases != y.extra[i].phases || x.extra[i].p_kw != y.extra[i].p_kw ||
            x.extra[i].q_kvar != y.extra[i].q_kvar)
            return false;
    return true;
}

/// Schedules `tick` at start + n * period for n = first, first + 1, ... while <= end.
void schedule_periodic(FederateContext& ctx, SimTime start, SimTime period, SimTime end, std::int64_t n,
                       std::function<void()> tick) {
    const SimTime at = start + n * period;
    if (at > end) return;
    ctx.schedule(at, [&ctx, start, period, end, n, tick] {
        tick();
        schedule_periodic(ctx, start, period, end, n + 1, tick);
    });
}

// ---------------------------------------------------------------------------

class TransmissionFederate final : public Federate {
public:
    TransmissionFederate(const LoadedScenario& sc, LocalPorts& ports)
        : sc_(sc), ports_(ports), model_(sc.transmission), boundary_(model_.require_bus(sc.spec.boundary_bus)) {}

    FederateId id() const override { return FederateId::transmission; }

    void start(FederateContext& ctx) override {
        const auto& s = sc_.spec;
        schedule_periodic(ctx, from_seconds(s.start_s()), from_seconds(s.controllers.boundary_period_s), from_seconds(s.end_s()), 0,
                          [this, &ctx] { tick(ctx); });
    }

    void on_frame(FederateContext& ctx, Channel, const Frame& frame) override {
        const auto* f = std::get_if<DtBoundary>(&frame);
        if (!f) return;
        const auto fresh = staleness_check(f->scenario_ctr, last_ctr_);
        if (fresh.status == Freshness::stale) {
            ctx.log_action("STALE|DT_BOUNDARY|ctr=" + std::to_string(f->scenario_ctr));
            return;
        }
        if (fresh.status == Freshness::gap) ctx.log_action("GAP|DT_BOUNDARY|missed=" + std::to_string(fresh.missed));
        last_ctr_ = f->scenario_ctr;
        if (f->p_total != p_kw_ || f->q_total != q_kvar_) {
            p_kw_ = f->p_total;
            q_kvar_ = f->q_total;
            dirty_ = true;
        }
    }

private:
    void tick(FederateContext& ctx) {
        const auto [v_set, version] = ports_.generator_commands.get();
        if (version != gen_version_ && v_set.size() == model_.generators.size()) {
            for (std::size_t g = 0; g < v_set.size(); ++g) model_.generators[g].v_set = v_set[g];
            dirty_ = true;
        }
        gen_version_ = version;
        if (dirty_) {
            const std::vector<BusLoad> boundary = {{sc_.spec.boundary_bus, p_kw_ / 1000.0, q_kvar_ / 1000.0}};
            try {
                auto st = solve_transmission(model_, boundary);
                if (st.converged) {
                    state_ = std::move(st);
                    TransSnapshot snap{state_, boundary, {}, true};
                    for (const auto& g : model_.generators) snap.generator_v_set.push_back(g.v_set);
                    ports_.trans_snapshot.put(std::move(snap));
                } else {
                    ctx.log_action("SOLVER_NONCONVERGED|transmission");
                }
            } catch (const SolverError& e) {
                ctx.log_action(std::string("SOLVER_FAILED|transmission|") + e.what());
            }
            dirty_ = false;
        }
        if (state_.voltage.empty()) return;
        const auto v = state_.voltage[boundary_](0);
        ctx.send(Channel::trans_to_dist, TdBoundary{to_seconds(ctx.now()), std::abs(v), std::arg(v) * kRadToDeg,
                                                     interval_index(sc_, ctx.now())});
    }

    const LoadedScenario& sc_;
    LocalPorts& ports_;
    GridModel model_;
    std::size_t boundary_;
    PhasorState state_;
    double p_kw_ = 0.0, q_kvar_ = 0.0;
    std::int64_t last_ctr_ = 0;
    std::uint64_t gen_version_ = 0;
    bool dirty_ = true;
};

// ---------------------------------------------------------------------------

class DistributionFederate final : public Federate {
public:
    DistributionFederate(const LoadedScenario& sc, LocalPorts& ports) : sc_(sc), ports_(ports), devices_(sc) {
        for (std::size_t f = 0; f < sc.feeders.size(); ++f) {
            const auto& m = sc.feeders[f];
            std::vector<ZipLoad> scalable;
            for (const auto& l : m.loads)
                if (!l.fixed) scalable.push_back(l);
            const auto& head = sc.profiles.at(sc.spec.feeders[f].load_profile).values;
            load_series_.push_back(disaggregate_feeder_profile(head, scalable));
            feeders_.emplace_back();
        }
        pv_q_.assign(devices_.pvs.size(), 0.0);
        pv_p_cap_.assign(devices_.pvs.size(), std::numeric_limits<double>::infinity());
        for (const auto& [f, i] : devices_.shunts) shunt_on_.push_back(sc.feeders[f].shunts[i].initial_on);
    }

    FederateId id() const override { return FederateId::distribution; }

    void start(FederateContext& ctx) override {
        const auto& s = sc_.spec;
        schedule_periodic(ctx, from_seconds(s.start_s()), from_seconds(s.controllers.boundary_period_s), from_seconds(s.end_s()), 0,
                          [this, &ctx] { tick(ctx); });
    }

    void on_frame(FederateContext& ctx, Channel, const Frame& frame) override {
        if (const auto* td = std::get_if<TdBoundary>(&frame)) {
            const auto fresh = staleness_check(td->scenario_ctr, last_ctr_);
            if (fresh.status == Freshness::stale) {
                ctx.log_action("STALE|TD_BOUNDARY|ctr=" + std::to_string(td->scenario_ctr));
                return;
            }
            if (fresh.status == Freshness::gap) ctx.log_action("GAP|TD_BOUNDARY|missed=" + std::to_string(fresh.missed));
            last_ctr_ = td->scenario_ctr;
            v_mag_ = td->v_mag;
            v_angle_ = td->v_angle_a;
        } else if (const auto* r = std::get_if<PvdResponse>(&frame)) {
            hw_response_kvar_ = r->q_resp * sc_.spec.inverter->params.s_rating_kva;
            hw_response_at_ = ctx.now();
        }
    }

private:
    struct FeederRun {
        FeederSnapshot snap;
        bool solved = false;
    };

    void tick(FederateContext& ctx) {
        const SimTime now = ctx.now();
        const double t = to_seconds(now);
        const auto& c = sc_.spec.controllers;

        const auto [cmd, version] = ports_.device_commands.get();
        if (version != cmd_version_) {
            if (cmd.pv_q_kvar.size() == pv_q_.size()) pv_q_ = cmd.pv_q_kvar;
            if (cmd.pv_p_cap_kw.size() == pv_p_cap_.size()) pv_p_cap_ = cmd.pv_p_cap_kw;
            if (cmd.shunt_on.size() == shunt_on_.size()) shunt_on_ = cmd.shunt_on;
            cmd_version_ = version;
        }

        double hw_q = 0.0;
        if (hw_response_at_ && to_seconds(now - *hw_response_at_) <= c.pv_response_hold_s) hw_q = hw_response_kvar_;

        const auto head = balanced_voltage(v_mag_, v_angle_);
        DistSnapshot snap;
        snap.time = now;
        snap.hw_q_kvar = hw_q;
        snap.shunt_on = shunt_on_;
        snap.pv_q_kvar.assign(pv_q_.size(), 0.0);
        snap.pv_p_kw.assign(pv_q_.size(), 0.0);
        double p_total = 0.0, q_total = 0.0;
        std::size_t pv_flat = 0, shunt_flat = 0;
        for (std::size_t f = 0; f < sc_.feeders.size(); ++f) {
            const auto& m = sc_.feeders[f];
            FeederInputs in;
            const auto step = std::size_t(std::max(0.0, std::floor(t / kProfileStepSeconds)));
            std::size_t k = 0;
            for (const auto& l : m.loads) {
                if (l.fixed) {
                    in.load_demand_kva.push_back({l.rated_p_kw, l.rated_q_kvar});
                    continue;
                }
                const auto& series = load_series_[f][k++];
                const double p = series[std::min(step, series.size() - 1)];
                in.load_demand_kva.push_back({p, l.rated_p_kw > 0.0 ? p * l.rated_q_kvar / l.rated_p_kw : 0.0});
            }
            for (const auto& farm : m.solar) {
                const InverterParams params{farm.s_rating_kva, c.pv_k, 0.0};
                const double avail = std::clamp(sc_.profiles.at(farm.profile_id).at(t), 0.0, 1.0) * farm.s_rating_kva;
                const auto op = apply_q_command(pv_q_[pv_flat], std::min(avail, pv_p_cap_[pv_flat]), params);
                in.solar_kva.push_back({op.p_kw, op.q_kvar});
                snap.pv_q_kvar[pv_flat] = op.q_kvar;
                snap.pv_p_kw[pv_flat] = op.p_kw;
                ++pv_flat;
            }
            for (std::size_t i = 0; i < m.shunts.size(); ++i) in.shunt_blocks_on.push_back(shunt_on_[shunt_flat++]);
            if (sc_.spec.inverter && sc_.spec.inverter->feeder == f && hw_q != 0.0)
                in.extra.push_back({sc_.spec.inverter->bus, sc_.spec.inverter->phases, 0.0, hw_q});

            auto& run = feeders_[f];
            if (!run.solved || run.snap.head != head || !same_inputs(run.snap.inputs, in)) {
                try {
                    auto st = solve_feeder(m, head, in);
                    if (st.converged) {
                        run.snap.aggregate = feeder_aggregate(st, m, t);
                        run.snap.state = std::move(st);
                        run.solved = true;
                    } else {
                        ctx.log_action("SOLVER_NONCONVERGED|feeder" + std::to_string(f + 1));
                    }
                } catch (const SolverError& e) {
                    ctx.log_action("SOLVER_FAILED|feeder" + std::to_string(f + 1) + "|" + e.what());
                }
                run.snap.head = head;
                run.snap.inputs = std::move(in);
            }
            run.snap.aggregate.sim_time_s = t;
            p_total += run.snap.aggregate.p_total_kw;
            q_total += run.snap.aggregate.q_total_kvar;
            snap.feeders.push_back(run.snap);
        }
        snap.valid = std::all_of(feeders_.begin(), feeders_.end(), [](const FeederRun& r) { return r.solved; });
        const bool sample = now > from_seconds(sc_.spec.start_s()) &&
                            (now - from_seconds(sc_.spec.start_s())) % from_seconds(c.telemetry_period_s) == 0;
        if (sample) write_telemetry(ctx, snap);
        ports_.dist_snapshot.put(std::move(snap));
        ctx.send(Channel::dist_to_trans, DtBoundary{t, p_total, q_total, interval_index(sc_, now)});
    }

    void write_telemetry(FederateContext& ctx, const DistSnapshot& snap) {
        for (std::size_t f = 0; f < snap.feeders.size(); ++f) {
            const auto& m = sc_.feeders[f];
            const auto& fs = snap.feeders[f];
            const std::string prefix = "f" + std::to_string(f + 1) + ".";
            if (fs.state.voltage.empty()) continue;
            for (std::size_t b = 0; b < m.buses.size(); ++b)
                for (Phase p : m.buses[b].phases.phases())
                    ctx.telemetry(prefix + m.buses[b].id + "." + phase_letter(p) + ".v_mag", std::abs(fs.state.voltage[b](int(p))), "pu");
            const std::string feeder = "feeder" + std::to_string(f + 1);
            ctx.telemetry(feeder + ".p_total", fs.aggregate.p_total_kw, "kW");
            ctx.telemetry(feeder + ".q_total", fs.aggregate.q_total_kvar, "kVAR");
            ctx.telemetry(feeder + ".losses", fs.aggregate.losses_kw, "kW");
        }
        ctx.telemetry("boundary.v_mag", v_mag_, "pu");
        if (sc_.spec.inverter) ctx.telemetry("inverter.q_applied", snap.hw_q_kvar, "kVAR");
    }

    const LoadedScenario& sc_;
    LocalPorts& ports_;
    DeviceIndex devices_;
    std::vector<std::vector<std::vector<double>>> load_series_;  // [feeder][scalable load][step]
    std::vector<FeederRun> feeders_;
    std::vector<double> pv_q_, pv_p_cap_;
    std::vector<int> shunt_on_;
    double v_mag_ = 1.0, v_angle_ = 0.0;
    std::int64_t last_ctr_ = 0;
    std::uint64_t cmd_version_ = 0;
    double hw_response_kvar_ = 0.0;
    std::optional<SimTime> hw_response_at_;
};

// ---------------------------------------------------------------------------

class InverterFederate final : public Federate {
public:
    explicit InverterFederate(const LoadedScenario& sc)
        : sc_(sc), spec_(*sc.spec.inverter), profile_(sc.profiles.at(spec_.solar_profile)), inverter_(spec_.params) {}

    FederateId id() const override { return FederateId::inverter; }

    void start(FederateContext& ctx) override {
        const auto& s = sc_.spec;
        schedule_periodic(ctx, from_seconds(s.start_s()), from_seconds(s.controllers.response_period_s), from_seconds(s.end_s()), 1,
                          [this, &ctx] { respond(ctx); });
    }

    void on_frame(FederateContext& ctx, Channel, const Frame& frame) override {
        const auto* cmd = std::get_if<DpvCommand>(&frame);
        if (!cmd) return;
        const double t = to_seconds(ctx.now());
        track_irradiance(t);
        inverter_.command(cmd->q_req * spec_.params.s_rating_kva, t);
    }

private:
    void track_irradiance(double t) {
        inverter_.update_irradiance(std::max(0.0, profile_.at(t)) * spec_.params.s_rating_kva, t);
    }

    void respond(FederateContext& ctx) {
        const double t = to_seconds(ctx.now());
        track_irradiance(t);
        const double q = inverter_.respond(t);
        ctx.telemetry("inverter.q_out", q, "kVAR");
        ctx.send(Channel::inv_to_dist, PvdResponse{t, q / spec_.params.s_rating_kva});
    }

    const LoadedScenario& sc_;
    HardwareInverterSpec spec_;
    const Profile& profile_;
    Inverter inverter_;
};

// ---------------------------------------------------------------------------

class DistControllerFederate final : public Federate {
public:
    DistControllerFederate(const LoadedScenario& sc, LocalPorts& ports) : sc_(sc), ports_(ports), devices_(sc) {
        const auto& c = sc.spec.controllers;
        for (std::size_t n = 0; n < devices_.pvs.size(); ++n) {
            const auto& [f, i] = devices_.pvs[n];
            const auto& farm = sc.feeders[f].solar[i];
            units_.push_back({farm.id, f, 0, c.pv_k * farm.s_rating_kva, 0.0});
        }
        if (sc.spec.inverter) {
            const auto& inv = *sc.spec.inverter;
            units_.push_back({inv.id, inv.feeder, 0, inv.params.k * inv.params.s_rating_kva, 0.0});
        }
        for (const auto& [f, i] : devices_.shunts) {
            const auto& s = sc.feeders[f].shunts[i];
            shunts_.push_back({s.id, f, 0, s.kvar_per_block, s.blocks, s.initial_on});
        }
    }

    FederateId id() const override { return FederateId::dist_controller; }

    void start(FederateContext& ctx) override {
        const auto& s = sc_.spec;
        const SimTime start = from_seconds(s.start_s());
        const SimTime period = from_seconds(s.controllers.interval_s);
        const SimTime end = from_seconds(s.end_s());
        // Intervals begin strictly before the end of the run.
        if (start < end) schedule_periodic(ctx, start, period, end - 1, 0, [this, &ctx] { begin_interval(ctx); });
    }

    void on_frame(FederateContext& ctx, Channel, const Frame& frame) override {
        const auto* req = std::get_if<TdRequest>(&frame);
        if (!req) return;
        const auto fresh = staleness_check(req->scenario_ctr, last_ctr_);
        if (fresh.status == Freshness::stale) {
            ctx.log_action("STALE|TD_REQUEST|ctr=" + std::to_string(req->scenario_ctr));
            return;
        }
        if (fresh.status == Freshness::gap) ctx.log_action("GAP|TD_REQUEST|missed=" + std::to_string(fresh.missed));
        last_ctr_ = req->scenario_ctr;
        if (req->scenario_ctr != interval_ || dispatched_) {
            ctx.log_action("LATE|TD_REQUEST|ctr=" + std::to_string(req->scenario_ctr));
            return;
        }
        request_ = *req;
        have_request_ = true;
        held_ = 0;
        dispatched_ = true;
        const std::int64_t k = interval_;
        ctx.schedule(ctx.now() + from_seconds(sc_.spec.controllers.dist_vvc_compute_s), [this, &ctx, k] { dispatch(ctx, k, false); });
    }

private:
    void begin_interval(FederateContext& ctx) {
        const auto& c = sc_.spec.controllers;
        const SimTime t0 = ctx.now();
        interval_ = interval_index(sc_, t0);
        dispatched_ = false;
        degraded_ = false;
        pull(ctx);

        const std::int64_t k = interval_;
        ctx.schedule(t0 + from_seconds(c.dist_compute_s), [this, &ctx, k] {
            if (k != interval_ || !pulled_) return;
            ctx.send(Channel::dctl_to_tctl, DtConstraints{to_seconds(ctx.now()), envelope_.pv_p_curtail_max, envelope_.pv_q_max,
                                                          envelope_.pv_q_min, envelope_.dr_p_max, envelope_.dr_p_min, envelope_.losses});
        });
        ctx.schedule(t0 + from_seconds(c.request_deadline_s), [this, &ctx, k] {
            if (k != interval_ || dispatched_) return;
            dispatched_ = true;
            degraded_ = true;
            if (have_request_ && held_ < sc_.spec.controllers.hold_intervals) {
                ++held_;
                ctx.log_action("DEGRADED|interval=" + std::to_string(k) + "|mode=hold|held=" + std::to_string(held_));
            } else {
                request_ = TdRequest{};
                have_request_ = false;
                ctx.log_action("DEGRADED|interval=" + std::to_string(k) + "|mode=neutral");
            }
            dispatch(ctx, k, true);
        });
        ctx.schedule(t0 + from_seconds(c.tracking_offset_s), [this, &ctx, k] { record_tracking(ctx, k); });
    }

    void pull(FederateContext& ctx) {
        ctx.log_action(marker("PULL_MEASUREMENTS", interval_));
        auto [snap, version] = ports_.dist_snapshot.get();
        pulled_ = version > 0 && snap.valid;
        if (!pulled_) {
            ctx.log_action("NO_MEASUREMENTS|interval=" + std::to_string(interval_));
            return;
        }
        snapshot_ = std::move(snap);

        vsm_.assign(sc_.feeders.size(), Vsm{});
        views_.assign(sc_.feeders.size(), FeederSnapshotView{});
        std::vector<std::vector<Actuator>> actuators(sc_.feeders.size());
        for (std::size_t u = 0; u < units_.size(); ++u) {
            auto& unit = units_[u];
            const auto f = unit.feeder;
            const bool hardware = u >= devices_.pvs.size();
            if (hardware) {
                const auto& inv = *sc_.spec.inverter;
                actuators[f].push_back({inv.id, inv.bus, inv.phases});
                unit.applied_kvar = snapshot_.hw_q_kvar;
            } else {
                const auto& farm = sc_.feeders[f].solar[devices_.pvs[u].second];
                actuators[f].push_back({farm.id, farm.bus, PhaseSet::all()});
                unit.applied_kvar = snapshot_.pv_q_kvar[u];
            }
            unit.vsm_column = Eigen::Index(actuators[f].size() - 1);
        }
        for (std::size_t s = 0; s < shunts_.size(); ++s) {
            auto& sh = shunts_[s];
            const auto& model_shunt = sc_.feeders[sh.feeder].shunts[devices_.shunts[s].second];
            actuators[sh.feeder].push_back({model_shunt.id, model_shunt.bus, model_shunt.phases});
            sh.vsm_column = Eigen::Index(actuators[sh.feeder].size() - 1);
            sh.on = snapshot_.shunt_on[s];
        }
        std::vector<FeederAggregate> aggregates;
        for (std::size_t f = 0; f < sc_.feeders.size(); ++f) {
            const auto& fs = snapshot_.feeders[f];
            const auto nodes = all_nodes(sc_.feeders[f]);
            vsm_[f] = compute_vsm(sc_.feeders[f], fs.head, fs.inputs, fs.state, nodes, actuators[f]);
            Eigen::VectorXd v(Eigen::Index(nodes.size()));
            for (std::size_t n = 0; n < nodes.size(); ++n) v(Eigen::Index(n)) = std::abs(fs.state.voltage[nodes[n].bus](int(nodes[n].phase)));
            views_[f] = {nullptr, v, sc_.feeders[f].base_kva()};
            aggregates.push_back(fs.aggregate);
        }
        for (std::size_t f = 0; f < views_.size(); ++f) views_[f].vsm = &vsm_[f];

        std::vector<PvUnit> pvs;
        for (std::size_t u = 0; u < devices_.pvs.size(); ++u) {
            const auto& farm = sc_.feeders[devices_.pvs[u].first].solar[devices_.pvs[u].second];
            pvs.push_back({farm.id, {farm.s_rating_kva, sc_.spec.controllers.pv_k, 0.0}, snapshot_.pv_p_kw[u]});
        }
        if (sc_.spec.inverter) pvs.push_back({sc_.spec.inverter->id, sc_.spec.inverter->params, 0.0});
        envelope_ = compute_der_envelope(pvs, sc_.spec.controllers.dr, aggregates);
    }

    void dispatch(FederateContext& ctx, std::int64_t k, bool degraded) {
        if (k != interval_) return;
        ctx.log_action(marker("DVVC_SOLVE", k) + (degraded ? "|degraded" : ""));
        if (!pulled_) return;
        const double base = sc_.feeder_base_kva;
        const double q_req_kvar = request_.q_req * base;
        const auto& c = sc_.spec.controllers;
        const VoltageBand planning{c.band.lower + c.dispatch_margin_pu, c.band.upper - c.dispatch_margin_pu};
        plan_ = distribution_vvc(q_req_kvar, views_, units_, shunts_, planning);
        if (plan_.band_violation) ctx.log_action("BAND_VIOLATION_PREDICTED|interval=" + std::to_string(k));
        if (plan_.shortfall_kvar > 0.0) ctx.log_action("SHORTFALL|interval=" + std::to_string(k));

        DeviceCommands cmd;
        cmd.pv_q_kvar.assign(plan_.unit_q_kvar.begin(), plan_.unit_q_kvar.begin() + std::ptrdiff_t(devices_.pvs.size()));
        cmd.shunt_on = plan_.shunt_on;
        const double curtail_kw = std::max(0.0, request_.p_curtail_req) * base;
        double p_sum = 0.0;
        for (double p : snapshot_.pv_p_kw) p_sum += p;
        for (std::size_t u = 0; u < devices_.pvs.size(); ++u) {
            const double p = snapshot_.pv_p_kw[u];
            cmd.pv_p_cap_kw.push_back(curtail_kw > 0.0 && p_sum > 0.0 ? std::max(0.0, p - curtail_kw * p / p_sum)
                                                                      : std::numeric_limits<double>::infinity());
        }
        ports_.device_commands.put(std::move(cmd));

        hw_alloc_kvar_ = 0.0;
        if (sc_.spec.inverter) {
            hw_alloc_kvar_ = plan_.unit_q_kvar.back();
            ctx.send(Channel::dctl_to_inv, DpvCommand{to_seconds(ctx.now()), hw_alloc_kvar_ / sc_.spec.inverter->params.s_rating_kva});
        }
        plan_interval_ = k;
    }

    void record_tracking(FederateContext& ctx, std::int64_t k) {
        if (k != interval_) return;
        const auto [snap, version] = ports_.dist_snapshot.get();
        if (version == 0) return;
        const bool planned = plan_interval_ == k;
        const double requested = planned ? request_.q_req * sc_.feeder_base_kva : 0.0;
        double delivered = snap.hw_q_kvar;
        for (double q : snap.pv_q_kvar) delivered += q;
        ctx.telemetry("request.q_req", requested, "kVAR");
        ctx.telemetry("response.q_delivered", delivered, "kVAR");
        ctx.telemetry("tracking.error", delivered - requested, "kVAR");
        ctx.telemetry("dispatch.shortfall", planned ? plan_.shortfall_kvar : 0.0, "kVAR");
        for (std::size_t u = 0; u < units_.size(); ++u)
            ctx.telemetry("dispatch." + units_[u].id + ".q_alloc", planned ? plan_.unit_q_kvar[u] : 0.0, "kVAR");
        ctx.telemetry("control.degraded", degraded_ || !planned ? 1.0 : 0.0, "flag");
    }

    const LoadedScenario& sc_;
    LocalPorts& ports_;
    DeviceIndex devices_;
    std::vector<DispatchUnit> units_;  // software PVs then the hardware inverter
    std::vector<DispatchShunt> shunts_;
    std::vector<Vsm> vsm_;
    std::vector<FeederSnapshotView> views_;
    DistSnapshot snapshot_;
    DerEnvelope envelope_;
    DispatchPlan plan_;
    TdRequest request_;
    std::int64_t interval_ = 0, last_ctr_ = 0, plan_interval_ = -1;
    int held_ = 0;
    bool have_request_ = false, dispatched_ = false, degraded_ = false, pulled_ = false;
    double hw_alloc_kvar_ = 0.0;
};

// ---------------------------------------------------------------------------

class TransControllerFederate final : public Federate {
public:
    TransControllerFederate(const LoadedScenario& sc, LocalPorts& ports) : sc_(sc), ports_(ports), model_(sc.transmission) {
        const auto& c = sc.spec.controllers;
        settings_.boundary_bus = sc.spec.boundary_bus;
        settings_.v_target = c.v_target;
        settings_.band = c.band;
        settings_.generator_step_pu = c.generator_step_pu;
    }

    FederateId id() const override { return FederateId::trans_controller; }

    void start(FederateContext& ctx) override {
        const auto& s = sc_.spec;
        const SimTime start = from_seconds(s.start_s());
        const SimTime end = from_seconds(s.end_s());
        if (start < end)
            schedule_periodic(ctx, start, from_seconds(s.controllers.interval_s), end - 1, 0, [this, &ctx] { begin_interval(ctx); });
    }

    void on_frame(FederateContext& ctx, Channel, const Frame& frame) override {
        const auto* cons = std::get_if<DtConstraints>(&frame);
        if (!cons) return;
        if (solved_) {
            ctx.log_action("LATE|DT_CONSTRAINTS|interval=" + std::to_string(interval_));
            return;
        }
        envelope_ = {cons->pv_p_curtail_max, cons->pv_q_max, cons->pv_q_min, cons->dr_p_max, cons->dr_p_min, cons->losses};
        have_envelope_ = true;
        held_ = 0;
        solved_ = true;
        const std::int64_t k = interval_;
        ctx.schedule(ctx.now() + from_seconds(sc_.spec.controllers.trans_compute_s), [this, &ctx, k] { solve(ctx, k, false); });
    }

private:
    void begin_interval(FederateContext& ctx) {
        const SimTime t0 = ctx.now();
        interval_ = interval_index(sc_, t0);
        solved_ = false;
        ctx.log_action(marker("GEN_COMMANDS", interval_));
        if (!plan_v_set_.empty()) ports_.generator_commands.put(plan_v_set_);

        const std::int64_t k = interval_;
        ctx.schedule(t0 + from_seconds(sc_.spec.controllers.constraints_deadline_s), [this, &ctx, k] {
            if (k != interval_ || solved_) return;
            solved_ = true;
            if (have_envelope_ && held_ < sc_.spec.controllers.hold_intervals) {
                ++held_;
                ctx.log_action("DEGRADED|interval=" + std::to_string(k) + "|mode=hold|held=" + std::to_string(held_));
            } else {
                envelope_ = DerEnvelope{};
                have_envelope_ = false;
                q_prev_kvar_ = 0.0;
                ctx.log_action("DEGRADED|interval=" + std::to_string(k) + "|mode=neutral");
            }
            solve(ctx, k, true);
        });
    }

    void solve(FederateContext& ctx, std::int64_t k, bool degraded) {
        if (k != interval_) return;
        ctx.log_action(marker("TVVC_SOLVE", k) + (degraded ? "|degraded" : ""));
        const auto [snap, version] = ports_.trans_snapshot.get();
        TransmissionPlan plan;
        if (version > 0 && snap.valid) {
            for (std::size_t g = 0; g < model_.generators.size() && g < snap.generator_v_set.size(); ++g)
                model_.generators[g].v_set = snap.generator_v_set[g];
            try {
                plan = transmission_vvc(model_, snap.boundary, snap.state, envelope_, q_prev_kvar_, settings_);
                plan_v_set_ = plan.generator_v_set;
            } catch (const SolverError& e) {
                ctx.log_action(std::string("SOLVER_FAILED|trans_controller|") + e.what());
                plan.q_req_kvar = std::clamp(q_prev_kvar_, envelope_.pv_q_min, envelope_.pv_q_max);
            }
        }
        q_prev_kvar_ = plan.q_req_kvar;
        const double base = sc_.feeder_base_kva;
        ctx.send(Channel::tctl_to_dctl, TdRequest{to_seconds(ctx.now()), plan.p_curtail_kw / base, plan.q_req_kvar / base, k});
    }

    const LoadedScenario& sc_;
    LocalPorts& ports_;
    GridModel model_;
    TransmissionVvcSettings settings_;
    DerEnvelope envelope_;
    std::vector<double> plan_v_set_;
    double q_prev_kvar_ = 0.0;
    std::int64_t interval_ = 0;
    int held_ = 0;
    bool have_envelope_ = false, solved_ = false;
};

}  // namespace

std::array<std::unique_ptr<Federate>, kFederateCount> make_federates(const LoadedScenario& scenario, LocalPorts& ports) {
    std::array<std::unique_ptr<Federate>, kFederateCount> out;
    const auto build = [&out](FederateId id, auto make) {
        try {
            out[int(id)] = make();
        } catch (const std::exception& e) {
            throw ScenarioError(std::string(federate_name(id)) + " failed to initialize: " + e.what());
        }
    };
    build(FederateId::transmission, [&] { return std::make_unique<TransmissionFederate>(scenario, ports); });
    build(FederateId::distribution, [&] { return std::make_unique<DistributionFederate>(scenario, ports); });
    if (scenario.spec.inverter) build(FederateId::inverter, [&] { return std::make_unique<InverterFederate>(scenario); });
    build(FederateId::dist_controller, [&] { return std::make_unique<DistControllerFederate>(scenario, ports); });
    build(FederateId::trans_controller, [&] { return std::make_unique<TransControllerFederate>(scenario, ports); });
    return out;
}

}  // namespace hilfed
