#include "hilfed/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hilfed/error.hpp"

namespace hilfed {

DerEnvelope compute_der_envelope(std::span<const PvUnit> pvs, const DrCapacity& dr, std::span<const FeederAggregate> feeders) {
    DerEnvelope env;
    for (const auto& pv : pvs) {
        env.pv_q_max += pv.params.k * pv.params.s_rating_kva;
        env.pv_p_curtail_max += std::max(0.0, pv.p_out_kw);
    }
    env.pv_q_min = -env.pv_q_max;
    env.dr_p_max = dr.p_max_kw;
    env.dr_p_min = dr.p_min_kw;
    if (env.dr_p_min > env.dr_p_max) throw ScenarioError("demand response lower limit exceeds upper limit");
    for (const auto& f : feeders) env.losses += f.losses_kw;
    return env;
}

TransmissionPlan transmission_vvc(const GridModel& model, std::span<const BusLoad> boundary_loads, const PhasorState& state,
                                  const DerEnvelope& envelope, double q_prev_kvar, const TransmissionVvcSettings& settings) {
    if (!state.converged) throw SolverError("transmission VVC needs a converged state");
    const auto b = model.require_bus(settings.boundary_bus);
    TransmissionPlan plan;
    plan.boundary_v = std::abs(state.voltage[b](0));

    auto boundary_v_with = [&](double p_mw, double q_mvar) {
        std::vector<BusLoad> loads(boundary_loads.begin(), boundary_loads.end());
        loads.push_back({settings.boundary_bus, -p_mw, -q_mvar});
        const auto st = solve_transmission(model, loads);
        if (!st.converged) throw SolverError("transmission sensitivity re-solve did not converge");
        return std::abs(st.voltage[b](0));
    };
    const double d = settings.perturbation_mvar;
    plan.s_vq = (boundary_v_with(0.0, d) - plan.boundary_v) / (d * 1000.0);
    plan.s_vp = (boundary_v_with(d, 0.0) - plan.boundary_v) / (d * 1000.0);

    const double e = settings.v_target - plan.boundary_v;
    const double step = plan.s_vq > 0.0 ? e / plan.s_vq : 0.0;
    plan.q_req_kvar = std::clamp(q_prev_kvar + step, envelope.pv_q_min, envelope.pv_q_max);

    if (plan.boundary_v > settings.band.upper && plan.q_req_kvar <= envelope.pv_q_min && plan.s_vp > 0.0)
        plan.p_curtail_kw = std::clamp((plan.boundary_v - settings.band.upper) / plan.s_vp, 0.0, envelope.pv_p_curtail_max);

    for (const auto& g : model.generators)
        plan.generator_v_set.push_back(
            g.v_set + std::clamp(settings.v_target - g.v_set, -settings.generator_step_pu, settings.generator_step_pu));
    return plan;
}

namespace {

double column_value(const FeederSnapshotView& f, Eigen::Index node, Eigen::Index col) {
    return f.vsm->dv_dq(node, col) / f.base_kva;  // p.u. volts per kVAR
}

}  // namespace

std::vector<std::size_t> effectiveness_order(std::span<const FeederSnapshotView> feeders, std::span<const DispatchUnit> units) {
    std::vector<double> score(units.size());
    for (std::size_t i = 0; i < units.size(); ++i) {
        const auto& f = feeders[units[i].feeder];
        score[i] = f.vsm->q_effectiveness(units[i].vsm_column) / f.base_kva;
    }
    std::vector<std::size_t> order(units.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (score[x] != score[y]) return score[x] > score[y];
        return units[x].id < units[y].id;
    });
    return order;
}

std::vector<Eigen::VectorXd> predict_voltages(std::span<const FeederSnapshotView> feeders, std::span<const DispatchUnit> units,
                                              std::span<const double> unit_q_kvar, std::span<const DispatchShunt> shunts,
                                              std::span<const int> shunt_on) {
    std::vector<Eigen::VectorXd> v;
    v.reserve(feeders.size());
    for (const auto& f : feeders) v.push_back(f.v_now);
    for (std::size_t i = 0; i < units.size(); ++i) {
        const auto& f = feeders[units[i].feeder];
        const double dq = unit_q_kvar[i] - units[i].applied_kvar;
        if (dq != 0.0) v[units[i].feeder] += f.vsm->dv_dq.col(units[i].vsm_column) * (dq / f.base_kva);
    }
    for (std::size_t s = 0; s < shunts.size(); ++s) {
        const auto& f = feeders[shunts[s].feeder];
        const double dq = double(shunt_on[s] - shunts[s].on) * shunts[s].kvar_per_block;
        if (dq != 0.0) v[shunts[s].feeder] += f.vsm->dv_dq.col(shunts[s].vsm_column) * (dq / f.base_kva);
    }
    return v;
}

DispatchPlan distribution_vvc(double q_req_kvar, std::span<const FeederSnapshotView> feeders,
                              std::span<const DispatchUnit> units, std::span<const DispatchShunt> shunts,
                              const VoltageBand& band) {
    constexpr double kSlack = 1e-9;
    DispatchPlan plan;
    plan.order = effectiveness_order(feeders, units);
    plan.unit_q_kvar.assign(units.size(), 0.0);
    for (const auto& s : shunts) plan.shunt_on.push_back(s.on);

    const double sign = q_req_kvar < 0.0 ? -1.0 : 1.0;
    double remaining = std::abs(q_req_kvar);
    for (auto i : plan.order) {
        const double take = std::min(remaining, units[i].q_limit_kvar);
        plan.unit_q_kvar[i] = sign * take;
        remaining -= take;
    }
    plan.shortfall_kvar = remaining;

    const std::size_t max_steps = 4 * units.size() + 4 * shunts.size() + 8 +
                                  std::accumulate(shunts.begin(), shunts.end(), std::size_t{0},
                                                  [](std::size_t acc, const DispatchShunt& s) { return acc + std::size_t(s.blocks); });
    for (std::size_t step = 0; step < max_steps; ++step) {
        const auto v = predict_voltages(feeders, units, plan.unit_q_kvar, shunts, plan.shunt_on);
        std::size_t worst_feeder = 0;
        Eigen::Index worst_node = -1;
        double worst = kSlack;
        for (std::size_t f = 0; f < v.size(); ++f)
            for (Eigen::Index n = 0; n < v[f].size(); ++n) {
                const double excess = std::max(v[f](n) - band.upper, band.lower - v[f](n));
                if (excess > worst) {
                    worst = excess;
                    worst_feeder = f;
                    worst_node = n;
                }
            }
        if (worst_node < 0) {
            plan.band_violation = false;
            return plan;
        }
        const bool over = v[worst_feeder](worst_node) > band.upper;
        const auto& fv = feeders[worst_feeder];

        // Most effective unit pushing the node the wrong way, by sensitivity at that node.
        std::ptrdiff_t pick = -1;
        double pick_sens = 0.0;
        for (std::size_t i = 0; i < units.size(); ++i) {
            if (units[i].feeder != worst_feeder) continue;
            const double q = plan.unit_q_kvar[i];
            if (over ? q <= 0.0 : q >= 0.0) continue;
            const double sens = column_value(fv, worst_node, units[i].vsm_column);
            if (sens <= 0.0) continue;
            if (pick < 0 || sens > pick_sens || (sens == pick_sens && units[i].id < units[std::size_t(pick)].id)) {
                pick = std::ptrdiff_t(i);
                pick_sens = sens;
            }
        }
        if (pick >= 0) {
            auto& q = plan.unit_q_kvar[std::size_t(pick)];
            const double cut = std::min(worst / pick_sens, std::abs(q));
            q -= (q > 0.0 ? cut : -cut);
            plan.shortfall_kvar += cut;
            continue;
        }

        std::ptrdiff_t shunt_pick = -1;
        double shunt_sens = 0.0;
        for (std::size_t s = 0; s < shunts.size(); ++s) {
            if (shunts[s].feeder != worst_feeder) continue;
            if (over ? plan.shunt_on[s] == 0 : plan.shunt_on[s] == shunts[s].blocks) continue;
            const double sens = column_value(fv, worst_node, shunts[s].vsm_column);
            if (sens <= 0.0) continue;
            if (shunt_pick < 0 || sens > shunt_sens || (sens == shunt_sens && shunts[s].id < shunts[std::size_t(shunt_pick)].id)) {
                shunt_pick = std::ptrdiff_t(s);
                shunt_sens = sens;
            }
        }
        if (shunt_pick >= 0) {
            plan.shunt_on[std::size_t(shunt_pick)] += over ? -1 : 1;
            continue;
        }
        plan.band_violation = true;
        return plan;
    }
    plan.band_violation = true;
    return plan;
}

}  // namespace hilfed
