#include <cmath>
#include <numbers>

#include "hilfed/error.hpp"
#include "hilfed/powerflow.hpp"

namespace hilfed {

namespace {

constexpr double kMinVoltage = 1e-6;

struct Topology {
    std::vector<std::size_t> order;            // breadth-first from the head
    std::vector<std::ptrdiff_t> parent_branch;  // -1 at the head
    std::vector<std::size_t> parent_bus;
    std::vector<Eigen::Matrix3cd> z;            // per branch, embedded in 3x3
};

Topology build_topology(const GridModel& m) {
    check_radial(m);
    const auto n = m.buses.size();
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);  // (neighbor, branch)
    Topology topo;
    topo.z.reserve(m.branches.size());
    for (std::size_t k = 0; k < m.branches.size(); ++k) {
        const auto& br = m.branches[k];
        const auto f = m.require_bus(br.from_bus);
        const auto t = m.require_bus(br.to_bus);
        adj[f].emplace_back(t, k);
        adj[t].emplace_back(f, k);
        Eigen::Matrix3cd z = Eigen::Matrix3cd::Zero();
        const auto ph = br.phases.phases();
        for (std::size_t i = 0; i < ph.size(); ++i)
            for (std::size_t j = 0; j < ph.size(); ++j) z(int(ph[i]), int(ph[j])) = br.z(Eigen::Index(i), Eigen::Index(j));
        topo.z.push_back(z);
    }
    const auto head = m.slack_index();
    topo.parent_branch.assign(n, -1);
    topo.parent_bus.assign(n, head);
    std::vector<bool> seen(n, false);
    seen[head] = true;
    topo.order.push_back(head);
    for (std::size_t i = 0; i < topo.order.size(); ++i) {
        const auto bus = topo.order[i];
        for (auto [next, k] : adj[bus]) {
            if (seen[next]) continue;
            seen[next] = true;
            topo.parent_branch[next] = std::ptrdiff_t(k);
            topo.parent_bus[next] = bus;
            if (!m.buses[next].phases.subset_of(m.branches[k].phases))
                throw ModelError(ModelErrorKind::phase_mismatch,
                                 "bus \"" + m.buses[next].id + "\" has phases its supply branch does not carry");
            topo.order.push_back(next);
        }
    }
    return topo;
}

/// Per-phase consumption element evaluated with the ZIP law at the local voltage.
struct Element {
    std::size_t bus;
    PhaseSet phases;
    LoadKind kind;
    std::complex<double> s_per_phase;  // consumption-positive, p.u.
};

std::vector<Element> build_elements(const GridModel& m, const FeederInputs& in) {
    const double base = m.base_kva();
    std::vector<Element> out;
    for (std::size_t i = 0; i < m.loads.size(); ++i) {
        const auto& ld = m.loads[i];
        const auto demand = i < in.load_demand_kva.size() ? in.load_demand_kva[i]
                                                          : std::complex<double>{ld.rated_p_kw, ld.rated_q_kvar};
        out.push_back({m.require_bus(ld.bus), ld.phases, ld.kind, demand / base / double(ld.phases.count())});
    }
    for (std::size_t i = 0; i < m.shunts.size(); ++i) {
        const auto& sh = m.shunts[i];
        const int on = i < in.shunt_blocks_on.size() ? in.shunt_blocks_on[i] : sh.initial_on;
        if (on == 0) continue;
        const std::complex<double> s{0.0, -sh.kvar_per_block * on};
        out.push_back({m.require_bus(sh.bus), sh.phases, LoadKind::constant_impedance, s / base / double(sh.phases.count())});
    }
    for (std::size_t i = 0; i < m.solar.size() && i < in.solar_kva.size(); ++i) {
        const auto& s = m.solar[i];
        out.push_back({m.require_bus(s.bus), PhaseSet::all(), LoadKind::constant_power, -in.solar_kva[i] / base / 3.0});
    }
    for (const auto& inj : in.extra) {
        const std::complex<double> s{inj.p_kw, inj.q_kvar};
        const auto bus = m.require_bus(inj.bus);
        if (!inj.phases.subset_of(m.buses[bus].phases))
            throw ModelError(ModelErrorKind::phase_mismatch, "injection phases not present on bus \"" + inj.bus + "\"");
        out.push_back({bus, inj.phases, LoadKind::constant_power, -s / base / double(inj.phases.count())});
    }
    return out;
}

}  // namespace

std::complex<double> evaluate_zip(LoadKind kind, std::complex<double> rated, std::complex<double> v) {
    const double mag = std::abs(v);
    if (mag == 0.0) throw SolverError("ZIP load evaluated at zero voltage");
    switch (kind) {
    case LoadKind::constant_power: return rated;
    case LoadKind::constant_current: return rated * mag;
    case LoadKind::constant_impedance: return rated * (mag * mag);
    }
    return rated;
}

PhaseVector balanced_voltage(double magnitude, double angle_deg) {
    const double rad = angle_deg * std::numbers::pi / 180.0;
    const double shift = 2.0 * std::numbers::pi / 3.0;
    return {std::polar(magnitude, rad), std::polar(magnitude, rad - shift), std::polar(magnitude, rad + shift)};
}

PhasorState solve_feeder(const GridModel& m, const PhaseVector& head_voltage, const FeederInputs& inputs,
                         const SweepOptions& options) {
    const auto topo = build_topology(m);
    const auto head = topo.order.front();
    const auto head_phases = m.buses[head].phases;
    for (Phase p : head_phases.phases()) {
        const double mag = std::abs(head_voltage(int(p)));
        if (!(mag > 0.5 && mag < 1.5)) throw SolverError("feeder head voltage outside (0.5, 1.5) p.u.");
    }
    const auto elements = build_elements(m, inputs);

    const auto n = m.buses.size();
    PhasorState st;
    st.voltage.assign(n, PhaseVector::Zero());
    for (std::size_t b = 0; b < n; ++b)
        for (Phase p : m.buses[b].phases.phases()) st.voltage[b](int(p)) = head_voltage(int(p));
    st.branch_current.assign(m.branches.size(), PhaseVector::Zero());

    std::vector<PhaseVector> bus_current(n);
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        st.iterations = iter;
        for (auto& c : bus_current) c.setZero();
        bool collapsed = false;
        for (const auto& e : elements) {
            for (Phase p : e.phases.phases()) {
                const auto v = st.voltage[e.bus](int(p));
                if (std::abs(v) < kMinVoltage) {
                    collapsed = true;
                    continue;
                }
                bus_current[e.bus](int(p)) += std::conj(evaluate_zip(e.kind, e.s_per_phase, v) / v);
            }
        }
        if (collapsed) {
            st.converged = false;
            return st;
        }

        // Backward: accumulate branch currents from the leaves.
        std::vector<PhaseVector> downstream = bus_current;
        for (auto it = topo.order.rbegin(); it != topo.order.rend(); ++it) {
            const auto bus = *it;
            const auto k = topo.parent_branch[bus];
            if (k < 0) continue;
            st.branch_current[std::size_t(k)] = downstream[bus];
            downstream[topo.parent_bus[bus]] += downstream[bus];
        }
        st.source_current = downstream[head];

        // Forward: voltage drops from the head.
        double change = 0.0;
        for (std::size_t i = 1; i < topo.order.size(); ++i) {
            const auto bus = topo.order[i];
            const auto k = std::size_t(topo.parent_branch[bus]);
            PhaseVector v = st.voltage[topo.parent_bus[bus]] - topo.z[k] * st.branch_current[k];
            for (Phase p : {Phase::a, Phase::b, Phase::c})
                if (!m.buses[bus].phases.contains(p)) v(int(p)) = 0.0;
            change = std::max(change, (v - st.voltage[bus]).cwiseAbs().maxCoeff());
            st.voltage[bus] = v;
        }
        st.max_mismatch = change;
        if (change < options.tolerance) {
            st.converged = true;
            break;
        }
    }

    // Refresh currents at the final voltages so flows and losses are consistent with them.
    if (st.converged) {
        for (auto& c : bus_current) c.setZero();
        for (const auto& e : elements)
            for (Phase p : e.phases.phases()) {
                const auto v = st.voltage[e.bus](int(p));
                bus_current[e.bus](int(p)) += std::conj(evaluate_zip(e.kind, e.s_per_phase, v) / v);
            }
        std::vector<PhaseVector> downstream = bus_current;
        for (auto it = topo.order.rbegin(); it != topo.order.rend(); ++it) {
            const auto k = topo.parent_branch[*it];
            if (k < 0) continue;
            st.branch_current[std::size_t(k)] = downstream[*it];
            downstream[topo.parent_bus[*it]] += downstream[*it];
        }
        st.source_current = downstream[head];
    }
    return st;
}

FeederAggregate feeder_aggregate(const PhasorState& state, const GridModel& m, double sim_time_s) {
    if (!state.converged) throw SolverError("feeder aggregate requested for a non-converged state");
    const auto head = m.slack_index();
    const double base = m.base_kva();
    std::complex<double> head_power{};
    for (int p = 0; p < 3; ++p) head_power += state.voltage[head](p) * std::conj(state.source_current(p));

    std::complex<double> loss{};
    for (std::size_t k = 0; k < m.branches.size(); ++k) {
        const auto& br = m.branches[k];
        const auto ph = br.phases.phases();
        Eigen::VectorXcd j(Eigen::Index(ph.size()));
        for (std::size_t i = 0; i < ph.size(); ++i) j(Eigen::Index(i)) = state.branch_current[k](int(ph[i]));
        loss += (j.adjoint() * br.z * j)(0, 0);
    }
    return {head_power.real() * base, head_power.imag() * base, std::max(0.0, loss.real()) * base, loss.imag() * base,
            sim_time_s};
}

std::vector<NodeRef> all_nodes(const GridModel& m) {
    std::vector<NodeRef> out;
    for (std::size_t b = 0; b < m.buses.size(); ++b)
        for (Phase p : m.buses[b].phases.phases()) out.push_back({b, p});
    return out;
}

Vsm compute_vsm(const GridModel& m, const PhaseVector& head_voltage, const FeederInputs& inputs, const PhasorState& state,
                std::span<const NodeRef> monitored, std::span<const Actuator> actuators, double perturbation_pu,
                const SweepOptions& options) {
    if (!state.converged) throw SolverError("sensitivities requested for a non-converged state");
    if (!(perturbation_pu > 0.0)) throw SolverError("perturbation must be positive");

    Vsm vsm;
    vsm.nodes.assign(monitored.begin(), monitored.end());
    const auto rows = Eigen::Index(monitored.size());
    const auto cols = Eigen::Index(actuators.size());
    vsm.dv_dq = Eigen::MatrixXd::Zero(rows, cols);
    vsm.dv_dp = Eigen::MatrixXd::Zero(rows, cols);
    vsm.valid.assign(actuators.size(), true);

    const double delta_kva = perturbation_pu * m.base_kva();
    for (Eigen::Index a = 0; a < cols; ++a) {
        const auto& act = actuators[std::size_t(a)];
        vsm.actuators.push_back(act.id);
        for (int direction = 0; direction < 2; ++direction) {
            FeederInputs perturbed = inputs;
            perturbed.extra.push_back({act.bus, act.phases, direction == 0 ? 0.0 : delta_kva, direction == 0 ? delta_kva : 0.0});
            const auto moved = solve_feeder(m, head_voltage, perturbed, options);
            if (!moved.converged) {
                vsm.valid[std::size_t(a)] = false;
                vsm.dv_dq.col(a).setZero();
                vsm.dv_dp.col(a).setZero();
                break;
            }
            auto& target = direction == 0 ? vsm.dv_dq : vsm.dv_dp;
            for (Eigen::Index r = 0; r < rows; ++r) {
                const auto& node = monitored[std::size_t(r)];
                const double before = std::abs(state.voltage[node.bus](int(node.phase)));
                const double after = std::abs(moved.voltage[node.bus](int(node.phase)));
                target(r, a) = (after - before) / perturbation_pu;
            }
        }
    }
    return vsm;
}

}  // namespace hilfed
