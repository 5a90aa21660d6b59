#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hilfed/grid_model.hpp"
#include "hilfed/inverter.hpp"
#include "hilfed/powerflow.hpp"

namespace hilfed {

struct DerEnvelope {
    double pv_p_curtail_max = 0;  // kW
    double pv_q_max = 0;          // kVAR
    double pv_q_min = 0;          // kVAR
    double dr_p_max = 0;          // kW
    double dr_p_min = 0;          // kW
    double losses = 0;            // kW

    bool operator==(const DerEnvelope&) const = default;
};

struct PvUnit {
    std::string id;
    InverterParams params;
    double p_out_kw = 0.0;
};

struct DrCapacity {
    double p_max_kw = 0.0;
    double p_min_kw = 0.0;
};

/// Reactive range is the sum of k*S over all units; curtailable P is their current output.
DerEnvelope compute_der_envelope(std::span<const PvUnit> pvs, const DrCapacity& dr, std::span<const FeederAggregate> feeders);

struct VoltageBand {
    double lower = 0.95;
    double upper = 1.05;
    [[nodiscard]] bool contains(double v) const { return v >= lower && v <= upper; }
};

// ---------------------------------------------------------------------------
// Transmission side

struct TransmissionVvcSettings {
    std::string boundary_bus;
    double v_target = 1.0;
    VoltageBand band;
    double generator_step_pu = 0.005;  // largest v_set change per interval
    double perturbation_mvar = 1.0;    // boundary injection used to measure sensitivity
};

struct TransmissionPlan {
    std::vector<double> generator_v_set;  // per generator, model order
    double q_req_kvar = 0.0;              // positive = feeders inject
    double p_curtail_kw = 0.0;
    double boundary_v = 0.0;
    double s_vq = 0.0;  // boundary p.u. volts per kVAR injected
    double s_vp = 0.0;  // boundary p.u. volts per kW injected
};

/// Integral Volt-VAR step at the boundary bus. `model` carries the generator
/// set points in force; `boundary_loads` the aggregate feeder demand; `q_prev_kvar`
/// the previous request.
TransmissionPlan transmission_vvc(const GridModel& model, std::span<const BusLoad> boundary_loads, const PhasorState& state,
                                  const DerEnvelope& envelope, double q_prev_kvar, const TransmissionVvcSettings& settings);

// ---------------------------------------------------------------------------
// Distribution side

/// One feeder's view at the start of an interval.
struct FeederSnapshotView {
    const Vsm* vsm = nullptr;
    Eigen::VectorXd v_now;  // |V| of vsm->nodes
    double base_kva = 1000.0;
};

struct DispatchUnit {
    std::string id;
    std::size_t feeder = 0;
    Eigen::Index vsm_column = 0;
    double q_limit_kvar = 0.0;  // k*S; setpoints live in [-limit, limit]
    double applied_kvar = 0.0;  // setpoint in force when the snapshot was taken
};

struct DispatchShunt {
    std::string id;
    std::size_t feeder = 0;
    Eigen::Index vsm_column = 0;
    double kvar_per_block = 0.0;
    int blocks = 0;
    int on = 0;
};

struct DispatchPlan {
    std::vector<double> unit_q_kvar;  // per unit, input order
    std::vector<int> shunt_on;        // per shunt, input order
    double dr_p_kw = 0.0;
    double shortfall_kvar = 0.0;      // request left unallocated
    bool band_violation = false;      // best-effort plan still predicts an excursion
    std::vector<std::size_t> order;   // allocation order (unit indices)
};

/// Unit indices by descending Q-column norm (per kVAR), ties by id.
std::vector<std::size_t> effectiveness_order(std::span<const FeederSnapshotView> feeders, std::span<const DispatchUnit> units);

/// Greedy allocation of `q_req_kvar` followed by a band check on the linear
/// prediction V + Vsm * dq.
DispatchPlan distribution_vvc(double q_req_kvar, std::span<const FeederSnapshotView> feeders,
                              std::span<const DispatchUnit> units, std::span<const DispatchShunt> shunts,
                              const VoltageBand& band);

/// Predicted |V| per feeder node for a candidate plan.
std::vector<Eigen::VectorXd> predict_voltages(std::span<const FeederSnapshotView> feeders, std::span<const DispatchUnit> units,
                                              std::span<const double> unit_q_kvar, std::span<const DispatchShunt> shunts,
                                              std::span<const int> shunt_on);

}  // namespace hilfed
