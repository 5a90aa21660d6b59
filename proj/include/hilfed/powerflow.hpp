#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hilfed/grid_model.hpp"

namespace hilfed {

/// Per-phase phasor indexed by Phase. Entries for phases a bus lacks are zero.
/// Positive-sequence (transmission) quantities live in entry 0.
using PhaseVector = Eigen::Vector3cd;

struct PhasorState {
    std::vector<PhaseVector> voltage;         // per bus, p.u.
    std::vector<PhaseVector> branch_current;  // per branch, from -> to, p.u.
    PhaseVector source_current = PhaseVector::Zero();  // drawn from the slack source
    int iterations = 0;
    bool converged = false;
    double max_mismatch = 0.0;

    // Transmission only.
    std::vector<double> generator_q_mvar;      // per generator, in model order
    std::vector<std::size_t> demoted_pv_buses;  // pv buses that hit a reactive limit
};

/// Generation-positive injection at a bus, split evenly over `phases`.
struct PointInjection {
    std::string bus;
    PhaseSet phases;
    double p_kw = 0.0;
    double q_kvar = 0.0;
};

/// Operating point of a feeder. Empty vectors fall back to the model's defaults:
/// loads at rating, solar at zero output, shunts at their initial block count.
struct FeederInputs {
    std::vector<std::complex<double>> load_demand_kva;  // per load, at nominal voltage
    std::vector<std::complex<double>> solar_kva;        // per farm, generation-positive
    std::vector<int> shunt_blocks_on;                   // per shunt
    std::vector<PointInjection> extra;
};

struct SweepOptions {
    double tolerance = 1e-8;
    int max_iterations = 100;
};

/// ZIP law: constant power keeps `rated`, constant current scales with |v|,
/// constant impedance with |v|^2. Throws SolverError when |v| == 0.
std::complex<double> evaluate_zip(LoadKind kind, std::complex<double> rated, std::complex<double> v);

/// Three-phase positive-sequence voltage with phase `a` at `angle_deg`.
PhaseVector balanced_voltage(double magnitude, double angle_deg);

/// Backward/forward sweep on a radial feeder whose slack bus is the head.
///
/// Returns a state flagged non-converged when the iteration cap is reached.
/// Throws ModelError for a non-radial model and SolverError when a head
/// voltage magnitude lies outside (0.5, 1.5) p.u.
PhasorState solve_feeder(const GridModel& model, const PhaseVector& head_voltage, const FeederInputs& inputs = {},
                         const SweepOptions& options = {});

struct FeederAggregate {
    double p_total_kw = 0.0;
    double q_total_kvar = 0.0;
    double losses_kw = 0.0;
    double reactive_losses_kvar = 0.0;
    double sim_time_s = 0.0;
};

/// Power entering the feeder head and series losses. Throws SolverError on a
/// non-converged state.
FeederAggregate feeder_aggregate(const PhasorState& state, const GridModel& model, double sim_time_s = 0.0);

/// Extra consumption at a transmission bus (e.g. an aggregated feeder group).
struct BusLoad {
    std::string bus;
    double p_mw = 0.0;
    double q_mvar = 0.0;
};

struct NewtonOptions {
    double tolerance = 1e-8;
    int max_iterations = 30;
    bool enforce_q_limits = true;
};

/// Balanced positive-sequence Newton-Raphson in polar form.
///
/// Three-phase branch matrices reduce to z1 = mean(self) - mean(mutual). Shunts
/// enter the bus admittance as constant susceptance; `solar` entries are not
/// applied here (pass their output through `extra_loads`). Pv buses whose
/// reactive output leaves [q_min, q_max] are pinned at the violated limit and
/// solved as pq. Throws SolverError on a singular Jacobian; reaching the
/// iteration cap returns a state flagged non-converged.
PhasorState solve_transmission(const GridModel& model, std::span<const BusLoad> extra_loads = {},
                               const NewtonOptions& options = {});

/// Positive-sequence equivalent of a branch impedance matrix.
std::complex<double> positive_sequence_impedance(const Eigen::MatrixXcd& z);

// ---------------------------------------------------------------------------
// Voltage sensitivity

struct NodeRef {
    std::size_t bus = 0;
    Phase phase = Phase::a;

    bool operator==(const NodeRef&) const = default;
};

/// Every (bus, phase) pair present in the model, in bus order.
std::vector<NodeRef> all_nodes(const GridModel& model);

/// Controllable injection point. Perturbations split evenly over `phases`.
struct Actuator {
    std::string id;
    std::string bus;
    PhaseSet phases;
};

struct Vsm {
    std::vector<NodeRef> nodes;
    std::vector<std::string> actuators;
    Eigen::MatrixXd dv_dq;    // d|V_node| / dQ_actuator, p.u. per p.u.
    Eigen::MatrixXd dv_dp;    // d|V_node| / dP_actuator, p.u. per p.u.
    std::vector<bool> valid;  // false when the perturbed re-solve failed; column is zero

    /// Euclidean norm of the Q column.
    [[nodiscard]] double q_effectiveness(Eigen::Index actuator) const { return dv_dq.col(actuator).norm(); }
};

/// Forward-difference sensitivities: one re-solve per actuator and direction with
/// an injection of `perturbation_pu` (on the model base) added at the actuator.
Vsm compute_vsm(const GridModel& model, const PhaseVector& head_voltage, const FeederInputs& inputs,
                const PhasorState& state, std::span<const NodeRef> monitored, std::span<const Actuator> actuators,
                double perturbation_pu = 0.01, const SweepOptions& options = {});

}  // namespace hilfed
