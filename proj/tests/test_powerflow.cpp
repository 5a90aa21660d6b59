#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "hilfed/error.hpp"
#include "hilfed/grid_io.hpp"
#include "hilfed/powerflow.hpp"
#include "support/energy_balance.hpp"
#include "support/nodal_oracle.hpp"
#include "support/random_feeder.hpp"

using namespace hilfed;
using cd = std::complex<double>;

namespace {

// Frozen from the fixed-point iteration V2 <- 1 - z * conj(S / V2), z = 0.01 + j0.02,
// S = 1 + j0.5, iterated to 1e-15 (and with S scaled by |V2|^2 for the impedance load).
constexpr double kTwoBusConstantPowerV2 = 0.9794633817645174;
constexpr double kTwoBusConstantImpedanceV2 = 0.9802861627917436;

GridModel two_bus(LoadKind kind, double p_kw = 1000.0, double q_kvar = 500.0) {
    return parse_grid_file("[buses]\nS,a,4.16,slack\nL,a,4.16,pq\n[branches]\nS,L,0.01,0.02\n[loads]\nld,L,a," +
                           std::string(to_string(kind)) + "," + std::to_string(p_kw) + "," + std::to_string(q_kvar) + "\n");
}

const PhaseVector kUnitHead = balanced_voltage(1.0, 0.0);

GridModel three_bus_transmission(double load_mw = 80.0, double load_mvar = 30.0, double q_max = 30.0) {
    return parse_grid_file(
        "[system]\nbase_mva,100\n"
        "[buses]\nB1,a,138,slack\nB2,a,138,pv\nB3,a,138,pq\n"
        "[branches]\nB1,B2,0.01,0.05\nB2,B3,0.02,0.08\nB1,B3,0.015,0.06\n"
        "[loads]\nL3,B3,a,constant_power," +
        std::to_string(load_mw * 1000.0) + "," + std::to_string(load_mvar * 1000.0) +
        "\n"
        "[generators]\nB1,,1.02,-100,100\nB2,50,1.01,-30," +
        std::to_string(q_max) + "\n");
}

}  // namespace

TEST_CASE("evaluate_zip") {
    const cd rated{0.8, 0.3};
    const cd v = std::polar(0.9, -2.0 * std::numbers::pi / 180.0);
    CHECK(evaluate_zip(LoadKind::constant_power, rated, v) == rated);
    const cd z = evaluate_zip(LoadKind::constant_impedance, rated, cd{0.95, 0.0});
    CHECK(z.real() == doctest::Approx(0.9025 * 0.8).epsilon(1e-14));
    CHECK(z.imag() == doctest::Approx(0.9025 * 0.3).epsilon(1e-14));
    CHECK(evaluate_zip(LoadKind::constant_current, rated, cd{1.0, 0.0}) == rated);
    const cd i = evaluate_zip(LoadKind::constant_current, rated, std::polar(0.97, 0.3));
    CHECK(std::arg(i) == doctest::Approx(std::arg(rated)));  // power factor preserved
    CHECK_THROWS_AS(evaluate_zip(LoadKind::constant_power, rated, cd{}), SolverError);
}

TEST_CASE("zero-load feeder holds the head voltage") {
    auto m = two_bus(LoadKind::constant_power, 0.0, 0.0);
    const auto st = solve_feeder(m, kUnitHead);
    REQUIRE(st.converged);
    CHECK(std::abs(st.voltage[1](0) - cd{1.0, 0.0}) < 1e-15);
    const auto agg = feeder_aggregate(st, m);
    CHECK(agg.p_total_kw == 0.0);
    CHECK(agg.q_total_kvar == 0.0);
    CHECK(agg.losses_kw == 0.0);
}

TEST_CASE("two-bus constant-power feeder matches the fixed-point oracle") {
    const auto m = two_bus(LoadKind::constant_power);
    const auto st = solve_feeder(m, kUnitHead);
    REQUIRE(st.converged);
    const double v2 = std::abs(st.voltage[1](0));
    CHECK(std::abs(v2 - kTwoBusConstantPowerV2) < 1e-4);
    CHECK(std::abs(v2 - kTwoBusConstantPowerV2) < 1e-8);
    CHECK(std::abs(v2 - 0.9795) < 1e-4);

    const auto agg = feeder_aggregate(st, m);
    const double i2 = std::norm(st.branch_current[0](0));
    CHECK(agg.losses_kw == doctest::Approx(i2 * 0.01 * 1000.0).epsilon(1e-12));
    CHECK(agg.p_total_kw == doctest::Approx(1000.0 + agg.losses_kw).epsilon(1e-9));
    CHECK(agg.q_total_kvar == doctest::Approx(500.0 + i2 * 0.02 * 1000.0).epsilon(1e-9));
}

TEST_CASE("two-bus constant-impedance load obeys the ZIP law at the solution") {
    const auto m = two_bus(LoadKind::constant_impedance);
    const auto st = solve_feeder(m, kUnitHead);
    REQUIRE(st.converged);
    const cd v2 = st.voltage[1](0);
    CHECK(std::abs(v2) == doctest::Approx(kTwoBusConstantImpedanceV2).epsilon(1e-9));
    const cd drawn = v2 * std::conj(st.branch_current[0](0));
    CHECK(std::abs(drawn - cd{1.0, 0.5} * std::norm(v2)) < 1e-9);
}

TEST_CASE("solar beyond load reverses the head flow") {
    const auto m = parse_grid_file(
        "[buses]\nS,abc,4.16,slack\nF,abc,4.16,pq\n[branches]\n"
        "S,F,0.01,0.02,0.002,0.004,0.002,0.004,0.01,0.02,0.002,0.004,0.01,0.02\n"
        "[loads]\nld,F,abc,constant_power,300,100\n[solar]\npv,F,1000,sun\n");
    FeederInputs in;
    in.solar_kva = {cd{800.0, 0.0}};
    const auto st = solve_feeder(m, kUnitHead, in);
    REQUIRE(st.converged);
    const auto agg = feeder_aggregate(st, m);
    CHECK(agg.p_total_kw < 0.0);
    CHECK(std::abs(st.voltage[1](0)) > 1.0);
}

TEST_CASE("sweep agrees with the dense nodal oracle on random radial feeders") {
    std::mt19937_64 rng(20240601);
    for (int trial = 0; trial < 120; ++trial) {
        const auto m = testgen::random_radial_feeder(rng);
        const auto head = balanced_voltage(0.98 + 0.04 * double(rng() % 100) / 100.0, double(rng() % 20) - 10.0);
        const auto st = solve_feeder(m, head);
        REQUIRE(st.converged);
        const auto ref = oracle::solve_feeder_nodal(m, head);
        double worst = 0.0;
        for (std::size_t b = 0; b < m.buses.size(); ++b) worst = std::max(worst, (st.voltage[b] - ref[b]).cwiseAbs().maxCoeff());
        CHECK(worst < 1e-6);

        const auto agg = feeder_aggregate(st, m);
        const cd demand = oracle::net_demand(m, st);
        const double base = m.base_kva();
        CHECK(std::abs(agg.p_total_kw / base - (demand.real() + agg.losses_kw / base)) < 1e-6);
        CHECK(std::abs(agg.q_total_kvar / base - (demand.imag() + agg.reactive_losses_kvar / base)) < 1e-6);
        CHECK(agg.losses_kw >= 0.0);
    }
}

TEST_CASE("feeder error paths") {
    const auto m = two_bus(LoadKind::constant_power);
    CHECK_THROWS_AS(solve_feeder(m, balanced_voltage(0.4, 0.0)), SolverError);
    CHECK_THROWS_AS(solve_feeder(m, balanced_voltage(1.6, 0.0)), SolverError);

    auto heavy = two_bus(LoadKind::constant_power, 1000.0, 500.0);
    const auto capped = solve_feeder(heavy, kUnitHead, {}, {.tolerance = 1e-8, .max_iterations = 2});
    CHECK_FALSE(capped.converged);
    CHECK_THROWS_AS(feeder_aggregate(capped, heavy), SolverError);

    // Far beyond the nose of the PV curve: iteration cap, flagged rather than thrown.
    auto collapse = two_bus(LoadKind::constant_power, 20000.0, 10000.0);
    CHECK_FALSE(solve_feeder(collapse, kUnitHead).converged);

    GridModel loop = m;
    loop.buses.push_back({"X", PhaseSet::single(Phase::a), 4.16, BusKind::pq});
    Eigen::MatrixXcd z(1, 1);
    z(0, 0) = {0.01, 0.02};
    loop.branches.push_back({"L", "X", PhaseSet::single(Phase::a), z});
    loop.branches.push_back({"X", "S", PhaseSet::single(Phase::a), z});
    CHECK_THROWS_AS(solve_feeder(loop, kUnitHead), ModelError);
}

TEST_CASE("transmission flat start with no load") {
    auto m = three_bus_transmission(0.0, 0.0);
    m.generators[1].p_set_mw = 0.0;
    m.generators[0].v_set = 1.0;
    m.generators[1].v_set = 1.0;
    const auto st = solve_transmission(m);
    REQUIRE(st.converged);
    for (const auto& v : st.voltage) CHECK(std::abs(v(0) - cd{1.0, 0.0}) < 1e-8);
}

TEST_CASE("transmission Newton-Raphson matches the nodal oracle") {
    const auto m = three_bus_transmission();
    const auto st = solve_transmission(m);
    REQUIRE(st.converged);
    CHECK(st.demoted_pv_buses.empty());
    const auto ref = oracle::solve_transmission_nodal(m);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(st.voltage[i](0) - ref[i]) < 1e-8);
    CHECK(std::abs(st.voltage[1](0)) == doctest::Approx(1.01).epsilon(1e-12));
    CHECK(st.max_mismatch < 1e-8);

    // Boundary override adds to the bus load.
    const std::vector<BusLoad> boundary = {{"B3", 10.0, 5.0}};
    const auto loaded = solve_transmission(m, boundary);
    auto m2 = three_bus_transmission(90.0, 35.0);
    const auto ref2 = oracle::solve_transmission_nodal(m2);
    for (std::size_t i = 0; i < ref2.size(); ++i) CHECK(std::abs(loaded.voltage[i](0) - ref2[i]) < 1e-8);
}

TEST_CASE("pv bus reactive limit pins output and lets the voltage sag") {
    // Step the pq load until the generator at B2 would exceed q_max = 20 MVAr.
    double mvar = 30.0;
    PhasorState st;
    GridModel m;
    for (; mvar < 400.0; mvar += 10.0) {
        m = three_bus_transmission(80.0, mvar, 20.0);
        st = solve_transmission(m);
        REQUIRE(st.converged);
        if (!st.demoted_pv_buses.empty()) break;
    }
    REQUIRE_FALSE(st.demoted_pv_buses.empty());
    CHECK(st.demoted_pv_buses.front() == 1);
    CHECK(st.generator_q_mvar[1] == doctest::Approx(20.0));
    CHECK(std::abs(st.voltage[1](0)) < 1.01);

    const auto ref = oracle::solve_transmission_nodal(m, {{"B2", 20.0}});
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(st.voltage[i](0) - ref[i]) < 1e-8);

    NewtonOptions no_limits;
    no_limits.enforce_q_limits = false;
    const auto unconstrained = solve_transmission(m, {}, no_limits);
    CHECK(unconstrained.generator_q_mvar[1] > 20.0);
}

TEST_CASE("transmission singular Jacobian is an error") {
    auto m = three_bus_transmission();
    m.buses.push_back({"B4", PhaseSet::single(Phase::a), 138.0, BusKind::pq});  // islanded
    CHECK_THROWS_AS(solve_transmission(m), SolverError);
}

TEST_CASE("positive-sequence reduction") {
    Eigen::MatrixXcd z(3, 3);
    z << cd{0.3, 0.9}, cd{0.1, 0.4}, cd{0.1, 0.4}, cd{0.1, 0.4}, cd{0.3, 0.9}, cd{0.1, 0.4}, cd{0.1, 0.4}, cd{0.1, 0.4},
        cd{0.3, 0.9};
    CHECK(std::abs(positive_sequence_impedance(z) - cd{0.2, 0.5}) < 1e-15);
}

TEST_CASE("vsm matches central differences on the two-bus feeder") {
    const auto m = two_bus(LoadKind::constant_power);
    const auto st = solve_feeder(m, kUnitHead);
    const auto nodes = all_nodes(m);
    const std::vector<Actuator> acts = {{"q2", "L", PhaseSet::single(Phase::a)}};
    const double delta = 0.01;
    const auto vsm = compute_vsm(m, kUnitHead, {}, st, nodes, acts, delta);
    REQUIRE(vsm.valid[0]);

    auto v_with = [&](double q_pu) {
        FeederInputs in;
        in.extra.push_back({"L", PhaseSet::single(Phase::a), 0.0, q_pu * m.base_kva()});
        return std::abs(solve_feeder(m, kUnitHead, in).voltage[1](0));
    };
    const double central = (v_with(delta / 2) - v_with(-delta / 2)) / delta;
    CHECK(central > 0.0);
    CHECK(std::abs(vsm.dv_dq(1, 0) - central) / central < 0.05);
    CHECK(vsm.dv_dq(0, 0) == 0.0);  // head node is held by the source
    CHECK(std::abs(vsm.dv_dq(1, 0) - 0.02 / std::abs(st.voltage[1](0))) / vsm.dv_dq(1, 0) < 0.1);
}

TEST_CASE("vsm on an ideal source bus is zero and downstream capacitive entries are positive") {
    const auto m = parse_grid_file(
        "[buses]\nA,abc,4.16,slack\nB,abc,4.16,pq\nC,abc,4.16,pq\n[branches]\n"
        "A,B,0.01,0.03,0.002,0.006,0.002,0.006,0.01,0.03,0.002,0.006,0.01,0.03\n"
        "B,C,0.01,0.03,0.002,0.006,0.002,0.006,0.01,0.03,0.002,0.006,0.01,0.03\n"
        "[loads]\nlb,B,abc,constant_power,200,80\nlc,C,abc,constant_current,150,60\n");
    const auto st = solve_feeder(m, kUnitHead);
    const auto nodes = all_nodes(m);
    const std::vector<Actuator> acts = {{"head", "A", PhaseSet::all()}, {"end", "C", PhaseSet::all()}};
    const auto vsm = compute_vsm(m, kUnitHead, {}, st, nodes, acts);
    CHECK(vsm.dv_dq.col(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(vsm.dv_dp.col(0).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t r = 0; r < nodes.size(); ++r)
        if (nodes[r].bus != 0) CHECK(vsm.dv_dq(Eigen::Index(r), 1) > 0.0);
    // Further from the source means more leverage.
    CHECK(vsm.dv_dq(6, 1) > vsm.dv_dq(3, 1));
}
