#include <doctest.h>

#include <cmath>
#include <random>

#include "hilfed/controllers.hpp"
#include "hilfed/grid_io.hpp"

using namespace hilfed;

namespace {

GridModel three_bus_transmission() {
    return parse_grid_file(
        "[system]\nbase_mva,100\n"
        "[buses]\nB1,a,138,slack\nB2,a,138,pv\nB3,a,138,pq\n"
        "[branches]\nB1,B2,0.01,0.05\nB2,B3,0.02,0.08\nB1,B3,0.015,0.06\n"
        "[loads]\nL3,B3,a,constant_power,80000,30000\n"
        "[generators]\nB1,,1.02,-100,100\nB2,50,1.01,-30,30\n");
}

Vsm hand_vsm(const Eigen::MatrixXd& dv_dq) {
    Vsm v;
    v.dv_dq = dv_dq;
    v.dv_dp = Eigen::MatrixXd::Zero(dv_dq.rows(), dv_dq.cols());
    v.valid.assign(std::size_t(dv_dq.cols()), true);
    for (Eigen::Index n = 0; n < dv_dq.rows(); ++n) v.nodes.push_back({std::size_t(n), Phase::a});
    for (Eigen::Index c = 0; c < dv_dq.cols(); ++c) v.actuators.push_back("a" + std::to_string(c));
    return v;
}

}  // namespace

TEST_CASE("der envelope") {
    CHECK(compute_der_envelope({}, {}, {}) == DerEnvelope{});

    const std::vector<PvUnit> one = {{"pv1", {1000.0, 1.1, 30.0}, 400.0}};
    const auto e1 = compute_der_envelope(one, {}, {});
    CHECK(e1.pv_q_max == doctest::Approx(1100.0));
    CHECK(e1.pv_q_min == doctest::Approx(-1100.0));
    CHECK(e1.pv_p_curtail_max == 400.0);

    const std::vector<PvUnit> two = {one[0], {"pv2", {1000.0, 1.1, 30.0}, 400.0}};
    const std::vector<FeederAggregate> feeders = {{0, 0, 12.5, 0, 0}, {0, 0, 7.5, 0, 0}};
    const auto e2 = compute_der_envelope(two, {300.0, -200.0}, feeders);
    CHECK(e2.pv_q_max == doctest::Approx(2 * e1.pv_q_max));
    CHECK(e2.pv_p_curtail_max == doctest::Approx(2 * e1.pv_p_curtail_max));
    CHECK(e2.dr_p_max == 300.0);
    CHECK(e2.dr_p_min == -200.0);
    CHECK(e2.losses == 20.0);
    CHECK_THROWS(compute_der_envelope({}, {-1.0, 1.0}, {}));
}

TEST_CASE("transmission vvc at target issues no request") {
    const auto m = three_bus_transmission();
    const auto st = solve_transmission(m);
    TransmissionVvcSettings s{"B3"};
    s.v_target = std::abs(st.voltage[2](0));
    const DerEnvelope env{0, 5000, -5000, 0, 0, 0};
    const auto plan = transmission_vvc(m, {}, st, env, 0.0, s);
    CHECK(plan.q_req_kvar == 0.0);
    CHECK(plan.s_vq > 0.0);
    CHECK(plan.p_curtail_kw == 0.0);
}

TEST_CASE("transmission vvc request closes the voltage error on re-solve") {
    const auto m = three_bus_transmission();
    const auto st = solve_transmission(m);
    const double v0 = std::abs(st.voltage[2](0));
    TransmissionVvcSettings s{"B3"};
    s.v_target = v0 + 0.002;
    const DerEnvelope env{0, 50000, -50000, 0, 0, 0};
    const auto plan = transmission_vvc(m, {}, st, env, 0.0, s);
    CHECK(plan.q_req_kvar > 0.0);
    const std::vector<BusLoad> injected = {{"B3", 0.0, -plan.q_req_kvar / 1000.0}};
    const double v1 = std::abs(solve_transmission(m, injected).voltage[2](0));
    CHECK(plan.q_req_kvar * plan.s_vq == doctest::Approx(0.002).epsilon(1e-9));
    CHECK(std::abs((v1 - v0) - 0.002) < 0.05 * 0.002);

    // Integral action: the previous request carries over.
    const auto held = transmission_vvc(m, {}, st, env, 1000.0, s);
    CHECK(held.q_req_kvar == doctest::Approx(plan.q_req_kvar + 1000.0));

    const DerEnvelope small{0, 10, -10, 0, 0, 0};
    CHECK(transmission_vvc(m, {}, st, small, 0.0, s).q_req_kvar == 10.0);
    s.v_target = v0 - 0.5;
    CHECK(transmission_vvc(m, {}, st, small, 0.0, s).q_req_kvar == -10.0);
}

TEST_CASE("transmission vvc curtails only with reactive range exhausted and overvoltage") {
    auto m = three_bus_transmission();
    m.generators[0].v_set = 1.08;
    m.generators[1].v_set = 1.08;
    m.loads.clear();
    const auto st = solve_transmission(m);
    REQUIRE(std::abs(st.voltage[2](0)) > 1.05);
    TransmissionVvcSettings s{"B3"};
    const DerEnvelope env{800, 100, -100, 0, 0, 0};
    const auto plan = transmission_vvc(m, {}, st, env, 0.0, s);
    CHECK(plan.q_req_kvar == -100.0);
    CHECK(plan.p_curtail_kw > 0.0);
    CHECK(plan.p_curtail_kw <= 800.0);
    // Generator set points step toward target by at most the configured step.
    for (double v : plan.generator_v_set) CHECK(v == doctest::Approx(1.08 - s.generator_step_pu));

    const DerEnvelope ample{800, 1e6, -1e6, 0, 0, 0};
    CHECK(transmission_vvc(m, {}, st, ample, 0.0, s).p_curtail_kw == 0.0);
}

TEST_CASE("distribution vvc hand-traced two-unit cases") {
    // Node sensitivities per p.u. (base 1000 kVA). Column norms: a0 = 0.0224, a1 = 0.0539.
    Eigen::MatrixXd dv(2, 2);
    dv << 0.01, 0.02, 0.02, 0.05;
    const Vsm vsm = hand_vsm(dv);
    FeederSnapshotView f{&vsm, Eigen::Vector2d(1.0, 1.0), 1000.0};
    const std::vector<FeederSnapshotView> feeders = {f};
    const std::vector<DispatchUnit> units = {{"pvA", 0, 0, 200.0, 0.0}, {"pvB", 0, 1, 200.0, 0.0}};
    const VoltageBand band;

    auto plan = distribution_vvc(0.0, feeders, units, {}, band);
    CHECK(plan.unit_q_kvar == std::vector<double>{0.0, 0.0});
    CHECK_FALSE(plan.band_violation);

    plan = distribution_vvc(100.0, feeders, units, {}, band);
    CHECK(plan.order == std::vector<std::size_t>{1, 0});
    CHECK(plan.unit_q_kvar == std::vector<double>{0.0, 100.0});
    CHECK(plan.shortfall_kvar == 0.0);

    plan = distribution_vvc(-500.0, feeders, units, {}, band);
    CHECK(plan.unit_q_kvar == std::vector<double>{-200.0, -200.0});
    CHECK(plan.shortfall_kvar == 100.0);

    // 200 kVAR on pvB lifts node 1 from 1.045 to 1.055; minimal cut is 100 kVAR.
    std::vector<FeederSnapshotView> hot = {{&vsm, Eigen::Vector2d(1.04, 1.045), 1000.0}};
    plan = distribution_vvc(200.0, hot, units, {}, band);
    CHECK(plan.unit_q_kvar[0] == 0.0);
    CHECK(plan.unit_q_kvar[1] == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(plan.shortfall_kvar == doctest::Approx(100.0).epsilon(1e-9));
    CHECK_FALSE(plan.band_violation);
    const auto v = predict_voltages(hot, units, plan.unit_q_kvar, {}, plan.shunt_on);
    CHECK(v[0](1) <= band.upper + 1e-9);
}

TEST_CASE("distribution vvc toggles shunts only when units cannot help") {
    Eigen::MatrixXd dv(1, 2);
    dv << 0.03, 0.04;
    const Vsm vsm = hand_vsm(dv);
    const std::vector<FeederSnapshotView> feeders = {{&vsm, Eigen::VectorXd::Constant(1, 1.06), 1000.0}};
    const std::vector<DispatchUnit> units = {{"pv", 0, 0, 100.0, 0.0}};
    const std::vector<DispatchShunt> shunts = {{"cap", 0, 1, 150.0, 3, 3}};
    // 1.06 - 0.04 * 0.15 per block: two blocks off reach 1.048.
    auto plan = distribution_vvc(0.0, feeders, units, shunts, {});
    CHECK(plan.shunt_on == std::vector<int>{1});
    CHECK_FALSE(plan.band_violation);

    // No shunt left to switch and no unit pushing up: best effort, flagged.
    const std::vector<DispatchShunt> spent = {{"cap", 0, 1, 150.0, 3, 0}};
    plan = distribution_vvc(0.0, feeders, units, spent, {});
    CHECK(plan.band_violation);
    CHECK(plan.shunt_on == std::vector<int>{0});
}

TEST_CASE("distribution vvc properties on random instances") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const int nodes = 1 + int(rng() % 6), cols = 1 + int(rng() % 5);
        Eigen::MatrixXd dv(nodes, cols);
        for (int r = 0; r < nodes; ++r)
            for (int c = 0; c < cols; ++c) dv(r, c) = 0.001 + 0.05 * u(rng);
        if (trial % 4 == 0) dv.col(cols - 1) = dv.col(0);  // tie
        const Vsm vsm = hand_vsm(dv);
        Eigen::VectorXd v_now(nodes);
        for (int r = 0; r < nodes; ++r) v_now(r) = 0.96 + 0.08 * u(rng);
        const std::vector<FeederSnapshotView> feeders = {{&vsm, v_now, 1000.0}};
        std::vector<DispatchUnit> units;
        for (int c = 0; c < cols; ++c)
            units.push_back({"u" + std::to_string(cols - c), 0, c, 50.0 + 300.0 * u(rng), 100.0 * (u(rng) - 0.5)});
        const double q_req = 1500.0 * (u(rng) - 0.5);

        const auto plan = distribution_vvc(q_req, feeders, units, {}, {});
        for (std::size_t i = 0; i < units.size(); ++i) {
            CHECK(std::abs(plan.unit_q_kvar[i]) <= units[i].q_limit_kvar);
            CHECK(plan.unit_q_kvar[i] * q_req >= 0.0);
        }
        double total = 0.0;
        for (double q : plan.unit_q_kvar) total += std::abs(q);
        CHECK(total + plan.shortfall_kvar == doctest::Approx(std::abs(q_req)).epsilon(1e-9));

        const auto again = distribution_vvc(q_req, feeders, units, {}, {});
        CHECK(again.unit_q_kvar == plan.unit_q_kvar);

        Vsm scaled = vsm;
        scaled.dv_dq *= 0.5 + 10.0 * u(rng);
        const std::vector<FeederSnapshotView> scaled_feeders = {{&scaled, v_now, 1000.0}};
        CHECK(effectiveness_order(scaled_feeders, units) == plan.order);
    }
}
