#include <cmath>
#include <numeric>

#include "hilfed/error.hpp"
#include "hilfed/powerflow.hpp"

namespace hilfed {

std::complex<double> positive_sequence_impedance(const Eigen::MatrixXcd& z) {
    const auto n = z.rows();
    if (n == 1) return z(0, 0);
    std::complex<double> self{}, mutual{};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) (i == j ? self : mutual) += z(i, j);
    return self / double(n) - mutual / double(n * (n - 1));
}

namespace {

struct BusDemand {
    // ZIP components in p.u. at nominal voltage; consumption-positive.
    double p_const = 0, q_const = 0, p_curr = 0, q_curr = 0, p_imp = 0, q_imp = 0;

    [[nodiscard]] double p(double v) const { return p_const + p_curr * v + p_imp * v * v; }
    [[nodiscard]] double q(double v) const { return q_const + q_curr * v + q_imp * v * v; }
    [[nodiscard]] double dp(double v) const { return p_curr + 2.0 * p_imp * v; }
    [[nodiscard]] double dq(double v) const { return q_curr + 2.0 * q_imp * v; }
};

}  // namespace

PhasorState solve_transmission(const GridModel& m, std::span<const BusLoad> extra_loads, const NewtonOptions& options) {
    const auto n = Eigen::Index(m.buses.size());
    const auto slack = Eigen::Index(m.slack_index());
    const double base = m.base_mva;

    Eigen::MatrixXcd ybus = Eigen::MatrixXcd::Zero(n, n);
    std::vector<std::complex<double>> z1(m.branches.size());
    for (std::size_t k = 0; k < m.branches.size(); ++k) {
        const auto& br = m.branches[k];
        const auto f = Eigen::Index(m.require_bus(br.from_bus));
        const auto t = Eigen::Index(m.require_bus(br.to_bus));
        z1[k] = positive_sequence_impedance(br.z);
        const auto y = 1.0 / z1[k];
        ybus(f, f) += y;
        ybus(t, t) += y;
        ybus(f, t) -= y;
        ybus(t, f) -= y;
    }
    for (const auto& sh : m.shunts) {
        const auto i = Eigen::Index(m.require_bus(sh.bus));
        ybus(i, i) += std::complex<double>{0.0, sh.kvar_per_block * sh.initial_on / 1000.0 / base};
    }
    const Eigen::MatrixXd g = ybus.real();
    const Eigen::MatrixXd b = ybus.imag();

    std::vector<BusDemand> demand(std::size_t(n), BusDemand{});
    for (const auto& ld : m.loads) {
        auto& d = demand[m.require_bus(ld.bus)];
        const double p = ld.rated_p_kw / 1000.0 / base;
        const double q = ld.rated_q_kvar / 1000.0 / base;
        switch (ld.kind) {
        case LoadKind::constant_power: d.p_const += p; d.q_const += q; break;
        case LoadKind::constant_current: d.p_curr += p; d.q_curr += q; break;
        case LoadKind::constant_impedance: d.p_imp += p; d.q_imp += q; break;
        }
    }
    for (const auto& el : extra_loads) {
        auto& d = demand[m.require_bus(el.bus)];
        d.p_const += el.p_mw / base;
        d.q_const += el.q_mvar / base;
    }

    std::vector<BusKind> kind(m.buses.size());
    for (Eigen::Index i = 0; i < n; ++i) kind[std::size_t(i)] = m.buses[std::size_t(i)].kind;
    std::vector<double> p_gen(std::size_t(n), 0.0);
    std::vector<double> q_fixed(std::size_t(n), 0.0);  // generator Q on demoted buses
    std::vector<std::ptrdiff_t> gen_of_bus(std::size_t(n), -1);
    Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < m.generators.size(); ++k) {
        const auto& gen = m.generators[k];
        const auto i = m.require_bus(gen.bus);
        gen_of_bus[i] = std::ptrdiff_t(k);
        if (gen.p_set_mw) p_gen[i] = *gen.p_set_mw / base;
        if (kind[i] != BusKind::pq) vm(Eigen::Index(i)) = gen.v_set;
    }

    PhasorState st;
    auto injections = [&](Eigen::VectorXd& p_calc, Eigen::VectorXd& q_calc) {
        p_calc.setZero(n);
        q_calc.setZero(n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                if (ybus(i, j) == std::complex<double>{}) continue;
                const double th = va(i) - va(j);
                p_calc(i) += vm(i) * vm(j) * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
                q_calc(i) += vm(i) * vm(j) * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
            }
    };

    int total_iterations = 0;
    for (int pass = 0; pass <= int(m.generators.size()) + 1; ++pass) {
        // Unknown ordering: angles of all non-slack buses, then magnitudes of pq buses.
        std::vector<Eigen::Index> ang, mag;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i == slack) continue;
            ang.push_back(i);
            if (kind[std::size_t(i)] == BusKind::pq) mag.push_back(i);
        }
        const auto na = Eigen::Index(ang.size());
        const auto nm = Eigen::Index(mag.size());
        std::vector<Eigen::Index> mag_col(std::size_t(n), -1);
        for (Eigen::Index k = 0; k < nm; ++k) mag_col[std::size_t(mag[std::size_t(k)])] = na + k;
        std::vector<Eigen::Index> ang_col(std::size_t(n), -1);
        for (Eigen::Index k = 0; k < na; ++k) ang_col[std::size_t(ang[std::size_t(k)])] = k;

        Eigen::VectorXd p_calc, q_calc, f(na + nm);
        st.converged = false;
        for (int iter = 0; iter <= options.max_iterations; ++iter) {
            injections(p_calc, q_calc);
            for (Eigen::Index k = 0; k < na; ++k) {
                const auto i = ang[std::size_t(k)];
                f(k) = p_calc(i) - (p_gen[std::size_t(i)] - demand[std::size_t(i)].p(vm(i)));
            }
            for (Eigen::Index k = 0; k < nm; ++k) {
                const auto i = mag[std::size_t(k)];
                f(na + k) = q_calc(i) - (q_fixed[std::size_t(i)] - demand[std::size_t(i)].q(vm(i)));
            }
            st.max_mismatch = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
            if (st.max_mismatch < options.tolerance) {
                st.converged = true;
                break;
            }
            if (iter == options.max_iterations) break;
            ++total_iterations;

            Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(na + nm, na + nm);
            for (Eigen::Index r = 0; r < na; ++r) {
                const auto i = ang[std::size_t(r)];
                for (Eigen::Index j = 0; j < n; ++j) {
                    if (ybus(i, j) == std::complex<double>{}) continue;
                    const double th = va(i) - va(j);
                    const double gc = g(i, j) * std::cos(th), bs = b(i, j) * std::sin(th);
                    const double gs = g(i, j) * std::sin(th), bc = b(i, j) * std::cos(th);
                    const auto ca = ang_col[std::size_t(j)];
                    const auto cm = mag_col[std::size_t(j)];
                    const auto rq = mag_col[std::size_t(i)];
                    if (j == i) {
                        if (ca >= 0) jac(r, ca) = -q_calc(i) - b(i, i) * vm(i) * vm(i);
                        if (cm >= 0) jac(r, cm) = p_calc(i) / vm(i) + g(i, i) * vm(i) + demand[std::size_t(i)].dp(vm(i));
                        if (rq >= 0) {
                            if (ca >= 0) jac(rq, ca) = p_calc(i) - g(i, i) * vm(i) * vm(i);
                            if (cm >= 0) jac(rq, cm) = q_calc(i) / vm(i) - b(i, i) * vm(i) + demand[std::size_t(i)].dq(vm(i));
                        }
                    } else {
                        if (ca >= 0) jac(r, ca) = vm(i) * vm(j) * (gs - bc);
                        if (cm >= 0) jac(r, cm) = vm(i) * (gc + bs);
                        if (rq >= 0) {
                            if (ca >= 0) jac(rq, ca) = -vm(i) * vm(j) * (gc + bs);
                            if (cm >= 0) jac(rq, cm) = vm(i) * (gs - bc);
                        }
                    }
                }
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
            if (!lu.isInvertible()) throw SolverError("Newton-Raphson Jacobian is singular");
            const Eigen::VectorXd dx = lu.solve(-f);
            for (Eigen::Index k = 0; k < na; ++k) va(ang[std::size_t(k)]) += dx(k);
            for (Eigen::Index k = 0; k < nm; ++k) vm(mag[std::size_t(k)]) += dx(na + k);
        }
        if (!st.converged || !options.enforce_q_limits) break;

        injections(p_calc, q_calc);
        bool demoted = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (kind[std::size_t(i)] != BusKind::pv) continue;
            const auto& gen = m.generators[std::size_t(gen_of_bus[std::size_t(i)])];
            const double q_gen = (q_calc(i) + demand[std::size_t(i)].q(vm(i))) * base;
            const double limit = q_gen > gen.q_max_mvar ? gen.q_max_mvar : q_gen < gen.q_min_mvar ? gen.q_min_mvar : q_gen;
            if (limit == q_gen) continue;
            kind[std::size_t(i)] = BusKind::pq;
            q_fixed[std::size_t(i)] = limit / base;
            st.demoted_pv_buses.push_back(std::size_t(i));
            demoted = true;
        }
        if (!demoted) break;
    }
    st.iterations = total_iterations;

    st.voltage.assign(std::size_t(n), PhaseVector::Zero());
    for (Eigen::Index i = 0; i < n; ++i) st.voltage[std::size_t(i)](0) = std::polar(vm(i), va(i));
    st.branch_current.assign(m.branches.size(), PhaseVector::Zero());
    for (std::size_t k = 0; k < m.branches.size(); ++k) {
        const auto f = m.require_bus(m.branches[k].from_bus);
        const auto t = m.require_bus(m.branches[k].to_bus);
        st.branch_current[k](0) = (st.voltage[f](0) - st.voltage[t](0)) / z1[k];
    }
    Eigen::VectorXd p_calc, q_calc;
    injections(p_calc, q_calc);
    st.source_current(0) = std::conj(std::complex<double>{p_calc(slack), q_calc(slack)} / st.voltage[std::size_t(slack)](0));
    st.generator_q_mvar.resize(m.generators.size());
    for (std::size_t k = 0; k < m.generators.size(); ++k) {
        const auto i = m.require_bus(m.generators[k].bus);
        st.generator_q_mvar[k] = kind[i] == BusKind::pq ? q_fixed[i] * base
                                                        : (q_calc(Eigen::Index(i)) + demand[i].q(vm(Eigen::Index(i)))) * base;
    }
    return st;
}

}  // namespace hilfed
