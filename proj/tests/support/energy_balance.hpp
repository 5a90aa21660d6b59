#pragma once

#include <complex>

#include "hilfed/powerflow.hpp"

namespace oracle {

// Σ load consumption minus Σ injections at the solved voltages, computed directly from the ZIP law.
inline std::complex<double> net_demand(const hilfed::GridModel& m, const hilfed::PhasorState& st,
                                       const hilfed::FeederInputs& in = {}) {
    using namespace hilfed;
    using cd = std::complex<double>;
    cd total{};
    const double base = m.base_kva();
    for (std::size_t i = 0; i < m.loads.size(); ++i) {
        const auto& l = m.loads[i];
        const cd rated = i < in.load_demand_kva.size() ? in.load_demand_kva[i] : cd{l.rated_p_kw, l.rated_q_kvar};
        const auto b = m.require_bus(l.bus);
        for (Phase p : l.phases.phases())
            total += evaluate_zip(l.kind, rated / base / double(l.phases.count()), st.voltage[b](int(p)));
    }
    for (std::size_t i = 0; i < m.shunts.size(); ++i) {
        const auto& s = m.shunts[i];
        const int on = i < in.shunt_blocks_on.size() ? in.shunt_blocks_on[i] : s.initial_on;
        const auto b = m.require_bus(s.bus);
        for (Phase p : s.phases.phases())
            total += evaluate_zip(LoadKind::constant_impedance, cd{0.0, -s.kvar_per_block * on} / base / double(s.phases.count()),
                                  st.voltage[b](int(p)));
    }
    for (std::size_t i = 0; i < in.solar_kva.size(); ++i) total -= in.solar_kva[i] / base;
    for (const auto& e : in.extra) total -= cd{e.p_kw, e.q_kvar} / base;
    return total;
}

}  // namespace oracle
