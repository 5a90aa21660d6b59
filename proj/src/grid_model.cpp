#include "hilfed/grid_model.hpp"

#include <numeric>
#include <set>

#include "hilfed/error.hpp"

namespace hilfed {

std::optional<PhaseSet> PhaseSet::parse(std::string_view text) {
    PhaseSet set;
    int last = -1;
    for (char c : text) {
        if (c < 'a' || c > 'c') return std::nullopt;
        const int idx = c - 'a';
        if (idx <= last) return std::nullopt;
        last = idx;
        set.bits_ |= std::uint8_t(1u << unsigned(idx));
    }
    if (set.empty()) return std::nullopt;
    return set;
}

std::vector<Phase> PhaseSet::phases() const {
    std::vector<Phase> out;
    for (Phase p : {Phase::a, Phase::b, Phase::c})
        if (contains(p)) out.push_back(p);
    return out;
}

std::string PhaseSet::to_string() const {
    std::string s;
    for (Phase p : phases()) s.push_back(phase_letter(p));
    return s;
}

char phase_letter(Phase p) { return char('a' + int(p)); }

bool Branch::operator==(const Branch& o) const {
    return from_bus == o.from_bus && to_bus == o.to_bus && phases == o.phases && z.rows() == o.z.rows() &&
           z.cols() == o.z.cols() && z == o.z;
}

std::optional<std::size_t> GridModel::bus_index(std::string_view id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return i;
    return std::nullopt;
}

std::size_t GridModel::require_bus(std::string_view id) const {
    if (auto idx = bus_index(id)) return *idx;
    throw ModelError(ModelErrorKind::dangling_reference, "reference to undeclared bus \"" + std::string(id) + "\"");
}

std::size_t GridModel::slack_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].kind == BusKind::slack) return i;
    throw ModelError(ModelErrorKind::missing_slack, "network has no slack bus");
}

namespace {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

[[noreturn]] void invalid(const std::string& msg) { throw ModelError(ModelErrorKind::invalid_value, msg); }

void check_bus_ref(const GridModel& m, const std::string& id, PhaseSet phases, const std::string& who) {
    const auto idx = m.require_bus(id);
    if (!phases.subset_of(m.buses[idx].phases))
        throw ModelError(ModelErrorKind::phase_mismatch,
                         who + ": phases " + phases.to_string() + " not present on bus \"" + id + "\"");
}

}  // namespace

void check_radial(const GridModel& model) {
    DisjointSets sets(model.buses.size());
    for (const auto& br : model.branches) {
        if (!sets.unite(model.require_bus(br.from_bus), model.require_bus(br.to_bus)))
            throw ModelError(ModelErrorKind::non_radial,
                             "branch " + br.from_bus + "-" + br.to_bus + " closes a loop; feeder must be radial");
    }
    if (model.buses.empty()) return;
    const auto root = sets.find(0);
    for (std::size_t i = 1; i < model.buses.size(); ++i)
        if (sets.find(i) != root)
            throw ModelError(ModelErrorKind::disconnected, "bus \"" + model.buses[i].id + "\" is not connected");
}

void validate(const GridModel& m, bool require_radial) {
    if (!(m.base_mva > 0.0)) invalid("base_mva must be positive");

    std::set<std::string> ids;
    std::size_t slack_count = 0;
    for (const auto& bus : m.buses) {
        if (!ids.insert(bus.id).second)
            throw ModelError(ModelErrorKind::duplicate_id, "duplicate bus id \"" + bus.id + "\"");
        if (bus.phases.empty()) invalid("bus \"" + bus.id + "\" has no phases");
        if (!(bus.base_kv > 0.0)) invalid("bus \"" + bus.id + "\" base_kv must be positive");
        if (bus.kind == BusKind::slack && ++slack_count > 1)
            throw ModelError(ModelErrorKind::multiple_slack, "second slack bus \"" + bus.id + "\"");
    }
    if (slack_count == 0) throw ModelError(ModelErrorKind::missing_slack, "network has no slack bus");

    for (const auto& br : m.branches) {
        const auto from = m.require_bus(br.from_bus);
        const auto to = m.require_bus(br.to_bus);
        if (from == to) invalid("branch " + br.from_bus + "-" + br.to_bus + " is a self loop");
        const auto shared = m.buses[from].phases.intersect(m.buses[to].phases);
        if (shared.empty() || shared != br.phases)
            throw ModelError(ModelErrorKind::phase_mismatch,
                             "branch " + br.from_bus + "-" + br.to_bus + " phase set does not match its endpoints");
        const auto n = shared.count();
        if (br.z.rows() != n || br.z.cols() != n)
            throw ModelError(ModelErrorKind::phase_mismatch,
                             "branch " + br.from_bus + "-" + br.to_bus + " impedance dimension does not match phases");
        for (int i = 0; i < n; ++i) {
            if (br.z(i, i) == std::complex<double>{}) invalid("branch " + br.from_bus + "-" + br.to_bus + " has a zero diagonal impedance");
            for (int j = i + 1; j < n; ++j)
                if (br.z(i, j) != br.z(j, i)) invalid("branch " + br.from_bus + "-" + br.to_bus + " impedance is not symmetric");
        }
    }

    std::set<std::string> load_ids;
    for (const auto& ld : m.loads) {
        if (!load_ids.insert(ld.id).second)
            throw ModelError(ModelErrorKind::duplicate_id, "duplicate load id \"" + ld.id + "\"");
        check_bus_ref(m, ld.bus, ld.phases, "load " + ld.id);
        if (ld.rated_p_kw < 0.0) invalid("load " + ld.id + " has negative rated_p");
    }
    std::set<std::string> shunt_ids;
    for (const auto& sh : m.shunts) {
        if (!shunt_ids.insert(sh.id).second)
            throw ModelError(ModelErrorKind::duplicate_id, "duplicate shunt id \"" + sh.id + "\"");
        check_bus_ref(m, sh.bus, sh.phases, "shunt " + sh.id);
        if (sh.blocks < 1 || sh.initial_on < 0 || sh.initial_on > sh.blocks)
            invalid("shunt " + sh.id + " block counts out of range");
    }
    std::set<std::string> gen_buses;
    for (const auto& g : m.generators) {
        const auto idx = m.require_bus(g.bus);
        if (!gen_buses.insert(g.bus).second) invalid("more than one generator on bus \"" + g.bus + "\"");
        if (g.q_min_mvar > g.q_max_mvar) invalid("generator on \"" + g.bus + "\" has q_min > q_max");
        if (!(g.v_set > 0.0)) invalid("generator on \"" + g.bus + "\" has non-positive v_set");
        const bool slack = m.buses[idx].kind == BusKind::slack;
        if (slack && g.p_set_mw) invalid("slack generator on \"" + g.bus + "\" must not carry p_set");
        if (!slack && !g.p_set_mw) invalid("generator on \"" + g.bus + "\" needs p_set");
    }
    for (std::size_t i = 0; i < m.buses.size(); ++i)
        if (m.buses[i].kind == BusKind::pv && !gen_buses.contains(m.buses[i].id))
            invalid("pv bus \"" + m.buses[i].id + "\" has no generator");
    std::set<std::string> solar_ids;
    for (const auto& s : m.solar) {
        if (!solar_ids.insert(s.id).second)
            throw ModelError(ModelErrorKind::duplicate_id, "duplicate solar id \"" + s.id + "\"");
        const auto idx = m.require_bus(s.bus);
        if (!(s.s_rating_kva > 0.0)) invalid("solar " + s.id + " rating must be positive");
        if (m.buses[idx].phases != PhaseSet::all())
            throw ModelError(ModelErrorKind::phase_mismatch, "solar " + s.id + " must attach to a three-phase bus");
    }

    if (require_radial) check_radial(m);
}

}  // namespace hilfed
