#include "hilfed/grid_io.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "hilfed/error.hpp"
#include "hilfed/sectioned_text.hpp"

namespace hilfed {

namespace {

constexpr std::array<std::string_view, 7> kSections = {"system", "buses", "branches", "loads", "shunts", "generators", "solar"};

void expect_fields(const TextRecord& rec, std::size_t min, std::size_t max) {
    if (rec.fields.size() < min || rec.fields.size() > max) {
        const auto expected = min == max ? std::to_string(min) : std::to_string(min) + "-" + std::to_string(max);
        throw ParseError(rec.line, "[" + rec.section + "] record needs " + expected + " fields, got " +
                                       std::to_string(rec.fields.size()));
    }
}

PhaseSet parse_phases(const TextRecord& rec, std::size_t field) {
    if (auto set = PhaseSet::parse(rec.fields[field])) return *set;
    throw ParseError(rec.line, "invalid phase set '" + rec.fields[field] + "'");
}

std::string parse_id(const TextRecord& rec, std::size_t field) {
    const auto& id = rec.fields[field];
    if (id.empty()) throw ParseError(rec.line, "empty identifier");
    return id;
}

LoadKind parse_load_kind(const TextRecord& rec, std::size_t field) {
    const auto& k = rec.fields[field];
    if (k == "constant_power") return LoadKind::constant_power;
    if (k == "constant_current") return LoadKind::constant_current;
    if (k == "constant_impedance") return LoadKind::constant_impedance;
    throw ParseError(rec.line, "unknown load kind '" + k + "'");
}

BusKind parse_bus_kind(const TextRecord& rec, std::size_t field) {
    const auto& k = rec.fields[field];
    if (k == "slack") return BusKind::slack;
    if (k == "pq") return BusKind::pq;
    if (k == "pv") return BusKind::pv;
    throw ParseError(rec.line, "unknown bus kind '" + k + "'");
}

int phase_count_for_pairs(std::size_t pairs) {
    switch (pairs) {
    case 1: return 1;
    case 3: return 2;
    case 6: return 3;
    default: return 0;
    }
}

struct BusRef {
    std::size_t line;
    std::string id;
};

}  // namespace

std::string_view to_string(LoadKind kind) {
    switch (kind) {
    case LoadKind::constant_power: return "constant_power";
    case LoadKind::constant_current: return "constant_current";
    case LoadKind::constant_impedance: return "constant_impedance";
    }
    return "?";
}

std::string_view to_string(BusKind kind) {
    switch (kind) {
    case BusKind::slack: return "slack";
    case BusKind::pq: return "pq";
    case BusKind::pv: return "pv";
    }
    return "?";
}

GridModel parse_grid_file(std::string_view text, const GridParseOptions& options) {
    GridModel m;
    std::vector<BusRef> refs;
    bool base_seen = false;

    for (const auto& rec : lex_sectioned_text(text, kSections)) {
        const auto& f = rec.fields;
        if (rec.section == "system") {
            expect_fields(rec, 2, 2);
            if (f[0] != "base_mva") throw ParseError(rec.line, "unknown system key '" + f[0] + "'");
            if (base_seen) throw ParseError(rec.line, "base_mva given twice");
            m.base_mva = parse_decimal(f[1], rec.line, "base_mva");
            base_seen = true;
        } else if (rec.section == "buses") {
            expect_fields(rec, 4, 4);
            m.buses.push_back({parse_id(rec, 0), parse_phases(rec, 1), parse_decimal(f[2], rec.line, "base_kv"),
                               parse_bus_kind(rec, 3)});
        } else if (rec.section == "branches") {
            if (f.size() < 4 || f.size() % 2 != 0) throw ParseError(rec.line, "branch needs from,to and r,x pairs");
            const auto pairs = (f.size() - 2) / 2;
            const int n = phase_count_for_pairs(pairs);
            if (n == 0) throw ParseError(rec.line, "branch impedance needs 1, 3 or 6 r,x pairs");
            Branch br;
            br.from_bus = parse_id(rec, 0);
            br.to_bus = parse_id(rec, 1);
            br.z.resize(n, n);
            std::size_t k = 2;
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    const std::complex<double> z{parse_decimal(f[k], rec.line, "r"), parse_decimal(f[k + 1], rec.line, "x")};
                    k += 2;
                    br.z(i, j) = z;
                    br.z(j, i) = z;
                }
            refs.push_back({rec.line, br.from_bus});
            refs.push_back({rec.line, br.to_bus});
            m.branches.push_back(std::move(br));
        } else if (rec.section == "loads") {
            expect_fields(rec, 6, 7);
            ZipLoad ld{parse_id(rec, 0), parse_id(rec, 1), parse_phases(rec, 2), parse_load_kind(rec, 3),
                       parse_decimal(f[4], rec.line, "p_kw"), parse_decimal(f[5], rec.line, "q_kvar"), false};
            if (f.size() == 7) {
                if (f[6] != "fixed") throw ParseError(rec.line, "unknown load flag '" + f[6] + "'");
                ld.fixed = true;
            }
            refs.push_back({rec.line, ld.bus});
            m.loads.push_back(std::move(ld));
        } else if (rec.section == "shunts") {
            expect_fields(rec, 6, 6);
            Shunt sh{parse_id(rec, 0), parse_id(rec, 1), parse_phases(rec, 2), parse_decimal(f[3], rec.line, "kvar_per_block"),
                     int(parse_integer(f[4], rec.line, "blocks")), int(parse_integer(f[5], rec.line, "initial_on"))};
            refs.push_back({rec.line, sh.bus});
            m.shunts.push_back(std::move(sh));
        } else if (rec.section == "generators") {
            expect_fields(rec, 5, 5);
            Generator g;
            g.bus = parse_id(rec, 0);
            if (!f[1].empty()) g.p_set_mw = parse_decimal(f[1], rec.line, "p_mw");
            g.v_set = parse_decimal(f[2], rec.line, "v_set");
            g.q_min_mvar = parse_decimal(f[3], rec.line, "q_min_mvar");
            g.q_max_mvar = parse_decimal(f[4], rec.line, "q_max_mvar");
            refs.push_back({rec.line, g.bus});
            m.generators.push_back(std::move(g));
        } else if (rec.section == "solar") {
            expect_fields(rec, 4, 4);
            SolarFarm s{parse_id(rec, 0), parse_id(rec, 1), parse_decimal(f[2], rec.line, "s_kva"), parse_id(rec, 3)};
            refs.push_back({rec.line, s.bus});
            m.solar.push_back(std::move(s));
        }
    }

    for (auto& br : m.branches) {
        const auto from = m.bus_index(br.from_bus);
        const auto to = m.bus_index(br.to_bus);
        if (from && to) br.phases = m.buses[*from].phases.intersect(m.buses[*to].phases);
    }
    for (const auto& ref : refs)
        if (!m.bus_index(ref.id))
            throw ModelError(ModelErrorKind::dangling_reference,
                             "line " + std::to_string(ref.line) + ": reference to undeclared bus \"" + ref.id + "\"");

    validate(m, options.require_radial);
    return m;
}

GridModel load_grid_file(const std::string& path, const GridParseOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot open network file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_grid_file(ss.str(), options);
}

std::string to_text(const GridModel& m) {
    std::ostringstream out;
    out << "[system]\nbase_mva," << format_decimal(m.base_mva) << "\n";
    out << "[buses]\n";
    for (const auto& b : m.buses)
        out << b.id << ',' << b.phases.to_string() << ',' << format_decimal(b.base_kv) << ',' << to_string(b.kind) << '\n';
    out << "[branches]\n";
    for (const auto& br : m.branches) {
        out << br.from_bus << ',' << br.to_bus;
        for (Eigen::Index i = 0; i < br.z.rows(); ++i)
            for (Eigen::Index j = i; j < br.z.cols(); ++j)
                out << ',' << format_decimal(br.z(i, j).real()) << ',' << format_decimal(br.z(i, j).imag());
        out << '\n';
    }
    out << "[loads]\n";
    for (const auto& l : m.loads) {
        out << l.id << ',' << l.bus << ',' << l.phases.to_string() << ',' << to_string(l.kind) << ','
            << format_decimal(l.rated_p_kw) << ',' << format_decimal(l.rated_q_kvar);
        if (l.fixed) out << ",fixed";
        out << '\n';
    }
    out << "[shunts]\n";
    for (const auto& s : m.shunts)
        out << s.id << ',' << s.bus << ',' << s.phases.to_string() << ',' << format_decimal(s.kvar_per_block) << ','
            << s.blocks << ',' << s.initial_on << '\n';
    out << "[generators]\n";
    for (const auto& g : m.generators)
        out << g.bus << ',' << (g.p_set_mw ? format_decimal(*g.p_set_mw) : std::string()) << ',' << format_decimal(g.v_set)
            << ',' << format_decimal(g.q_min_mvar) << ',' << format_decimal(g.q_max_mvar) << '\n';
    out << "[solar]\n";
    for (const auto& s : m.solar)
        out << s.id << ',' << s.bus << ',' << format_decimal(s.s_rating_kva) << ',' << s.profile_id << '\n';
    return out.str();
}

}  // namespace hilfed
