#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hilfed {

enum class Phase : std::uint8_t { a = 0, b = 1, c = 2 };

/// Subset of {a, b, c}. Ordered a < b < c wherever phases are enumerated.
class PhaseSet {
public:
    constexpr PhaseSet() = default;

    static constexpr PhaseSet all() { return PhaseSet{0b111}; }
    static constexpr PhaseSet single(Phase p) { return PhaseSet{std::uint8_t(1u << unsigned(p))}; }

    /// Parses "a", "bc", "abc", ... Letters must be unique and in order.
    static std::optional<PhaseSet> parse(std::string_view text);

    [[nodiscard]] constexpr bool contains(Phase p) const { return (bits_ >> unsigned(p)) & 1u; }
    [[nodiscard]] constexpr bool empty() const { return bits_ == 0; }
    [[nodiscard]] constexpr int count() const {
        return int(bits_ & 1u) + int((bits_ >> 1) & 1u) + int((bits_ >> 2) & 1u);
    }
    [[nodiscard]] constexpr PhaseSet intersect(PhaseSet o) const { return PhaseSet{std::uint8_t(bits_ & o.bits_)}; }
    [[nodiscard]] constexpr bool subset_of(PhaseSet o) const { return (bits_ & ~o.bits_) == 0; }
    [[nodiscard]] std::vector<Phase> phases() const;
    [[nodiscard]] std::string to_string() const;

    constexpr bool operator==(const PhaseSet&) const = default;

private:
    constexpr explicit PhaseSet(std::uint8_t bits) : bits_(bits) {}
    std::uint8_t bits_ = 0;
};

char phase_letter(Phase p);

enum class BusKind { slack, pq, pv };

struct Bus {
    std::string id;
    PhaseSet phases;
    double base_kv = 1.0;  // line-to-line
    BusKind kind = BusKind::pq;

    bool operator==(const Bus&) const = default;
};

/// Series impedance in per-unit. `z` is square with one row per phase of `phases`,
/// which is the intersection of the endpoint phase sets.
struct Branch {
    std::string from_bus;
    std::string to_bus;
    PhaseSet phases;
    Eigen::MatrixXcd z;

    bool operator==(const Branch& o) const;
};

enum class LoadKind { constant_power, constant_current, constant_impedance };

/// Rated values are at nominal voltage. Multi-phase loads split evenly across their phases.
struct ZipLoad {
    std::string id;
    std::string bus;
    PhaseSet phases;
    LoadKind kind = LoadKind::constant_power;
    double rated_p_kw = 0.0;
    double rated_q_kvar = 0.0;
    bool fixed = false;  // excluded from profile disaggregation

    bool operator==(const ZipLoad&) const = default;
};

/// Switchable capacitor bank of identical blocks. Injects kvar_per_block * |V|^2 per closed block.
struct Shunt {
    std::string id;
    std::string bus;
    PhaseSet phases;
    double kvar_per_block = 0.0;
    int blocks = 1;
    int initial_on = 0;

    bool operator==(const Shunt&) const = default;
};

struct Generator {
    std::string bus;
    std::optional<double> p_set_mw;  // empty on the slack bus
    double v_set = 1.0;
    double q_min_mvar = 0.0;
    double q_max_mvar = 0.0;

    bool operator==(const Generator&) const = default;
};

/// Solar plant seen by the network as a negative constant-power load.
struct SolarFarm {
    std::string id;
    std::string bus;
    double s_rating_kva = 0.0;
    std::string profile_id;

    bool operator==(const SolarFarm&) const = default;
};

struct GridModel {
    double base_mva = 1.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<ZipLoad> loads;
    std::vector<Shunt> shunts;
    std::vector<Generator> generators;
    std::vector<SolarFarm> solar;

    [[nodiscard]] std::optional<std::size_t> bus_index(std::string_view id) const;
    /// Throws ModelError(dangling_reference) when the id is unknown.
    [[nodiscard]] std::size_t require_bus(std::string_view id) const;
    [[nodiscard]] std::size_t slack_index() const;
    [[nodiscard]] double base_kva() const { return base_mva * 1000.0; }

    bool operator==(const GridModel&) const = default;
};

/// Checks every type invariant; throws ModelError on the first violation.
void validate(const GridModel& model, bool require_radial);

/// Throws ModelError(non_radial or disconnected) unless the branches form a spanning tree.
void check_radial(const GridModel& model);

}  // namespace hilfed
