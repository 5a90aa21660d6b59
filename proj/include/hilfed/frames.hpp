#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace hilfed {

// Transmission -> distribution, every 100 ms.
struct TdBoundary {
    double sim_time = 0;
    double v_mag = 0;      // p.u.
    double v_angle_a = 0;  // degrees
    std::int64_t scenario_ctr = 0;
    bool operator==(const TdBoundary&) const = default;
};

// Transmission controller -> distribution controller, every control interval.
struct TdRequest {
    double sim_time = 0;
    double p_curtail_req = 0;  // p.u.
    double q_req = 0;          // p.u., positive = inject
    std::int64_t scenario_ctr = 0;
    bool operator==(const TdRequest&) const = default;
};

// Distribution -> transmission, every 100 ms.
struct DtBoundary {
    double sim_time = 0;
    double p_total = 0;  // kW
    double q_total = 0;  // kVAR
    std::int64_t scenario_ctr = 0;
    bool operator==(const DtBoundary&) const = default;
};

// Distribution controller -> transmission controller, every control interval.
struct DtConstraints {
    double sim_time = 0;
    double pv_p_curtail_max = 0;  // kW
    double pv_q_max = 0;          // kVAR
    double pv_q_min = 0;          // kVAR
    double dr_p_max = 0;          // kW
    double dr_p_min = 0;          // kW
    double losses = 0;            // kW
    bool operator==(const DtConstraints&) const = default;
};

// Distribution controller -> hardware inverter.
struct DpvCommand {
    double sim_time = 0;
    double q_req = 0;  // p.u. of inverter rating
    bool operator==(const DpvCommand&) const = default;
};

// Hardware inverter -> distribution, every minute.
struct PvdResponse {
    double exec_time = 0;
    double q_resp = 0;  // p.u. of inverter rating
    bool operator==(const PvdResponse&) const = default;
};

using Frame = std::variant<TdBoundary, TdRequest, DtBoundary, DtConstraints, DpvCommand, PvdResponse>;

std::string_view frame_type_name(const Frame& frame);

/// Canonical one-line text: `TYPE|field=value|...\n`, reals with 6 decimals.
std::string encode_frame(const Frame& frame);

enum class DecodeErrorKind { unknown_type, missing_field, field_order, bad_number, extra_field };

class DecodeError : public std::runtime_error {
public:
    DecodeError(DecodeErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    [[nodiscard]] DecodeErrorKind kind() const noexcept { return kind_; }

private:
    DecodeErrorKind kind_;
};

/// Parses the canonical form. Trailing whitespace is tolerated.
Frame decode_frame(std::string_view line);

}  // namespace hilfed
