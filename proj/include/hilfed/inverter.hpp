#pragma once

namespace hilfed {

struct InverterParams {
    double s_rating_kva = 0.0;
    double k = 1.1;
    double settle_s = 30.0;  // reported q reaches the command after this long
};

struct InverterState {
    double p_avail_kw = 0.0;
    double q_cmd_kvar = 0.0;
    double p_out_kw = 0.0;
    double q_out_kvar = 0.0;
    double q_reported_kvar = 0.0;
};

struct OperatingPoint {
    double p_kw = 0.0;
    double q_kvar = 0.0;
};

/// Semi-ellipse capability map: clamp Q to ±k·S, then cap P by the remaining headroom.
OperatingPoint apply_q_command(double q_cm_kvar, double p_avail_kw, const InverterParams& params);

bool capability_ok(double p_kw, double q_kvar, const InverterParams& params);

/// PV inverter with a first-order approach to each new Q command.
class Inverter {
public:
    explicit Inverter(InverterParams params);

    [[nodiscard]] const InverterParams& params() const { return params_; }
    [[nodiscard]] const InverterState& state() const { return state_; }

    void command(double q_cm_kvar, double now_s);
    void update_irradiance(double sample_kw, double now_s);
    void advance(double now_s);
    /// Advances to now_s and records the current q_out as the reported value.
    double respond(double now_s);

private:
    void recompute(double now_s);

    InverterParams params_;
    InverterState state_;
    double q_start_kvar_ = 0.0;
    double cmd_time_s_ = 0.0;
};

}  // namespace hilfed
