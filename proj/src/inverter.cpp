#include "hilfed/inverter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hilfed {

OperatingPoint apply_q_command(double q_cm_kvar, double p_avail_kw, const InverterParams& params) {
    const double s = params.s_rating_kva;
    const double q_lim = params.k * s;
    const double q = std::clamp(q_cm_kvar, -q_lim, q_lim);
    const double ratio = q / params.k;
    const double headroom = std::sqrt(std::max(0.0, s * s - ratio * ratio));
    return {std::min(headroom, std::max(0.0, p_avail_kw)), q};
}

bool capability_ok(double p_kw, double q_kvar, const InverterParams& params) {
    const double s = params.s_rating_kva;
    const double x = p_kw / s;
    const double y = q_kvar / (params.k * s);
    return x * x + y * y <= 1.0 + 1e-12;
}

Inverter::Inverter(InverterParams params) : params_(params) {
    if (!(params_.s_rating_kva > 0.0)) throw std::invalid_argument("inverter rating must be positive");
    if (!(params_.k >= 1.0)) throw std::invalid_argument("inverter k must be at least 1");
    if (params_.settle_s < 0.0) throw std::invalid_argument("inverter settle time must be non-negative");
}

void Inverter::command(double q_cm_kvar, double now_s) {
    advance(now_s);
    q_start_kvar_ = state_.q_out_kvar;
    cmd_time_s_ = now_s;
    state_.q_cmd_kvar = q_cm_kvar;
    recompute(now_s);
}

void Inverter::update_irradiance(double sample_kw, double now_s) {
    state_.p_avail_kw = std::clamp(sample_kw, 0.0, params_.s_rating_kva);
    recompute(now_s);
}

void Inverter::advance(double now_s) { recompute(now_s); }

double Inverter::respond(double now_s) {
    advance(now_s);
    state_.q_reported_kvar = state_.q_out_kvar;
    return state_.q_reported_kvar;
}

void Inverter::recompute(double now_s) {
    const double target = apply_q_command(state_.q_cmd_kvar, state_.p_avail_kw, params_).q_kvar;
    const double elapsed = now_s - cmd_time_s_;
    double q = target;
    if (elapsed < params_.settle_s) {
        const double tau = params_.settle_s / 5.0;
        q = target + (q_start_kvar_ - target) * std::exp(-std::max(0.0, elapsed) / tau);
    }
    const auto op = apply_q_command(q, state_.p_avail_kw, params_);
    state_.q_out_kvar = op.q_kvar;
    state_.p_out_kw = op.p_kw;
}

}  // namespace hilfed
