#include "hilfed/frames.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <vector>

namespace hilfed {

namespace {

// Field tables drive both directions of the codec.
template <typename T>
struct Field {
    std::string_view name;
    double T::*real = nullptr;
    std::int64_t T::*integer = nullptr;
};

template <typename T>
struct Schema;

template <>
struct Schema<TdBoundary> {
    static constexpr std::string_view name = "TD_BOUNDARY";
    static constexpr std::array<Field<TdBoundary>, 4> fields = {{
        {"sim_time", &TdBoundary::sim_time},
        {"v_mag", &TdBoundary::v_mag},
        {"v_angle_a", &TdBoundary::v_angle_a},
        {"scenario_ctr", nullptr, &TdBoundary::scenario_ctr},
    }};
};

template <>
struct Schema<TdRequest> {
    static constexpr std::string_view name = "TD_REQUEST";
    static constexpr std::array<Field<TdRequest>, 4> fields = {{
        {"sim_time", &TdRequest::sim_time},
        {"p_curtail_req", &TdRequest::p_curtail_req},
        {"q_req", &TdRequest::q_req},
        {"scenario_ctr", nullptr, &TdRequest::scenario_ctr},
    }};
};

template <>
struct Schema<DtBoundary> {
    static constexpr std::string_view name = "DT_BOUNDARY";
    static constexpr std::array<Field<DtBoundary>, 4> fields = {{
        {"sim_time", &DtBoundary::sim_time},
        {"p_total", &DtBoundary::p_total},
        {"q_total", &DtBoundary::q_total},
        {"scenario_ctr", nullptr, &DtBoundary::scenario_ctr},
    }};
};

template <>
struct Schema<DtConstraints> {
    static constexpr std::string_view name = "DT_CONSTRAINTS";
    static constexpr std::array<Field<DtConstraints>, 7> fields = {{
        {"sim_time", &DtConstraints::sim_time},
        {"pv_p_curtail_max", &DtConstraints::pv_p_curtail_max},
        {"pv_q_max", &DtConstraints::pv_q_max},
        {"pv_q_min", &DtConstraints::pv_q_min},
        {"dr_p_max", &DtConstraints::dr_p_max},
        {"dr_p_min", &DtConstraints::dr_p_min},
        {"losses", &DtConstraints::losses},
    }};
};

template <>
struct Schema<DpvCommand> {
    static constexpr std::string_view name = "DPV_COMMAND";
    static constexpr std::array<Field<DpvCommand>, 2> fields = {{
        {"sim_time", &DpvCommand::sim_time},
        {"q_req", &DpvCommand::q_req},
    }};
};

template <>
struct Schema<PvdResponse> {
    static constexpr std::string_view name = "PVD_RESPONSE";
    static constexpr std::array<Field<PvdResponse>, 2> fields = {{
        {"exec_time", &PvdResponse::exec_time},
        {"q_resp", &PvdResponse::q_resp},
    }};
};

void append_real(std::string& out, double v) {
    char buf[64];
    const int n = std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string_view text(buf, std::size_t(n));
    if (text == "-0.000000") text = "0.000000";
    out += text;
}

template <typename T>
std::string encode(const T& f) {
    std::string out(Schema<T>::name);
    for (const auto& field : Schema<T>::fields) {
        out += '|';
        out += field.name;
        out += '=';
        if (field.real) append_real(out, f.*field.real);
        else out += std::to_string(f.*field.integer);
    }
    out += '\n';
    return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) return parts;
        start = pos + 1;
    }
}

bool numeric_text(std::string_view v, bool allow_fraction) {
    std::size_t i = 0;
    if (i < v.size() && (v[i] == '-' || v[i] == '+')) ++i;
    std::size_t digits = 0;
    while (i < v.size() && v[i] >= '0' && v[i] <= '9') ++i, ++digits;
    if (allow_fraction && i < v.size() && v[i] == '.') {
        ++i;
        std::size_t frac = 0;
        while (i < v.size() && v[i] >= '0' && v[i] <= '9') ++i, ++frac;
        if (frac == 0) return false;
    }
    return digits > 0 && i == v.size();
}

template <typename T>
Frame decode(const std::vector<std::string_view>& parts) {
    T frame{};
    const auto& fields = Schema<T>::fields;
    for (std::size_t k = 0; k < fields.size(); ++k) {
        const auto& field = fields[k];
        if (k + 1 >= parts.size())
            throw DecodeError(DecodeErrorKind::missing_field,
                              std::string(Schema<T>::name) + ": missing field " + std::string(field.name));
        const auto token = parts[k + 1];
        const auto eq = token.find('=');
        const auto name = token.substr(0, eq);
        if (name != field.name) {
            bool known = false;
            for (const auto& other : fields) known = known || other.name == name;
            if (known)
                throw DecodeError(DecodeErrorKind::field_order, std::string(Schema<T>::name) + ": field " + std::string(name) +
                                                                    " out of order, expected " + std::string(field.name));
            throw DecodeError(DecodeErrorKind::missing_field,
                              std::string(Schema<T>::name) + ": missing field " + std::string(field.name));
        }
        const auto value = eq == std::string_view::npos ? std::string_view{} : token.substr(eq + 1);
        const bool ok = numeric_text(value, field.real != nullptr);
        const char* first = value.data() + (ok && value.front() == '+' ? 1 : 0);
        std::from_chars_result res{};
        if (ok && field.real) res = std::from_chars(first, value.data() + value.size(), frame.*field.real);
        else if (ok) res = std::from_chars(first, value.data() + value.size(), frame.*field.integer);
        if (!ok || res.ec != std::errc{} || res.ptr != value.data() + value.size())
            throw DecodeError(DecodeErrorKind::bad_number, std::string(Schema<T>::name) + ": field " + std::string(field.name) +
                                                               " is not a number: \"" + std::string(value) + "\"");
    }
    if (parts.size() > fields.size() + 1)
        throw DecodeError(DecodeErrorKind::extra_field,
                          std::string(Schema<T>::name) + ": unexpected field \"" + std::string(parts[fields.size() + 1]) + "\"");
    return frame;
}

}  // namespace

std::string_view frame_type_name(const Frame& frame) {
    return std::visit([](const auto& f) { return Schema<std::decay_t<decltype(f)>>::name; }, frame);
}

std::string encode_frame(const Frame& frame) {
    return std::visit([](const auto& f) { return encode(f); }, frame);
}

Frame decode_frame(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
        line.remove_suffix(1);
    const auto parts = split(line, '|');
    const auto tag = parts.front();
    if (tag == Schema<TdBoundary>::name) return decode<TdBoundary>(parts);
    if (tag == Schema<TdRequest>::name) return decode<TdRequest>(parts);
    if (tag == Schema<DtBoundary>::name) return decode<DtBoundary>(parts);
    if (tag == Schema<DtConstraints>::name) return decode<DtConstraints>(parts);
    if (tag == Schema<DpvCommand>::name) return decode<DpvCommand>(parts);
    if (tag == Schema<PvdResponse>::name) return decode<PvdResponse>(parts);
    throw DecodeError(DecodeErrorKind::unknown_type, "unknown frame type \"" + std::string(tag) + "\"");
}

}  // namespace hilfed
