#include "hilfed/profile.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hilfed/error.hpp"
#include "hilfed/sectioned_text.hpp"

namespace hilfed {

double Profile::at(double t_s) const {
    if (values.empty()) return 0.0;
    if (t_s <= 0.0) return values.front();
    const auto idx = std::size_t(std::floor(t_s / kProfileStepSeconds + 1e-9));
    return values[std::min(idx, values.size() - 1)];
}

Profile parse_profile_csv(std::string_view text) {
    Profile p;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header = false;
    while (pos < text.size()) {
        const auto eol = text.find('\n', pos);
        auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (!header) {
            if (line != "time_s,value") throw ParseError(line_no, "profile header must be 'time_s,value'");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string_view::npos) throw ParseError(line_no, "profile row needs time_s,value");
        const double t = parse_decimal(line.substr(0, comma), line_no, "time_s");
        const double v = parse_decimal(line.substr(comma + 1), line_no, "value");
        const double expected = double(p.values.size()) * kProfileStepSeconds;
        if (std::abs(t - expected) > 1e-6)
            throw ParseError(line_no, "profile rows must be spaced 300 s apart starting at 0");
        p.values.push_back(v);
    }
    if (!header) throw ParseError(line_no, "profile is missing its header");
    return p;
}

Profile load_profile_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot open profile " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_profile_csv(ss.str());
}

std::vector<std::vector<double>> disaggregate_feeder_profile(std::span<const double> head_kw, std::span<const ZipLoad> loads) {
    if (loads.empty()) throw ModelError(ModelErrorKind::invalid_value, "disaggregation needs at least one load");
    double total = 0.0;
    for (const auto& l : loads) total += l.rated_p_kw;
    if (!(total > 0.0)) throw ModelError(ModelErrorKind::invalid_value, "disaggregation needs a positive total rating");

    std::vector<std::vector<double>> out(loads.size(), std::vector<double>(head_kw.size()));
    for (std::size_t t = 0; t < head_kw.size(); ++t) {
        const double head = head_kw[t];
        auto settle = [&](double& running) {
            running = 0.0;
            for (std::size_t i = 0; i + 1 < loads.size(); ++i) running += out[i][t];
            double last = head - running;
            for (int guard = 0; guard < 8 && running + last != head; ++guard) last += head - (running + last);
            for (int guard = 0; guard < 64 && running + last != head; ++guard)
                last = std::nextafter(last, running + last < head ? INFINITY : -INFINITY);
            return last;
        };
        for (std::size_t i = 0; i + 1 < loads.size(); ++i)
            out[i][t] = std::round(head * (loads[i].rated_p_kw / total) * 100.0) / 100.0;
        double running = 0.0;
        double last = settle(running);
        // Some sums cannot land on head by moving the last term alone; shift the one before it by an ulp.
        for (int guard = 0; guard < 16 && running + last != head && loads.size() > 1; ++guard) {
            auto& prev = out[loads.size() - 2][t];
            prev = std::nextafter(prev, running + last < head ? INFINITY : -INFINITY);
            last = settle(running);
        }
        out.back()[t] = last;
    }
    return out;
}

}  // namespace hilfed
