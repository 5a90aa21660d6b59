#include "hilfed/sectioned_text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "hilfed/error.hpp"

namespace hilfed {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

bool is_decimal_text(std::string_view s) {
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t digits = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') { ++i; ++digits; }
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') { ++i; ++digits; }
    }
    return digits > 0 && i == s.size();
}

}  // namespace

std::vector<TextRecord> lex_sectioned_text(std::string_view text, std::span<const std::string_view> allowed_sections) {
    std::vector<TextRecord> records;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
            const auto name = trim(line.substr(1, line.size() - 2));
            if (std::find(allowed_sections.begin(), allowed_sections.end(), name) == allowed_sections.end())
                throw ParseError(line_no, "unknown section [" + std::string(name) + "]");
            section = std::string(name);
            continue;
        }
        if (section.empty()) throw ParseError(line_no, "record outside of any section");

        TextRecord rec{section, {}, line_no};
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            rec.fields.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

double parse_decimal(std::string_view field, std::size_t line, std::string_view what) {
    if (!is_decimal_text(field))
        throw ParseError(line, std::string(what) + ": expected a decimal number, got '" + std::string(field) + "'");
    if (field.front() == '+') field.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError(line, std::string(what) + ": number out of range '" + std::string(field) + "'");
    return value;
}

long long parse_integer(std::string_view field, std::size_t line, std::string_view what) {
    long long value = 0;
    auto text = field;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
        throw ParseError(line, std::string(what) + ": expected an integer, got '" + std::string(field) + "'");
    return value;
}

std::string format_decimal(double value) {
    char buf[400];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    if (ec != std::errc{}) return "0";
    std::string out(buf, ptr);
    if (out == "-0") out = "0";
    return out;
}

}  // namespace hilfed
