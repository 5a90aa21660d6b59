#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hilfed {

/// One comma-separated record from a sectioned text document.
struct TextRecord {
    std::string section;
    std::vector<std::string> fields;  // trimmed
    std::size_t line = 0;
};

/// Lexes the line-oriented format shared by network and scenario files:
/// `[name]` starts a section, `#` starts a comment, blank lines are ignored,
/// every other line is a comma-separated record. Section names are checked
/// against `allowed_sections`; records before the first header are an error.
std::vector<TextRecord> lex_sectioned_text(std::string_view text, std::span<const std::string_view> allowed_sections);

/// Strict decimal number: optional sign, digits, optional fraction. No exponent, inf or nan.
double parse_decimal(std::string_view field, std::size_t line, std::string_view what);
long long parse_integer(std::string_view field, std::size_t line, std::string_view what);

/// Shortest fixed-notation text that parses back to the same double.
std::string format_decimal(double value);

}  // namespace hilfed
