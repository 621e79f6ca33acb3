#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace edgebench {

/// Shortest text that parses back to exactly `value`.
std::string format_shortest(double value);

/// Fixed-point rendering, round-half-even on exact binary ties. Never
/// produces "-0.00": negative values that round to zero print unsigned.
std::string format_fixed(double value, int decimals);

/// Whole-string parse of a finite double; surrounding blanks allowed.
std::optional<double> parse_double(std::string_view text) noexcept;

}  // namespace edgebench

namespace edgebench {

/// Shortest round-trip text that always shows a decimal point ("4.0", "1.5").
std::string format_number(double value);

}  // namespace edgebench
