#include "edgebench/numfmt.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <system_error>

namespace edgebench {

std::string format_shortest(double value) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

std::string format_fixed(double value, int decimals) {
    if (decimals < 0) decimals = 0;
    std::array<char, 512> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                             std::chars_format::fixed, decimals);
    std::string out(buf.data(), res.ptr);
    if (!out.empty() && out.front() == '-' &&
        out.find_first_not_of("-0.") == std::string::npos) {
        out.erase(0, 1);
    }
    return out;
}

std::optional<double> parse_double(std::string_view text) noexcept {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

}  // namespace edgebench

namespace edgebench {

std::string format_number(double value) {
    std::string out = format_shortest(value);
    if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
    return out;
}

}  // namespace edgebench
