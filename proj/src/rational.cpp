#include "apsf/rational.hpp"

#include <cctype>
#include <cstdlib>

namespace apsf {

Rational Rational::parse(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    if (s.empty()) throw std::invalid_argument("Rational::parse: empty string");

    auto slash = s.find('/');
    if (slash != std::string::npos) {
        std::int64_t num = std::stoll(s.substr(0, slash));
        std::int64_t den = std::stoll(s.substr(slash + 1));
        return Rational(num, den);
    }

    auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(std::stoll(s));

    bool negative = !s.empty() && s[0] == '-';
    std::string digits = s;
    digits.erase(dot, 1);
    if (negative) digits.erase(0, 1);
    if (digits.empty()) throw std::invalid_argument("Rational::parse: '" + text + "'");
    std::int64_t num = digits.empty() ? 0 : std::stoll(digits);
    std::int64_t den = 1;
    for (std::size_t i = dot; i < s.size() - 1; ++i) den *= 10;
    return Rational(negative ? -num : num, den);
}

} // namespace apsf
