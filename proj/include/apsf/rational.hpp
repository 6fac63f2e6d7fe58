#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace apsf {

// Exact rational arithmetic for scores and acceptance thresholds.
// Scores are small fractions (counts over dataset sizes), so int64
// components with __int128 cross-multiplication never overflow here.
class Rational {
public:
    constexpr Rational() : num_(0), den_(1) {}
    constexpr Rational(std::int64_t value) : num_(value), den_(1) {}

    Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ == 0) throw std::invalid_argument("Rational: zero denominator");
        normalize();
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    Rational operator+(const Rational& other) const {
        return Rational(num_ * other.den_ + other.num_ * den_, den_ * other.den_);
    }
    Rational operator-(const Rational& other) const {
        return Rational(num_ * other.den_ - other.num_ * den_, den_ * other.den_);
    }
    Rational operator*(const Rational& other) const {
        return Rational(num_ * other.num_, den_ * other.den_);
    }
    Rational operator/(const Rational& other) const {
        if (other.num_ == 0) throw std::invalid_argument("Rational: division by zero");
        return Rational(num_ * other.den_, den_ * other.num_);
    }
    Rational& operator+=(const Rational& other) { return *this = *this + other; }
    Rational& operator-=(const Rational& other) { return *this = *this - other; }

    bool operator==(const Rational& other) const {
        return num_ == other.num_ && den_ == other.den_;
    }
    bool operator!=(const Rational& other) const { return !(*this == other); }
    bool operator<(const Rational& other) const {
        return (__int128)num_ * other.den_ < (__int128)other.num_ * den_;
    }
    bool operator>(const Rational& other) const { return other < *this; }
    bool operator<=(const Rational& other) const { return !(other < *this); }
    bool operator>=(const Rational& other) const { return !(*this < other); }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    // "num/den" (integers render without the denominator).
    std::string to_string() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

    // Accepts "a/b", decimal strings ("0.25" parses exactly as 1/4), and
    // plain integers.
    static Rational parse(const std::string& text);

private:
    void normalize() {
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
        if (num_ == 0) den_ = 1;
    }

    std::int64_t num_;
    std::int64_t den_;
};

} // namespace apsf
