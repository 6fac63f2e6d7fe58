#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "apsf/rational.hpp"

using apsf::Rational;

TEST_CASE("construction normalizes sign and gcd") {
    CHECK(Rational(2, 4) == Rational(1, 2));
    CHECK(Rational(-2, 4) == Rational(-1, 2));
    CHECK(Rational(2, -4) == Rational(-1, 2));
    CHECK(Rational(0, 7) == Rational(0));
    CHECK(Rational(0, -7).den() == 1);
    CHECK_THROWS_AS(Rational(1, 0), std::invalid_argument);
}

TEST_CASE("arithmetic stays exact") {
    Rational a(1, 3);
    Rational b(1, 6);
    CHECK(a + b == Rational(1, 2));
    CHECK(a - b == Rational(1, 6));
    CHECK(a * b == Rational(1, 18));
    CHECK(a / b == Rational(2));

    Rational sum;
    for (int i = 0; i < 50; ++i) sum += Rational(1, 50);
    CHECK(sum == Rational(1));
}

TEST_CASE("comparisons avoid floating point") {
    CHECK(Rational(1, 3) < Rational(34, 100));
    CHECK(Rational(33, 100) < Rational(1, 3));
    CHECK(Rational(1, 50) <= Rational(1, 50));
    CHECK(Rational(2, 50) > Rational(1, 50));
    CHECK(Rational(7, 50) >= Rational(13, 100));
}

TEST_CASE("threshold acceptance at exact equality") {
    Rational delta(1, 50);
    Rational gain = Rational(41, 50) - Rational(40, 50);
    CHECK(gain >= delta);
    Rational below = Rational(40, 50) - Rational(40, 50);
    CHECK_FALSE(below >= delta);
}

TEST_CASE("parse accepts fractions, decimals, and integers") {
    CHECK(Rational::parse("1/50") == Rational(1, 50));
    CHECK(Rational::parse("-3/9") == Rational(-1, 3));
    CHECK(Rational::parse("0.25") == Rational(1, 4));
    CHECK(Rational::parse("-0.2") == Rational(-1, 5));
    CHECK(Rational::parse("0.02") == Rational(1, 50));
    CHECK(Rational::parse("7") == Rational(7));
    CHECK(Rational::parse(" 3 / 4 ") == Rational(3, 4));
    CHECK_THROWS(Rational::parse(""));
}

TEST_CASE("to_string round-trips through parse") {
    for (auto r : {Rational(1, 50), Rational(-7, 3), Rational(4), Rational(0)}) {
        CHECK(Rational::parse(r.to_string()) == r);
    }
    CHECK(Rational(1, 2).to_string() == "1/2");
    CHECK(Rational(5).to_string() == "5");
}

TEST_CASE("to_double matches the exact ratio") {
    CHECK(Rational(1, 4).to_double() == doctest::Approx(0.25));
    CHECK(Rational(-1, 3).to_double() == doctest::Approx(-1.0 / 3.0));
}
