#include "tde/poly.hpp"

#include <catch2/catch_amalgamated.hpp>

using tde::AmplitudePoly;
using tde::PolyVars;
using tde::Rational;

namespace {

const PolyVars kVars{{"N1", "N2"}, {"kappa", "lambda"}};

AmplitudePoly mono(const AmplitudePoly::Exps& e, const Rational& c) {
    AmplitudePoly p(kVars);
    p.add_term(e, c);
    return p;
}

} // namespace

TEST_CASE("term arithmetic cancels exactly") {
    AmplitudePoly p(kVars);
    p.add_term({1, 0, 0, 1}, Rational(1, 3));
    p.add_term({1, 0, 0, 1}, Rational(1, 6));
    REQUIRE(p.coefficient({1, 0, 0, 1}) == Rational(1, 2));
    p.add_term({1, 0, 0, 1}, Rational(-1, 2));
    REQUIRE(p.is_zero());
}

TEST_CASE("multiplication respects coupling truncation") {
    AmplitudePoly a = mono({1, 0, 0, 1}, 2); // 2 N1 lambda
    AmplitudePoly b = mono({0, 1, 1, 0}, 3); // 3 N2 kappa
    AmplitudePoly ab = a * b;
    REQUIRE(ab.coefficient({1, 1, 1, 1}) == Rational(6));
    REQUIRE(a.mul(b, 1).is_zero());
    REQUIRE(a.mul(b, 2).coefficient({1, 1, 1, 1}) == Rational(6));
}

TEST_CASE("exp and log are mutually inverse on series") {
    AmplitudePoly p = mono({1, 0, 0, 1}, Rational(1, 2)) + mono({0, 2, 1, 0}, Rational(-3, 7)) +
                      mono({1, 1, 1, 1}, Rational(5, 11));
    AmplitudePoly z = p.exp_series(4);
    REQUIRE(z.coefficient({0, 0, 0, 0}) == Rational(1));
    REQUIRE(z.log_series(4) == p.truncated(4));
}

TEST_CASE("exp matches the hand expansion of a one-term series") {
    AmplitudePoly p = mono({2, 0, 0, 1}, 1); // N1^2 lambda
    AmplitudePoly z = p.exp_series(3);
    REQUIRE(z.coefficient({0, 0, 0, 0}) == Rational(1));
    REQUIRE(z.coefficient({2, 0, 0, 1}) == Rational(1));
    REQUIRE(z.coefficient({4, 0, 0, 2}) == Rational(1, 2));
    REQUIRE(z.coefficient({6, 0, 0, 3}) == Rational(1, 6));
    REQUIRE(z.term_count() == 4);
}

TEST_CASE("exp rejects a constant part, log requires leading 1") {
    AmplitudePoly with_const = AmplitudePoly::constant(kVars, 2);
    REQUIRE_THROWS_AS(with_const.exp_series(2), std::invalid_argument);
    AmplitudePoly no_one = mono({0, 0, 0, 1}, 1);
    REQUIRE_THROWS_AS(no_one.log_series(2), std::invalid_argument);
}

TEST_CASE("coupling Euler operator scales by the exponent") {
    AmplitudePoly p = mono({0, 0, 2, 1}, Rational(5)) + mono({1, 0, 0, 3}, Rational(7));
    AmplitudePoly dk = p.coupling_euler("kappa");
    REQUIRE(dk.coefficient({0, 0, 2, 1}) == Rational(10));
    REQUIRE(dk.coefficient({1, 0, 0, 3}) == Rational(0));
    AmplitudePoly dl = p.coupling_euler("lambda");
    REQUIRE(dl.coefficient({0, 0, 2, 1}) == Rational(5));
    REQUIRE(dl.coefficient({1, 0, 0, 3}) == Rational(21));
}

TEST_CASE("size sign flip and merge") {
    AmplitudePoly p = mono({1, 2, 0, 1}, 3) + mono({2, 1, 1, 0}, 5);
    AmplitudePoly f = p.flip_size_sign("N1");
    REQUIRE(f.coefficient({1, 2, 0, 1}) == Rational(-3));
    REQUIRE(f.coefficient({2, 1, 1, 0}) == Rational(5));

    AmplitudePoly m = p.merge_sizes("N");
    REQUIRE(m.vars().sizes == std::vector<std::string>{"N"});
    REQUIRE(m.coefficient({3, 0, 1}) == Rational(3));
    REQUIRE(m.coefficient({3, 1, 0}) == Rational(5));
}

TEST_CASE("canonical term order sorts by coupling degree then lex") {
    AmplitudePoly p = mono({0, 0, 0, 2}, 1) + mono({5, 0, 0, 1}, 1) + mono({0, 1, 1, 0}, 1);
    auto t = p.sorted_terms();
    REQUIRE(t.size() == 3);
    REQUIRE(t[0].first == AmplitudePoly::Exps{0, 1, 1, 0});
    REQUIRE(t[1].first == AmplitudePoly::Exps{5, 0, 0, 1});
    REQUIRE(t[2].first == AmplitudePoly::Exps{0, 0, 0, 2});
}

TEST_CASE("rational round trip text form") {
    REQUIRE(tde::rational_to_string(Rational(-3, 4)) == "-3/4");
    REQUIRE(tde::rational_from_string("-3/4") == Rational(-3, 4));
    REQUIRE(tde::rational_from_string("7") == Rational(7));
    REQUIRE(tde::rational_to_string(Rational(5)) == "5/1");
}
