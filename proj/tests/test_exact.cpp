#include <catch2/catch_amalgamated.hpp>

#include "socibench/exact.hpp"

using socibench::Exact;
using socibench::Rational;

TEST_CASE("rational parse and print round-trip") {
  CHECK(socibench::rational_from_string("13/28") == Rational(13, 28));
  CHECK(socibench::rational_from_string("-1/3") == Rational(-1, 3));
  CHECK(socibench::rational_from_string("7") == Rational(7));
  CHECK(socibench::to_string(Rational(13, 28)) == "13/28");
  CHECK(socibench::to_string(Rational(-2, 6)) == "-1/3");
  CHECK(socibench::to_string(Rational(4)) == "4");
  CHECK_THROWS_AS(socibench::rational_from_string("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(socibench::rational_from_string("x"), std::invalid_argument);
}

TEST_CASE("sqrt2 field arithmetic is exact") {
  Exact c = Exact::inv_sqrt2();
  // (1/sqrt2)^2 == 1/2 exactly: the avoider coin squared.
  CHECK(c * c == Exact(Rational(1, 2)));
  // 1 - (1 - 1/sqrt2)^2 - ... sanity on mixed ops.
  Exact one(1);
  Exact p_avoid = c;
  Exact p_engage = one - c;
  Exact no_capture = p_avoid * p_avoid;
  CHECK(no_capture.is_rational());
  CHECK(no_capture.as_rational() == Rational(1, 2));
  Exact capture = one - no_capture;
  CHECK(capture.as_rational() == Rational(1, 2));
  CHECK(p_engage + p_avoid == one);
}

TEST_CASE("sqrt2 field sign and ordering") {
  Exact s2 = Exact::sqrt2();
  CHECK(s2.sign() == 1);
  CHECK((-s2).sign() == -1);
  // 3/2 > sqrt2 > 7/5.
  CHECK(Exact(Rational(3, 2)) > s2);
  CHECK(s2 > Exact(Rational(7, 5)));
  // -1 + sqrt2 > 0, 1 - sqrt2 < 0.
  CHECK((Exact(-1) + s2).sign() == 1);
  CHECK((Exact(1) - s2).sign() == -1);
  // 17/12 is a close convergent from above.
  CHECK(Exact(Rational(17, 12)) > s2);
  CHECK(Exact(Rational(41, 29)) < s2);
  CHECK(Exact() == Exact(0));
}

TEST_CASE("sqrt2 field division") {
  Exact x(Rational(3), Rational(-2));
  Exact y(Rational(1), Rational(1));
  CHECK((x / y) * y == x);
  CHECK(Exact(1) / Exact::sqrt2() == Exact::inv_sqrt2());
  CHECK_THROWS_AS(x / Exact(0), std::domain_error);
}

TEST_CASE("irrational exact values refuse as_rational") {
  CHECK_THROWS_AS(Exact::sqrt2().as_rational(), std::domain_error);
  CHECK(Exact::sqrt2().to_double() == Catch::Approx(1.41421356237).epsilon(1e-10));
}
