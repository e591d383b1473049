#include <doctest.h>

#include <optional>
#include <string>

#include "scmprobe/rational.hpp"

using namespace scmprobe;

namespace {

std::string parsed(const std::string& text) {
  auto r = parse_rational(text);
  REQUIRE(r.has_value());
  return r->str();
}

}  // namespace

TEST_CASE("Rational::make reduces and normalizes sign") {
  CHECK(Rational::make(14, 4).str() == "7/2");
  CHECK(Rational::make(-14, 4).str() == "-7/2");
  CHECK(Rational::make(14, -4).str() == "-7/2");
  CHECK(Rational::make(-14, -4).str() == "7/2");
  CHECK(Rational::make(0, 5).str() == "0");
  CHECK(Rational::make(0, -5).str() == "0");
  CHECK(Rational::make(6, 3).str() == "2");
  CHECK(Rational::make(6, 3).is_integer());
  CHECK_FALSE(Rational::make(7, 2).is_integer());
}

TEST_CASE("Rational equality is on the reduced form") {
  CHECK(Rational::make(1, 2) == Rational::make(2, 4));
  CHECK(Rational::make(-1, 2) == Rational::make(1, -2));
  CHECK(Rational::make(1, 2) != Rational::make(1, 3));
}

TEST_CASE("Rational::add_int") {
  CHECK(Rational::make(1, 2).add_int(1).str() == "3/2");
  CHECK(Rational::make(5, 1).add_int(-9).str() == "-4");
  CHECK(Rational::make(-7, 3).add_int(3).str() == "2/3");
  CHECK(Rational::make(0, 1).add_int(0).str() == "0");
}

TEST_CASE("parse_rational accepts integers with decoration") {
  CHECK(parsed("42") == "42");
  CHECK(parsed("-7") == "-7");
  CHECK(parsed("007") == "7");
  CHECK(parsed("1,234") == "1234");
  CHECK(parsed("12,345,678") == "12345678");
  CHECK(parsed("  42  ") == "42");
  CHECK(parsed("$42") == "42");
  CHECK(parsed("42%") == "42");
  CHECK(parsed("42.") == "42");
  CHECK(parsed("+5") == "5");
}

TEST_CASE("parse_rational accepts decimals") {
  CHECK(parsed("3.50") == "7/2");
  CHECK(parsed(".5") == "1/2");
  CHECK(parsed("-0.25") == "-1/4");
  CHECK(parsed("2.0") == "2");
  CHECK(parsed("-.125") == "-1/8");
}

TEST_CASE("parse_rational accepts plain and LaTeX fractions") {
  CHECK(parsed("14/4") == "7/2");
  CHECK(parsed("-3/9") == "-1/3");
  CHECK(parsed("\\frac{3}{4}") == "3/4");
  CHECK(parsed("\\dfrac{-1}{2}") == "-1/2");
  CHECK(parsed("-\\frac{1}{2}") == "-1/2");
  CHECK(parsed("\\frac{6}{4}") == "3/2");
}

TEST_CASE("parse_rational rejects non-values") {
  CHECK_FALSE(parse_rational("").has_value());
  CHECK_FALSE(parse_rational("banana").has_value());
  CHECK_FALSE(parse_rational("1/0").has_value());
  CHECK_FALSE(parse_rational("\\frac{1}{0}").has_value());
  CHECK_FALSE(parse_rational("1.2.3").has_value());
  CHECK_FALSE(parse_rational("--5").has_value());
  CHECK_FALSE(parse_rational("1/2/3").has_value());
  CHECK_FALSE(parse_rational("x = 4").has_value());
}

TEST_CASE("parse_rational caps digit count instead of overflowing") {
  // 37 significant digits exceeds what the 128-bit representation holds
  // after cross-multiplication headroom; the parser must decline, not wrap.
  std::string huge(40, '9');
  CHECK_FALSE(parse_rational(huge).has_value());
  // Long but representable values still parse.
  CHECK(parsed("123456789012345678") == "123456789012345678");
}

TEST_CASE("int128_to_string round-trips extremes") {
  CHECK(int128_to_string(0) == "0");
  CHECK(int128_to_string(-1) == "-1");
  __int128 big = 1;
  for (int i = 0; i < 38; ++i) big *= i % 2 ? 7 : 10 / 7 + 1;  // arbitrary large value
  CHECK(int128_to_string(big) == int128_to_string(big));
  // 2^100 computed independently.
  __int128 p = 1;
  for (int i = 0; i < 100; ++i) p *= 2;
  CHECK(int128_to_string(p) == "1267650600228229401496703205376");
  CHECK(int128_to_string(-p) == "-1267650600228229401496703205376");
}

TEST_CASE("canonical text survives a parse round trip") {
  const char* cases[] = {"42", "-7", "7/2", "-1/3", "0", "123456789/2"};
  for (const char* c : cases) {
    auto r = parse_rational(c);
    REQUIRE(r.has_value());
    CHECK(r->str() == c);
    auto again = parse_rational(r->str());
    REQUIRE(again.has_value());
    CHECK(*again == *r);
  }
}
