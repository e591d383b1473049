#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace scmprobe {

// Exact rational value used for grading numeric answers. Equality is exact:
// "14/4", "3.5" and "7/2" all normalize to the same value, and no float
// round-trip is involved anywhere. Backed by 128-bit integers, which covers
// every answer this tool generates or grades (18-digit operands and their
// products) with room to spare; inputs past that fail to parse rather than
// silently losing precision.
struct Rational {
  __int128 num = 0;
  __int128 den = 1;  // always > 0, gcd(|num|, den) == 1

  static Rational make(__int128 n, __int128 d);

  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  bool operator!=(const Rational& o) const { return !(*this == o); }

  Rational add_int(long long k) const;
  bool is_integer() const { return den == 1; }

  // Canonical text: integer as-is, otherwise "num/den" reduced.
  std::string str() const;
};

// Accepts integers ("42", "-7", "1,234", "007"), decimals ("3.50", ".5"),
// plain fractions ("14/4", "-3/9") and LaTeX fractions ("\frac{3}{4}",
// "\dfrac{-1}{2}", "-\frac{1}{2}"), with surrounding whitespace and an
// optional leading "$" or trailing "%"/"." stripped. Returns nullopt for
// anything else (including division by zero and values that overflow).
std::optional<Rational> parse_rational(std::string_view text);

std::string int128_to_string(__int128 v);

}  // namespace scmprobe
