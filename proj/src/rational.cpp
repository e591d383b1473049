#include "scmprobe/rational.hpp"

#include <cctype>
#include <cstdlib>
#include <stdexcept>

namespace scmprobe {

namespace {

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Parses an optionally signed decimal integer of at most 37 digits into
// __int128. Returns false on anything else.
bool parse_int128(std::string_view s, __int128& out) {
  if (s.empty()) return false;
  bool neg = false;
  std::size_t i = 0;
  if (s[0] == '+' || s[0] == '-') {
    neg = s[0] == '-';
    i = 1;
  }
  if (i == s.size()) return false;
  int digits = 0;
  __int128 v = 0;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    if (++digits > 37) return false;
    v = v * 10 + (s[i] - '0');
  }
  out = neg ? -v : v;
  return true;
}

void strip_ws(std::string_view& s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
}

// Extracts "{...}" starting at s[pos] (which must be '{'), returns the body
// and advances pos past the closing brace. Handles one level of nesting.
bool take_braced(std::string_view s, std::size_t& pos, std::string_view& body) {
  if (pos >= s.size() || s[pos] != '{') return false;
  int depth = 0;
  std::size_t start = pos + 1;
  for (std::size_t i = pos; i < s.size(); ++i) {
    if (s[i] == '{') ++depth;
    if (s[i] == '}') {
      if (--depth == 0) {
        body = s.substr(start, i - start);
        pos = i + 1;
        return true;
      }
    }
  }
  return false;
}

std::optional<Rational> parse_decimal_or_int(std::string_view s) {
  // Drop thousands separators; "1,234" is a single number, and a comma not
  // between digits disqualifies the token entirely.
  std::string cleaned;
  cleaned.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ',') {
      bool digit_l = i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1]));
      bool digit_r = i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]));
      if (!digit_l || !digit_r) return std::nullopt;
      continue;
    }
    cleaned.push_back(s[i]);
  }
  std::size_t dot = cleaned.find('.');
  if (dot == std::string::npos) {
    __int128 v;
    if (!parse_int128(cleaned, v)) return std::nullopt;
    return Rational::make(v, 1);
  }
  if (cleaned.find('.', dot + 1) != std::string::npos) return std::nullopt;
  std::string head = cleaned.substr(0, dot);
  std::string frac = cleaned.substr(dot + 1);
  if (frac.empty()) return std::nullopt;
  if (frac.size() > 30) return std::nullopt;
  bool neg = !head.empty() && head[0] == '-';
  if (!head.empty() && (head[0] == '+' || head[0] == '-')) head.erase(0, 1);
  if (head.empty()) head = "0";
  __int128 whole, part;
  if (!parse_int128(head, whole) || !parse_int128(frac, part)) return std::nullopt;
  __int128 den = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) {
    if (den > (__int128(1) << 110)) return std::nullopt;
    den *= 10;
  }
  __int128 num = whole * den + part;
  if (neg) num = -num;
  return Rational::make(num, den);
}

}  // namespace

Rational Rational::make(__int128 n, __int128 d) {
  if (d == 0) throw std::invalid_argument("Rational: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  __int128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  return Rational{n, d};
}

Rational Rational::add_int(long long k) const {
  return Rational::make(num + static_cast<__int128>(k) * den, den);
}

std::string Rational::str() const {
  if (den == 1) return int128_to_string(num);
  return int128_to_string(num) + "/" + int128_to_string(den);
}

std::string int128_to_string(__int128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
  std::string s;
  while (u > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) s.push_back('-');
  return {s.rbegin(), s.rend()};
}

std::optional<Rational> parse_rational(std::string_view text) {
  std::string_view s = text;
  strip_ws(s);
  if (!s.empty() && s.front() == '$') s.remove_prefix(1);
  if (!s.empty() && (s.back() == '%' || s.back() == '.')) {
    // A trailing dot is sentence punctuation, not a decimal point.
    if (s.back() == '.' || s.back() == '%') s.remove_suffix(1);
  }
  strip_ws(s);
  if (s.empty()) return std::nullopt;

  bool outer_neg = false;
  if (s.front() == '-' || s.front() == '+') {
    // Allow the sign to sit outside a LaTeX fraction: "-\frac{1}{2}".
    if (s.size() > 1 && s[1] == '\\') {
      outer_neg = s.front() == '-';
      s.remove_prefix(1);
      strip_ws(s);
    }
  }

  std::optional<Rational> r;
  if (s.size() > 1 && s[0] == '\\') {
    std::size_t pos = 0;
    if (s.rfind("\\frac", 0) == 0) pos = 5;
    else if (s.rfind("\\dfrac", 0) == 0) pos = 6;
    else if (s.rfind("\\tfrac", 0) == 0) pos = 6;
    else return std::nullopt;
    std::string_view a, b;
    if (!take_braced(s, pos, a) || !take_braced(s, pos, b)) return std::nullopt;
    if (pos != s.size()) return std::nullopt;
    __int128 n, d;
    if (!parse_int128(std::string(a), n) || !parse_int128(std::string(b), d)) return std::nullopt;
    if (d == 0) return std::nullopt;
    r = Rational::make(n, d);
  } else if (std::size_t slash = s.find('/'); slash != std::string_view::npos) {
    __int128 n, d;
    if (!parse_int128(std::string(s.substr(0, slash)), n) ||
        !parse_int128(std::string(s.substr(slash + 1)), d))
      return std::nullopt;
    if (d == 0) return std::nullopt;
    r = Rational::make(n, d);
  } else {
    r = parse_decimal_or_int(s);
  }
  if (r && outer_neg) r->num = -r->num;
  return r;
}

}  // namespace scmprobe
