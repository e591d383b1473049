#include "scmprobe/grading.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <vector>

#include "scmprobe/rational.hpp"

namespace scmprobe {

namespace {

std::string lowered(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Finds the last "\boxed{...}" group (any case) and returns its body.
std::optional<std::string> last_boxed_body(std::string_view text) {
  std::string low = lowered(text);
  std::size_t best = std::string::npos;
  std::size_t pos = 0;
  while ((pos = low.find("\\boxed{", pos)) != std::string::npos) {
    best = pos;
    ++pos;
  }
  if (best == std::string::npos) return std::nullopt;
  std::size_t open = best + 6;  // index of '{'
  int depth = 0;
  for (std::size_t i = open; i < text.size(); ++i) {
    if (text[i] == '{') ++depth;
    if (text[i] == '}') {
      if (--depth == 0) return std::string(text.substr(open + 1, i - open - 1));
    }
  }
  return std::nullopt;  // unbalanced braces
}

// Whitespace tokens with decorative punctuation stripped from both ends.
std::vector<std::string> clean_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_strippable = [](char c) {
    return c == '(' || c == ')' || c == '[' || c == ']' || c == '*' || c == '"' ||
           c == '\'' || c == ':' || c == ';' || c == ',' || c == '.' || c == '!' ||
           c == '?' || c == '=' || c == '$';
  };
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    std::string_view tok = text.substr(start, i - start);
    std::size_t b = 0, e = tok.size();
    while (b < e && is_strippable(tok[b])) {
      // A leading '.' can start a decimal like ".5"; keep it if a digit follows.
      if (tok[b] == '.' && b + 1 < e && std::isdigit(static_cast<unsigned char>(tok[b + 1]))) break;
      ++b;
    }
    while (e > b && is_strippable(tok[e - 1])) --e;
    if (e > b) out.emplace_back(tok.substr(b, e - b));
  }
  return out;
}

// A token like "1,234", "-3/4", "3.5" or "\frac{1}{2}" that parses exactly.
std::optional<Rational> token_as_number(const std::string& tok) {
  // Cheap pre-filter: must contain a digit.
  if (std::none_of(tok.begin(), tok.end(),
                   [](unsigned char c) { return std::isdigit(c); }))
    return std::nullopt;
  return parse_rational(tok);
}

std::optional<std::string> token_as_label(const std::string& tok, std::size_t option_count) {
  if (tok.size() != 1) return std::nullopt;
  char c = tok[0];
  if (!std::isalpha(static_cast<unsigned char>(c))) return std::nullopt;
  char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (option_count > 0 && static_cast<std::size_t>(up - 'A') >= option_count) return std::nullopt;
  return std::string(1, up);
}

// Position just past the first "answer is" / "answer:" phrase, if any.
std::optional<std::size_t> after_answer_phrase(std::string_view text) {
  std::string low = lowered(text);
  std::size_t p = low.find("answer is");
  if (p != std::string::npos) return p + 9;
  p = low.find("answer:");
  if (p != std::string::npos) return p + 7;
  return std::nullopt;
}

ExtractedAnswer extract_numeric(std::string_view text) {
  ExtractedAnswer out;
  out.kind = AnswerKind::numeric;

  if (auto boxed = last_boxed_body(text)) {
    if (auto r = parse_rational(*boxed)) {
      out.value = r->str();
      out.confidence = ExtractConfidence::marker;
      return out;
    }
  }
  if (auto pos = after_answer_phrase(text)) {
    for (const auto& tok : clean_tokens(text.substr(*pos))) {
      if (auto r = token_as_number(tok)) {
        out.value = r->str();
        out.confidence = ExtractConfidence::marker;
        return out;
      }
    }
  }
  auto tokens = clean_tokens(text);
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
    if (auto r = token_as_number(*it)) {
      out.value = r->str();
      out.confidence = ExtractConfidence::fallback_last_number;
      return out;
    }
  }
  out.confidence = ExtractConfidence::none;
  return out;
}

ExtractedAnswer extract_choice(std::string_view text, std::size_t option_count) {
  ExtractedAnswer out;
  out.kind = AnswerKind::multiple_choice;

  std::size_t scan_from = 0;
  bool have_marker = false;
  if (auto boxed = last_boxed_body(text)) {
    if (auto l = token_as_label(*boxed, option_count)) {
      out.value = *l;
      out.confidence = ExtractConfidence::marker;
      return out;
    }
  }
  if (auto pos = after_answer_phrase(text)) {
    scan_from = *pos;
    have_marker = true;
  }
  if (have_marker) {
    for (const auto& tok : clean_tokens(text.substr(scan_from))) {
      if (auto l = token_as_label(tok, option_count)) {
        out.value = *l;
        out.confidence = ExtractConfidence::marker;
        return out;
      }
    }
  }
  auto tokens = clean_tokens(text);
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
    if (auto l = token_as_label(*it, option_count)) {
      out.value = *l;
      out.confidence = ExtractConfidence::fallback_last_number;
      return out;
    }
  }
  out.confidence = ExtractConfidence::none;
  return out;
}

}  // namespace

ExtractedAnswer extract_answer(std::string_view answer_text, AnswerKind kind,
                               std::size_t option_count) {
  if (kind == AnswerKind::numeric) return extract_numeric(answer_text);
  return extract_choice(answer_text, option_count);
}

bool grade(const ExtractedAnswer& extracted, const ProblemInstance& instance) {
  if (extracted.kind != instance.kind)
    throw std::runtime_error("grade: extraction kind does not match instance '" +
                             instance.id + "'");
  if (extracted.confidence == ExtractConfidence::none) return false;
  if (instance.kind == AnswerKind::multiple_choice) return extracted.value == instance.gold.value;

  auto gold = parse_rational(instance.gold.value);
  if (!gold)
    throw std::runtime_error("grade: malformed gold value on instance '" + instance.id + "'");
  auto got = parse_rational(extracted.value);
  if (!got) return false;
  return *got == *gold;
}

}  // namespace scmprobe
