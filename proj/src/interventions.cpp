#include "scmprobe/interventions.hpp"

#include <sstream>
#include <stdexcept>

#include "scmprobe/rational.hpp"

namespace scmprobe {

const char* to_string(ReplacementStrategy s) {
  switch (s) {
    case ReplacementStrategy::mismatch: return "mismatch";
    case ReplacementStrategy::shuffled: return "shuffled";
    case ReplacementStrategy::noise: return "noise";
  }
  throw std::logic_error("unreachable ReplacementStrategy");
}

ReplacementStrategy replacement_strategy_from_string(const std::string& s) {
  if (s == "mismatch") return ReplacementStrategy::mismatch;
  if (s == "shuffled") return ReplacementStrategy::shuffled;
  if (s == "noise") return ReplacementStrategy::noise;
  throw std::runtime_error("unknown replacement strategy: " + s);
}

const char* to_string(BiasStrategy s) {
  switch (s) {
    case BiasStrategy::numeric_offset: return "numeric_offset";
    case BiasStrategy::wrong_option: return "wrong_option";
  }
  throw std::logic_error("unreachable BiasStrategy");
}

BiasStrategy bias_strategy_from_string(const std::string& s) {
  if (s == "numeric_offset") return BiasStrategy::numeric_offset;
  if (s == "wrong_option") return BiasStrategy::wrong_option;
  throw std::runtime_error("unknown bias strategy: " + s);
}

namespace {

std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += " ";
    out += tokens[i];
  }
  return out;
}

Replacement shuffled_replacement(const std::string& own_text, Rng& rng) {
  auto tokens = whitespace_tokens(own_text);
  if (tokens.size() <= 1) return {.text = own_text, .source_id = "", .degenerate = true};
  auto original = tokens;
  // A permutation can land on the original order when tokens repeat; retry a
  // few times before declaring the segment unshuffleable.
  for (int attempt = 0; attempt < 8; ++attempt) {
    rng.shuffle(tokens);
    if (tokens != original) return {.text = join_tokens(tokens), .source_id = ""};
  }
  return {.text = own_text, .source_id = "", .degenerate = true};
}

Replacement noise_replacement(const std::string& own_text, Rng& rng) {
  // Match the shape of the segment being replaced: same number of lines,
  // give or take one, but with content unrelated to any instance.
  long long own_lines = 0;
  bool in_line = false;
  for (char ch : own_text) {
    if (ch == '\n') in_line = false;
    else if (!in_line) {
      in_line = true;
      ++own_lines;
    }
  }
  long long k = own_lines + rng.uniform_range(-1, 1);
  if (k < 1) k = 1;
  std::string out;
  for (long long i = 1; i <= k; ++i) {
    long long a = rng.uniform_range(10, 99);
    long long b = rng.uniform_range(10, 99);
    out += "Step " + std::to_string(i) + ": combine " + std::to_string(a) + " and " +
           std::to_string(b) + " to get " + std::to_string(a + b) + ".";
    if (i < k) out += "\n";
  }
  return {.text = out, .source_id = ""};
}

}  // namespace

Replacement make_replacement(const std::vector<SegmentPoolEntry>& pool,
                             const std::string& target_id, const std::string& own_text,
                             ReplacementStrategy strategy, Rng& rng) {
  switch (strategy) {
    case ReplacementStrategy::shuffled:
      return shuffled_replacement(own_text, rng);
    case ReplacementStrategy::noise:
      return noise_replacement(own_text, rng);
    case ReplacementStrategy::mismatch:
      break;
  }

  std::vector<const SegmentPoolEntry*> candidates;
  candidates.reserve(pool.size());
  for (const auto& e : pool)
    if (e.instance_id != target_id) candidates.push_back(&e);
  if (candidates.empty())
    throw std::runtime_error(
        "mismatch replacement for '" + target_id +
        "': pool has no segment from another instance (need pool size >= 2)");
  const SegmentPoolEntry* pick = candidates[rng.uniform(candidates.size())];
  return {.text = pick->text, .source_id = pick->instance_id};
}

InstructionBias make_instruction_bias(const ProblemInstance& instance, BiasStrategy strategy,
                                      Rng& rng) {
  InstructionBias out;
  if (strategy == BiasStrategy::numeric_offset) {
    if (instance.kind != AnswerKind::numeric)
      throw std::runtime_error("numeric_offset bias on non-numeric instance '" +
                               instance.id + "'");
    auto gold = parse_rational(instance.gold.value);
    if (!gold)
      throw std::runtime_error("instance '" + instance.id + "': malformed gold value");
    // Adding a nonzero integer can never reproduce the gold value, but keep
    // the guard so a future strategy change cannot silently break the
    // invariant.
    Rational w;
    do {
      long long k = rng.uniform_range(-9, 9);
      while (k == 0) k = rng.uniform_range(-9, 9);
      w = gold->add_int(k);
    } while (w == *gold);
    out.w = w.str();
    out.w_display = out.w;
  } else {
    if (instance.kind != AnswerKind::multiple_choice)
      throw std::runtime_error("wrong_option bias on non-choice instance '" +
                               instance.id + "'");
    std::vector<std::string> wrong;
    for (std::size_t i = 0; i < instance.options.size(); ++i) {
      std::string label = ProblemInstance::option_label(i);
      if (label != instance.gold.value) wrong.push_back(label);
    }
    if (wrong.empty())
      throw std::runtime_error("instance '" + instance.id +
                               "': no wrong option available for bias");
    out.w = wrong[rng.uniform(wrong.size())];
    out.w_display = "(" + out.w + ")";
  }
  out.biased_question = instance.question + " I think the answer is " + out.w_display + ".";
  return out;
}

}  // namespace scmprobe
