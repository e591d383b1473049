#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scmprobe/interventions.hpp"
#include "scmprobe/rational.hpp"
#include "scmprobe/rng.hpp"

using namespace scmprobe;

namespace {

std::vector<SegmentPoolEntry> small_pool() {
  return {{"i1", "segment from one"},
          {"i2", "segment from two"},
          {"i3", "segment from three"}};
}

ProblemInstance numeric_instance(const std::string& gold) {
  ProblemInstance p;
  p.id = "b1";
  p.question = "Compute the value.";
  p.kind = AnswerKind::numeric;
  p.gold.value = gold;
  p.dataset = "unit";
  return p;
}

ProblemInstance mc_instance(const std::string& gold, std::size_t options) {
  ProblemInstance p;
  p.id = "b2";
  p.question = "Pick.";
  p.kind = AnswerKind::multiple_choice;
  for (std::size_t i = 0; i < options; ++i) p.options.push_back("o" + std::to_string(i));
  p.gold.value = gold;
  p.dataset = "unit";
  return p;
}

std::vector<std::string> tokens_of(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

TEST_CASE("mismatch never draws the target's own segment") {
  auto pool = small_pool();
  Rng rng(11);
  std::map<std::string, int> sources;
  for (int i = 0; i < 500; ++i) {
    Replacement r = make_replacement(pool, "i2", "segment from two",
                                     ReplacementStrategy::mismatch, rng);
    CHECK_FALSE(r.degenerate);
    CHECK(r.source_id != "i2");
    CHECK(r.text != "segment from two");
    ++sources[r.source_id];
  }
  // Both donors should actually occur.
  CHECK(sources["i1"] > 0);
  CHECK(sources["i3"] > 0);
}

TEST_CASE("mismatch requires a donor") {
  std::vector<SegmentPoolEntry> only_self = {{"i1", "mine"}};
  Rng rng(1);
  CHECK_THROWS_WITH_AS(
      make_replacement(only_self, "i1", "mine", ReplacementStrategy::mismatch, rng),
      doctest::Contains("i1"), std::runtime_error);

  std::vector<SegmentPoolEntry> empty;
  CHECK_THROWS(make_replacement(empty, "i1", "mine", ReplacementStrategy::mismatch, rng));
}

TEST_CASE("shuffled permutes tokens without losing any") {
  Rng rng(3);
  std::string own = "alpha beta gamma delta epsilon zeta";
  Replacement r = make_replacement({}, "i1", own, ReplacementStrategy::shuffled, rng);
  CHECK_FALSE(r.degenerate);
  CHECK(r.text != own);

  auto before = tokens_of(own);
  auto after = tokens_of(r.text);
  std::sort(before.begin(), before.end());
  std::sort(after.begin(), after.end());
  CHECK(before == after);
}

TEST_CASE("shuffled degenerates on segments it cannot reorder") {
  Rng rng(4);
  Replacement one = make_replacement({}, "i1", "single", ReplacementStrategy::shuffled, rng);
  CHECK(one.degenerate);
  CHECK(one.text == "single");

  Replacement empty = make_replacement({}, "i1", "", ReplacementStrategy::shuffled, rng);
  CHECK(empty.degenerate);

  // All-identical tokens: every permutation equals the original.
  Replacement same =
      make_replacement({}, "i1", "same same same same", ReplacementStrategy::shuffled, rng);
  CHECK(same.degenerate);
}

TEST_CASE("noise fabricates plausible but unrelated steps") {
  Rng rng(9);
  std::string own = "line one\nline two\nline three";
  Replacement r = make_replacement({}, "i1", own, ReplacementStrategy::noise, rng);
  CHECK_FALSE(r.degenerate);
  CHECK(r.source_id.empty());

  // Line count tracks the original within one.
  long long lines = 1 + std::count(r.text.begin(), r.text.end(), '\n');
  CHECK(lines >= 2);
  CHECK(lines <= 4);

  // Each line is "Step i: combine a and b to get c." with c = a + b.
  std::istringstream in(r.text);
  std::string line;
  int index = 0;
  while (std::getline(in, line)) {
    ++index;
    long long a = 0, b = 0, c = 0;
    int i = 0;
    int scanned = std::sscanf(line.c_str(), "Step %d: combine %lld and %lld to get %lld.",
                              &i, &a, &b, &c);
    CHECK(scanned == 4);
    CHECK(i == index);
    CHECK(a + b == c);
  }
}

TEST_CASE("replacement draws are deterministic in the seed") {
  auto pool = small_pool();
  Rng r1(42), r2(42), r3(43);
  Replacement a = make_replacement(pool, "i1", "", ReplacementStrategy::mismatch, r1);
  Replacement b = make_replacement(pool, "i1", "", ReplacementStrategy::mismatch, r2);
  CHECK(a.source_id == b.source_id);
  bool diverged = false;
  for (int i = 0; i < 50 && !diverged; ++i)
    diverged = make_replacement(pool, "i1", "", ReplacementStrategy::mismatch, r1).source_id !=
               make_replacement(pool, "i1", "", ReplacementStrategy::mismatch, r3).source_id;
  CHECK(diverged);
}

TEST_CASE("numeric bias suggests a wrong nearby value") {
  ProblemInstance p = numeric_instance("42");
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    InstructionBias bias = make_instruction_bias(p, BiasStrategy::numeric_offset, rng);
    CHECK(bias.w != "42");
    auto w = parse_rational(bias.w);
    REQUIRE(w.has_value());
    // w = gold + k for integer k in [-9, 9] minus zero.
    CHECK(w->is_integer());
    long long diff = static_cast<long long>(w->num) - 42;
    CHECK(diff != 0);
    CHECK(diff >= -9);
    CHECK(diff <= 9);
    CHECK(bias.biased_question ==
          "Compute the value. I think the answer is " + bias.w + ".");
  }
}

TEST_CASE("numeric bias works on fractional gold values") {
  ProblemInstance p = numeric_instance("7/2");
  Rng rng(8);
  InstructionBias bias = make_instruction_bias(p, BiasStrategy::numeric_offset, rng);
  auto w = parse_rational(bias.w);
  REQUIRE(w.has_value());
  CHECK(*w != *parse_rational("7/2"));
  CHECK(w->den == 2);  // gold + integer keeps the denominator
}

TEST_CASE("choice bias picks a wrong label and renders it in parens") {
  ProblemInstance p = mc_instance("B", 4);
  Rng rng(5);
  std::map<std::string, int> seen;
  for (int i = 0; i < 400; ++i) {
    InstructionBias bias = make_instruction_bias(p, BiasStrategy::wrong_option, rng);
    CHECK(bias.w != "B");
    CHECK((bias.w == "A" || bias.w == "C" || bias.w == "D"));
    CHECK(bias.w_display == "(" + bias.w + ")");
    CHECK(bias.biased_question.find(" I think the answer is (" + bias.w + ").") !=
          std::string::npos);
    ++seen[bias.w];
  }
  CHECK(seen.size() == 3);
}

TEST_CASE("bias strategies reject mismatched instance kinds") {
  Rng rng(1);
  ProblemInstance num = numeric_instance("5");
  ProblemInstance mc = mc_instance("A", 3);
  CHECK_THROWS(make_instruction_bias(num, BiasStrategy::wrong_option, rng));
  CHECK_THROWS(make_instruction_bias(mc, BiasStrategy::numeric_offset, rng));
}

TEST_CASE("strategy names round-trip") {
  for (auto s : {ReplacementStrategy::mismatch, ReplacementStrategy::shuffled,
                 ReplacementStrategy::noise})
    CHECK(replacement_strategy_from_string(to_string(s)) == s);
  for (auto s : {BiasStrategy::numeric_offset, BiasStrategy::wrong_option})
    CHECK(bias_strategy_from_string(to_string(s)) == s);
  CHECK_THROWS(replacement_strategy_from_string("swap"));
  CHECK_THROWS(bias_strategy_from_string(""));
}
