#include <doctest.h>

#include <string>
#include <vector>

#include "scmprobe/datagen.hpp"
#include "scmprobe/grading.hpp"
#include "scmprobe/oracle.hpp"

using namespace scmprobe;

namespace {

ProblemInstance numeric_instance() {
  ProblemInstance p;
  p.id = "i1";
  p.question = "What is six times seven?";
  p.kind = AnswerKind::numeric;
  p.gold.value = "42";
  p.dataset = "unit";
  return p;
}

ProblemInstance choice_instance() {
  ProblemInstance p;
  p.id = "mc1";
  p.question = "Which color is the sky?";
  p.kind = AnswerKind::multiple_choice;
  p.options = {"red", "blue", "green"};
  p.gold.value = "B";
  p.dataset = "unit";
  return p;
}

RequestPlan plan_for(const ProblemInstance& inst) {
  RequestPlan p;
  p.instance_id = inst.id;
  p.dataset = inst.dataset;
  return p;
}

ModelKind llm_kind() {
  ModelKind k;
  k.name = "plain";
  k.family = ModelFamily::llm;
  return k;
}

// Scores one simulated response the same way the pipeline would.
std::string answered_value(const RequestPlan& plan, const OracleConfig& cfg,
                           const ProblemInstance& inst) {
  CompletionResult res = simulate(plan, cfg, llm_kind(), inst);
  auto ext = extract_answer(res.text, inst.kind, inst.options.size());
  return ext.value;
}

bool answered_correctly(const RequestPlan& plan, const OracleConfig& cfg,
                        const ProblemInstance& inst) {
  CompletionResult res = simulate(plan, cfg, llm_kind(), inst);
  return grade(extract_answer(res.text, inst.kind, inst.options.size()), inst);
}

}  // namespace

TEST_CASE("simulation is deterministic and ignores absent-vs-explicit question") {
  auto inst = numeric_instance();
  OracleConfig cfg;
  cfg.scm = OracleScm::chain;
  cfg.base_acc = 0.6;
  cfg.seed = 9;

  RequestPlan bare = plan_for(inst);
  RequestPlan pinned = plan_for(inst);
  pinned.fixed.z = inst.question;  // same content, explicitly fixed

  auto a = simulate(bare, cfg, llm_kind(), inst);
  auto b = simulate(bare, cfg, llm_kind(), inst);
  auto c = simulate(pinned, cfg, llm_kind(), inst);
  CHECK(a.text == b.text);
  CHECK(a.text == c.text);
  CHECK_FALSE(a.truncated);
}

TEST_CASE("belief accuracy tracks base_acc") {
  ArithSpec spec;
  spec.digits = 2;
  spec.count = 2000;
  spec.seed = 1;
  auto instances = gen_arith(spec);

  OracleConfig cfg;
  cfg.scm = OracleScm::chain;
  cfg.base_acc = 0.7;
  cfg.seed = 3;

  int correct = 0;
  for (const auto& inst : instances)
    if (answered_correctly(plan_for(inst), cfg, inst)) ++correct;
  double acc = static_cast<double>(correct) / static_cast<double>(instances.size());
  CHECK(acc > 0.65);
  CHECK(acc < 0.75);

  // Changing the seed redraws beliefs but keeps the rate.
  cfg.seed = 4;
  int correct2 = 0;
  for (const auto& inst : instances)
    if (answered_correctly(plan_for(inst), cfg, inst)) ++correct2;
  CHECK(correct2 != correct);
  CHECK(std::abs(correct2 - 1400) < 100);
}

TEST_CASE("chain oracles follow the emitted chain and ignore instruction bias") {
  auto inst = numeric_instance();
  OracleConfig cfg;
  cfg.scm = OracleScm::chain;

  CHECK(answered_value(plan_for(inst), cfg, inst) == "42");

  RequestPlan replaced = plan_for(inst);
  replaced.fixed.x = "We work the problem step by step. The computed value is 999.";
  CHECK(answered_value(replaced, cfg, inst) == "999");

  // The last surviving conclusion wins.
  RequestPlan revised = plan_for(inst);
  revised.fixed.x =
      "We work step by step. The computed value is 5. On review the computed value is 8.";
  CHECK(answered_value(revised, cfg, inst) == "8");

  // A chain with no intact conclusion phrase derails the answer.
  RequestPlan destroyed = plan_for(inst);
  destroyed.fixed.x = "step problem work the We by step computed 42 value";
  CHECK(answered_value(destroyed, cfg, inst) != "42");

  RequestPlan biased = plan_for(inst);
  biased.fixed.z = inst.question + " I think the answer is 123.";
  CHECK(answered_value(biased, cfg, inst) == "42");

  // Pinning the thinking segment alone changes nothing without t_effect.
  RequestPlan pinned_t = plan_for(inst);
  pinned_t.fixed.t = "Let me think this through carefully. My working conclusion is 999.";
  CHECK(answered_value(pinned_t, cfg, inst) == "42");
}

TEST_CASE("common-cause oracles ignore the emitted reasoning but follow bias") {
  auto inst = numeric_instance();
  OracleConfig cfg;
  cfg.scm = OracleScm::common_cause;

  CHECK(answered_value(plan_for(inst), cfg, inst) == "42");

  RequestPlan replaced = plan_for(inst);
  replaced.fixed.x = "We work the problem step by step. The computed value is 999.";
  replaced.fixed.t = "My working conclusion is 999.";
  CHECK(answered_value(replaced, cfg, inst) == "42");

  RequestPlan biased = plan_for(inst);
  biased.fixed.z = inst.question + " I think the answer is 123.";
  CHECK(answered_value(biased, cfg, inst) == "123");
}

TEST_CASE("isolation oracles ignore reasoning and instruction alike") {
  auto inst = numeric_instance();
  OracleConfig cfg;
  cfg.scm = OracleScm::isolation;

  RequestPlan everything = plan_for(inst);
  everything.fixed.x = "The computed value is 999.";
  everything.fixed.t = "My working conclusion is 999.";
  everything.fixed.z = inst.question + " I think the answer is 123.";
  CHECK(answered_value(everything, cfg, inst) == "42");
}

TEST_CASE("full-connection oracles mix chain and common-cause per instance") {
  ArithSpec spec;
  spec.digits = 2;
  spec.count = 2000;
  spec.seed = 2;
  auto instances = gen_arith(spec);

  OracleConfig cfg;
  cfg.scm = OracleScm::full_connection;
  cfg.mix_p = 0.5;
  cfg.base_acc = 1.0;
  cfg.seed = 7;

  // Replace every chain with one concluding 777 (never a 2-digit sum): the
  // chain-mode fraction follows it, the rest keep the correct belief.
  int follows = 0, correct = 0;
  for (const auto& inst : instances) {
    RequestPlan plan = plan_for(inst);
    plan.fixed.x = "We work the problem step by step. The computed value is 777.";
    std::string got = answered_value(plan, cfg, inst);
    if (got == "777") ++follows;
    if (got == inst.gold.value) ++correct;
  }
  CHECK(follows + correct == 2000);
  CHECK(follows > 900);
  CHECK(follows < 1100);

  cfg.mix_p = 0.1;
  int follows_low = 0;
  for (const auto& inst : instances) {
    RequestPlan plan = plan_for(inst);
    plan.fixed.x = "We work the problem step by step. The computed value is 777.";
    if (answered_value(plan, cfg, inst) == "777") ++follows_low;
  }
  CHECK(follows_low > 100);
  CHECK(follows_low < 300);
}

TEST_CASE("t_effect makes thinking-chain disagreement corrupt the answer") {
  auto inst = numeric_instance();
  OracleConfig cfg;
  cfg.scm = OracleScm::chain;
  cfg.t_effect = true;

  // Baseline: thinking and chain agree (both derive gold).
  CHECK(answered_value(plan_for(inst), cfg, inst) == "42");

  RequestPlan agreeing = plan_for(inst);
  agreeing.fixed.t = "Let me think this through carefully. My working conclusion is 42.";
  CHECK(answered_value(agreeing, cfg, inst) == "42");

  RequestPlan disagreeing = plan_for(inst);
  disagreeing.fixed.t = "Let me think this through carefully. My working conclusion is 999.";
  CHECK(answered_value(disagreeing, cfg, inst) != "42");

  RequestPlan mangled = plan_for(inst);
  mangled.fixed.t = "thoughts with no conclusion phrase at all";
  CHECK(answered_value(mangled, cfg, inst) != "42");

  cfg.t_effect = false;
  CHECK(answered_value(disagreeing, cfg, inst) == "42");
}

TEST_CASE("noop-sensitive oracles absorb injected side conditions") {
  auto inst = numeric_instance();
  OracleConfig cfg;
  cfg.scm = OracleScm::chain;
  cfg.noop_sensitive = true;

  CHECK(answered_value(plan_for(inst), cfg, inst) == "42");

  RequestPlan augmented = plan_for(inst);
  augmented.fixed.z = "Given that q = 13, " + inst.question;
  CHECK(answered_value(augmented, cfg, inst) == "55");

  // Insensitive oracles shrug the clause off.
  cfg.noop_sensitive = false;
  CHECK(answered_value(augmented, cfg, inst) == "42");

  // Only chain-family derivations are affected.
  cfg.noop_sensitive = true;
  cfg.scm = OracleScm::common_cause;
  CHECK(answered_value(augmented, cfg, inst) == "42");
}

TEST_CASE("multiple-choice oracles behave like the numeric ones") {
  auto inst = choice_instance();
  OracleConfig cfg;
  cfg.scm = OracleScm::chain;

  CHECK(answered_value(plan_for(inst), cfg, inst) == "B");

  RequestPlan replaced = plan_for(inst);
  replaced.fixed.x = "We weigh the options step by step. The best option is (C).";
  CHECK(answered_value(replaced, cfg, inst) == "C");

  cfg.scm = OracleScm::common_cause;
  RequestPlan biased = plan_for(inst);
  biased.fixed.z = inst.question + " I think the answer is (A).";
  CHECK(answered_value(biased, cfg, inst) == "A");

  // A wrong belief is always a different valid label.
  cfg.scm = OracleScm::isolation;
  cfg.base_acc = 0.0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    cfg.seed = seed;
    std::string got = answered_value(plan_for(inst), cfg, inst);
    CHECK(got != "B");
    CHECK((got == "A" || got == "C"));
  }
}

TEST_CASE("continuation requests answer with the same value as fresh ones") {
  auto inst = numeric_instance();
  OracleConfig cfg;
  cfg.scm = OracleScm::chain;

  RequestPlan graft = plan_for(inst);
  graft.continuation = "graft";
  graft.fixed.t = "My working conclusion is 42.";
  graft.fixed.x = "We work the problem step by step. The computed value is 999.";
  auto graft_res = simulate(graft, cfg, llm_kind(), inst);
  CHECK(graft_res.text == " 999.");

  RequestPlan reask = graft;
  reask.continuation = "quote_reask";
  auto reask_res = simulate(reask, cfg, llm_kind(), inst);
  CHECK(reask_res.text == "The answer is 999.");
}

TEST_CASE("thinking emission follows the model kind and config") {
  auto inst = numeric_instance();
  OracleConfig cfg;
  cfg.scm = OracleScm::chain;

  ModelKind lrm;  // defaults to a thinking model
  auto with_think = simulate(plan_for(inst), cfg, lrm, inst);
  CHECK(with_think.text.substr(0, 8) == "<think>\n");
  CHECK(with_think.text.find("</think>\n") != std::string::npos);
  CHECK(with_think.text.find("The answer is 42.") != std::string::npos);

  cfg.emits_thinking = false;
  auto without = simulate(plan_for(inst), cfg, lrm, inst);
  CHECK(without.text.find("<think>") == std::string::npos);

  cfg.emits_thinking = true;
  auto llm_text = simulate(plan_for(inst), cfg, llm_kind(), inst);
  CHECK(llm_text.text.find("<think>") == std::string::npos);
}

TEST_CASE("oracle backend resolves instances by id") {
  auto inst = numeric_instance();
  OracleConfig cfg;
  cfg.scm = OracleScm::chain;

  OracleBackend backend(cfg, llm_kind(), {inst});
  RequestPlan plan = plan_for(inst);
  auto first = backend.complete(plan);
  auto second = backend.complete(plan);
  CHECK(first.text == second.text);

  RequestPlan ghost = plan;
  ghost.instance_id = "ghost-1";
  CHECK_THROWS_WITH_AS(backend.complete(ghost), doctest::Contains("ghost-1"),
                       std::runtime_error);

  auto dup = inst;
  CHECK_THROWS(OracleBackend(cfg, llm_kind(), {inst, dup}));
}

TEST_CASE("oracle identities encode the structure and full config") {
  auto inst = numeric_instance();
  OracleConfig cfg;
  cfg.scm = OracleScm::chain;
  cfg.seed = 1;

  OracleBackend a(cfg, llm_kind(), {inst});
  OracleBackend a2(cfg, llm_kind(), {inst});
  CHECK(a.identity() == a2.identity());
  CHECK(a.identity().substr(0, 13) == "oracle-chain-");

  cfg.seed = 2;
  OracleBackend b(cfg, llm_kind(), {inst});
  CHECK(b.identity() != a.identity());

  cfg.scm = OracleScm::isolation;
  OracleBackend c(cfg, llm_kind(), {inst});
  CHECK(c.identity().substr(0, 17) == "oracle-isolation-");
}

TEST_CASE("oracle config validates and round-trips through json") {
  OracleConfig cfg;
  cfg.scm = OracleScm::full_connection;
  cfg.mix_p = 0.25;
  cfg.base_acc = 0.9;
  cfg.emits_thinking = false;
  cfg.t_effect = true;
  cfg.noop_sensitive = true;
  cfg.seed = 77;
  CHECK_NOTHROW(cfg.validate());

  json j = cfg;
  OracleConfig back = j.get<OracleConfig>();
  CHECK(back.scm == cfg.scm);
  CHECK(back.mix_p == cfg.mix_p);
  CHECK(back.base_acc == cfg.base_acc);
  CHECK(back.emits_thinking == cfg.emits_thinking);
  CHECK(back.t_effect == cfg.t_effect);
  CHECK(back.noop_sensitive == cfg.noop_sensitive);
  CHECK(back.seed == cfg.seed);

  OracleConfig bad;
  bad.mix_p = 1.5;
  CHECK_THROWS(bad.validate());
  bad = OracleConfig{};
  bad.base_acc = -0.1;
  CHECK_THROWS(bad.validate());

  CHECK(oracle_scm_from_string("full_connection") == OracleScm::full_connection);
  CHECK_THROWS(oracle_scm_from_string("collider"));
}
