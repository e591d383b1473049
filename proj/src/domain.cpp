#include "scmprobe/domain.hpp"

#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "scmprobe/rational.hpp"

namespace scmprobe {

const char* to_string(AnswerKind k) {
  switch (k) {
    case AnswerKind::numeric: return "numeric";
    case AnswerKind::multiple_choice: return "multiple_choice";
  }
  throw std::logic_error("unreachable AnswerKind");
}

AnswerKind answer_kind_from_string(const std::string& s) {
  if (s == "numeric") return AnswerKind::numeric;
  if (s == "multiple_choice") return AnswerKind::multiple_choice;
  throw std::runtime_error("unknown answer kind: " + s);
}

const char* to_string(ConditionVariant v) {
  switch (v) {
    case ConditionVariant::baseline: return "baseline";
    case ConditionVariant::random_thinking: return "random_thinking";
    case ConditionVariant::random_cot: return "random_cot";
    case ConditionVariant::instruction_bias: return "instruction_bias";
  }
  throw std::logic_error("unreachable ConditionVariant");
}

ConditionVariant condition_variant_from_string(const std::string& s) {
  if (s == "baseline") return ConditionVariant::baseline;
  if (s == "random_thinking") return ConditionVariant::random_thinking;
  if (s == "random_cot") return ConditionVariant::random_cot;
  if (s == "instruction_bias") return ConditionVariant::instruction_bias;
  throw std::runtime_error("unknown condition variant: " + s);
}

const char* to_string(ExtractConfidence c) {
  switch (c) {
    case ExtractConfidence::marker: return "marker";
    case ExtractConfidence::fallback_last_number: return "fallback_last_number";
    case ExtractConfidence::none: return "none";
  }
  throw std::logic_error("unreachable ExtractConfidence");
}

ExtractConfidence extract_confidence_from_string(const std::string& s) {
  if (s == "marker") return ExtractConfidence::marker;
  if (s == "fallback_last_number") return ExtractConfidence::fallback_last_number;
  if (s == "none") return ExtractConfidence::none;
  throw std::runtime_error("unknown extraction confidence: " + s);
}

std::string ProblemInstance::option_label(std::size_t i) {
  if (i >= 26) throw std::runtime_error("option index out of label range: " + std::to_string(i));
  return std::string(1, static_cast<char>('A' + i));
}

void ProblemInstance::validate() const {
  auto fail = [this](const std::string& why) {
    throw std::runtime_error("instance '" + id + "': " + why);
  };
  if (id.empty()) throw std::runtime_error("instance with empty id");
  if (question.empty()) fail("empty question");
  if (dataset.empty()) fail("empty dataset tag");
  if (kind == AnswerKind::numeric) {
    if (!options.empty()) fail("numeric instance carries options");
    if (!parse_rational(gold.value)) fail("gold '" + gold.value + "' is not an exact integer or rational");
  } else {
    if (options.size() < 2) fail("multiple_choice needs at least 2 options");
    if (options.size() > 26) fail("more than 26 options");
    bool found = false;
    for (std::size_t i = 0; i < options.size(); ++i) {
      if (gold.value == option_label(i)) found = true;
    }
    if (!found) fail("gold label '" + gold.value + "' not among option labels");
  }
}

std::string Condition::slug() const {
  std::string s = to_string(variant);
  if (!strategy.empty()) s += "-" + strategy;
  return s;
}

double PairedOutcomeTable::baseline_acc() const {
  long long total = n();
  if (total == 0) throw std::runtime_error("paired table is empty");
  return static_cast<double>(a + b) / static_cast<double>(total);
}

double PairedOutcomeTable::treated_acc() const {
  long long total = n();
  if (total == 0) throw std::runtime_error("paired table is empty");
  return static_cast<double>(a + c) / static_cast<double>(total);
}

PairedJoin build_paired_table(const std::vector<TrialResult>& baseline,
                              const std::vector<TrialResult>& treated) {
  std::unordered_map<std::string, const TrialResult*> base_by_id;
  base_by_id.reserve(baseline.size());
  for (const auto& t : baseline) {
    if (!base_by_id.emplace(t.instance_id, &t).second)
      throw std::runtime_error("duplicate instance id in baseline run: " + t.instance_id);
  }
  std::unordered_set<std::string> treated_ids;
  treated_ids.reserve(treated.size());

  PairedJoin out;
  for (const auto& t : treated) {
    if (!treated_ids.insert(t.instance_id).second)
      throw std::runtime_error("duplicate instance id in treated run: " + t.instance_id);
    auto it = base_by_id.find(t.instance_id);
    if (it == base_by_id.end()) {
      ++out.discarded_missing;
      continue;
    }
    const TrialResult& b = *it->second;
    if (b.excluded || t.excluded) {
      ++out.discarded_excluded;
      continue;
    }
    if (b.correct && t.correct) ++out.table.a;
    else if (b.correct && !t.correct) ++out.table.b;
    else if (!b.correct && t.correct) ++out.table.c;
    else ++out.table.d;
  }
  for (const auto& t : baseline) {
    if (!treated_ids.count(t.instance_id)) ++out.discarded_missing;
  }
  if (out.table.n() == 0)
    throw std::runtime_error("paired join produced an empty intersection");
  return out;
}

void to_json(json& j, const GoldAnswer& g) { j = json{{"value", g.value}}; }
void from_json(const json& j, GoldAnswer& g) { j.at("value").get_to(g.value); }

void to_json(json& j, const ProblemInstance& p) {
  j = json{{"id", p.id},
           {"question", p.question},
           {"kind", to_string(p.kind)},
           {"answer", p.gold.value},
           {"dataset", p.dataset}};
  if (!p.options.empty()) j["options"] = p.options;
  if (!p.meta.empty()) j["meta"] = p.meta;
}

void from_json(const json& j, ProblemInstance& p) {
  j.at("id").get_to(p.id);
  j.at("question").get_to(p.question);
  p.kind = answer_kind_from_string(j.at("kind").get<std::string>());
  j.at("answer").get_to(p.gold.value);
  j.at("dataset").get_to(p.dataset);
  p.options.clear();
  if (j.contains("options")) j.at("options").get_to(p.options);
  p.meta = j.value("meta", json::object());
}

void to_json(json& j, const Condition& c) {
  j = json{{"variant", to_string(c.variant)}, {"strategy", c.strategy}, {"seed", c.seed}};
}

void from_json(const json& j, Condition& c) {
  c.variant = condition_variant_from_string(j.at("variant").get<std::string>());
  j.at("strategy").get_to(c.strategy);
  j.at("seed").get_to(c.seed);
}

void to_json(json& j, const Transcript& t) {
  j = json{{"thinking", t.thinking},
           {"cot", t.cot},
           {"answer_text", t.answer_text},
           {"flags", t.flags}};
}

void from_json(const json& j, Transcript& t) {
  j.at("thinking").get_to(t.thinking);
  j.at("cot").get_to(t.cot);
  j.at("answer_text").get_to(t.answer_text);
  j.at("flags").get_to(t.flags);
}

void to_json(json& j, const ExtractedAnswer& e) {
  j = json{{"kind", to_string(e.kind)},
           {"value", e.value},
           {"confidence", to_string(e.confidence)}};
}

void from_json(const json& j, ExtractedAnswer& e) {
  e.kind = answer_kind_from_string(j.at("kind").get<std::string>());
  j.at("value").get_to(e.value);
  e.confidence = extract_confidence_from_string(j.at("confidence").get<std::string>());
}

void to_json(json& j, const TrialResult& t) {
  j = json{{"instance_id", t.instance_id},
           {"condition", t.condition},
           {"correct", t.correct},
           {"excluded", t.excluded},
           {"truncated", t.truncated},
           {"extracted", t.extracted},
           {"transcript", t.transcript},
           {"flags", t.flags},
           {"request_fingerprint", t.request_fingerprint}};
}

void from_json(const json& j, TrialResult& t) {
  j.at("instance_id").get_to(t.instance_id);
  j.at("condition").get_to(t.condition);
  j.at("correct").get_to(t.correct);
  j.at("excluded").get_to(t.excluded);
  j.at("truncated").get_to(t.truncated);
  j.at("extracted").get_to(t.extracted);
  j.at("transcript").get_to(t.transcript);
  j.at("flags").get_to(t.flags);
  j.at("request_fingerprint").get_to(t.request_fingerprint);
}

void to_json(json& j, const PairedOutcomeTable& t) {
  j = json{{"a", t.a}, {"b", t.b}, {"c", t.c}, {"d", t.d}};
}

void from_json(const json& j, PairedOutcomeTable& t) {
  j.at("a").get_to(t.a);
  j.at("b").get_to(t.b);
  j.at("c").get_to(t.c);
  j.at("d").get_to(t.d);
}

}  // namespace scmprobe
