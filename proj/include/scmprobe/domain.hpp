#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace scmprobe {

using json = nlohmann::json;

enum class AnswerKind { numeric, multiple_choice };

const char* to_string(AnswerKind k);
AnswerKind answer_kind_from_string(const std::string& s);

// Gold answers are kept as exact strings. Numeric golds must parse as exact
// integers or rationals (see rational.hpp); multiple-choice golds are option
// labels ("A", "B", ...).
struct GoldAnswer {
  std::string value;
};

struct ProblemInstance {
  std::string id;
  std::string question;
  AnswerKind kind = AnswerKind::numeric;
  GoldAnswer gold;
  std::vector<std::string> options;  // multiple_choice only
  std::string dataset;
  json meta = json::object();

  // Throws std::runtime_error with the instance id on the first violation.
  void validate() const;

  // Label of the i-th option: "A", "B", ...
  static std::string option_label(std::size_t i);
};

enum class ConditionVariant { baseline, random_thinking, random_cot, instruction_bias };

const char* to_string(ConditionVariant v);
ConditionVariant condition_variant_from_string(const std::string& s);

struct Condition {
  ConditionVariant variant = ConditionVariant::baseline;
  std::string strategy;  // empty for baseline
  std::uint64_t seed = 0;

  // Stable name used in artifact file names and report rows, e.g.
  // "random_cot-mismatch".
  std::string slug() const;
  bool operator==(const Condition& o) const = default;
};

// One model response split into its reasoning segments. For models without a
// thinking channel `thinking` stays empty. `flags` carries parse-quality
// notes ("missing_think_open", "no_answer_marker", "empty_answer", ...).
struct Transcript {
  std::string thinking;
  std::string cot;
  std::string answer_text;
  std::vector<std::string> flags;
};

enum class ExtractConfidence { marker, fallback_last_number, none };

const char* to_string(ExtractConfidence c);
ExtractConfidence extract_confidence_from_string(const std::string& s);

struct ExtractedAnswer {
  AnswerKind kind = AnswerKind::numeric;
  std::string value;  // canonical rational string or option label; empty if none
  ExtractConfidence confidence = ExtractConfidence::none;
};

struct TrialResult {
  std::string instance_id;
  Condition condition;
  bool correct = false;
  bool excluded = false;  // dropped from paired tables (e.g. degenerate shuffle)
  bool truncated = false;
  ExtractedAnswer extracted;
  Transcript transcript;
  std::vector<std::string> flags;
  std::string request_fingerprint;
};

// 2x2 table of paired correctness outcomes over the same instances:
//   a: correct in both runs        b: baseline correct, treated wrong
//   c: baseline wrong, treated ok  d: wrong in both
struct PairedOutcomeTable {
  long long a = 0;
  long long b = 0;
  long long c = 0;
  long long d = 0;

  long long n() const { return a + b + c + d; }
  double baseline_acc() const;
  double treated_acc() const;
};

struct PairedJoin {
  PairedOutcomeTable table;
  long long discarded_missing = 0;   // present in only one run
  long long discarded_excluded = 0;  // flagged excluded in either run
  long long discarded() const { return discarded_missing + discarded_excluded; }
};

// Joins two runs on instance id. Throws on duplicate ids within a run and on
// an empty intersection; everything else is tallied, not fatal.
PairedJoin build_paired_table(const std::vector<TrialResult>& baseline,
                              const std::vector<TrialResult>& treated);

void to_json(json& j, const GoldAnswer& g);
void from_json(const json& j, GoldAnswer& g);
void to_json(json& j, const ProblemInstance& p);
void from_json(const json& j, ProblemInstance& p);
void to_json(json& j, const Condition& c);
void from_json(const json& j, Condition& c);
void to_json(json& j, const Transcript& t);
void from_json(const json& j, Transcript& t);
void to_json(json& j, const ExtractedAnswer& e);
void from_json(const json& j, ExtractedAnswer& e);
void to_json(json& j, const TrialResult& t);
void from_json(const json& j, TrialResult& t);
void to_json(json& j, const PairedOutcomeTable& t);
void from_json(const json& j, PairedOutcomeTable& t);

}  // namespace scmprobe
