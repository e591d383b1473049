#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scmprobe/domain.hpp"

namespace scmprobe {

enum class ModelFamily { llm, lrm };

const char* to_string(ModelFamily f);
ModelFamily model_family_from_string(const std::string& s);

// How a model's output is structured: whether it has a separate thinking
// channel and which delimiters/markers segment a raw response.
struct ModelKind {
  std::string name = "model";
  ModelFamily family = ModelFamily::lrm;
  std::string think_open = "<think>";
  std::string think_close = "</think>";
  // Answer markers in priority order. "boxed" is special-cased to the LaTeX
  // \boxed{...} pattern; everything else is a case-insensitive literal.
  std::vector<std::string> answer_markers = {"boxed", "the answer is", "answer:"};

  bool has_thinking() const { return family == ModelFamily::lrm; }
  void validate() const;
};

struct GenParams {
  double temperature = 0.0;
  int max_tokens = 24000;
  std::vector<std::string> stop;
};

enum class ApiFlavor { chat, completion };

const char* to_string(ApiFlavor f);
ApiFlavor api_flavor_from_string(const std::string& s);

struct ChatMessage {
  std::string role;
  std::string content;
};

// Exact text each reasoning variable is pinned to in a request. A variable
// under intervention appears here with its replacement content, never the
// original; absent means the model generates that part itself.
struct FixedSegments {
  std::optional<std::string> z;
  std::optional<std::string> t;
  std::optional<std::string> x;
};

// Everything needed to issue one generation request, independent of which
// backend serves it. `prompt` is the flat completion-style rendering;
// `messages` the chat rendering of the same content.
struct RequestPlan {
  std::string instance_id;
  std::string dataset;
  Condition condition;
  std::vector<ChatMessage> messages;
  std::string prompt;
  // Prepended to the model output before transcript parsing; used by graft
  // continuations where the prompt already ends mid-sentence ("The answer is").
  std::string response_prefix;
  FixedSegments fixed;
  GenParams gen;
  std::string template_name;
  // "" for a fresh generation, else "graft" or "quote_reask".
  std::string continuation;
};

// Named, versioned prompt template texts. Reports reference templates by
// these names so a reader can line a report up against the exact wording.
const std::string& prompt_template(const std::string& name);
std::vector<std::string> prompt_template_names();

// Demonstration pairs for few-shot runs (in-context-learning models only).
struct Demonstration {
  std::string question;
  std::string answer;
};

// Builds the baseline request for an instance: question (or a biased
// override of it), options block for multiple choice, answer-format
// directive, optional demonstrations. The Z segment is recorded in
// fixed.z verbatim.
RequestPlan build_prompt(const ProblemInstance& instance, const ModelKind& kind,
                         const GenParams& gen,
                         const std::vector<Demonstration>& demonstrations = {},
                         const std::optional<std::string>& z_override = std::nullopt);

// Splits a raw model response into thinking / chain / answer segments.
// Total: never throws on content; problems are reported via Transcript
// flags ("missing_think_open", "missing_think_close", "no_answer_marker",
// "empty_answer", "text_before_think_open"). For thinking models the
// scanned region starts at think_open and
//   think_open + thinking + think_close + cot + answer_text
// reconstructs it byte-for-byte; for plain models cot + answer_text is the
// whole input.
Transcript parse_transcript(const std::string& raw, const ModelKind& kind);

enum class ContinuationStrategy { graft, quote_reask };

const char* to_string(ContinuationStrategy s);
ContinuationStrategy continuation_strategy_from_string(const std::string& s);

// Builds the regenerate-the-answer request with all reasoning variables
// pinned: question z, thinking t (thinking models only), chain x. graft
// extends the original prompt with the frozen segments and an answer lead
// for prefix-continuation; quote_reask re-asks with the segments quoted.
// Frozen texts are embedded verbatim and recorded in fixed_segments.
RequestPlan assemble_continuation(const ProblemInstance& instance, const ModelKind& kind,
                                  const Condition& condition, const std::string& z_text,
                                  const std::optional<std::string>& t_text,
                                  const std::string& x_text, ContinuationStrategy strategy,
                                  const GenParams& base_gen, int answer_max_tokens,
                                  const std::vector<Demonstration>& demonstrations = {});

// The answer lead used by graft continuations.
inline constexpr const char* kAnswerLead = "The answer is";

void to_json(json& j, const RequestPlan& p);
void from_json(const json& j, RequestPlan& p);

}  // namespace scmprobe
