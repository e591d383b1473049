#include "scmprobe/transcript.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace scmprobe {

const char* to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::llm: return "llm";
    case ModelFamily::lrm: return "lrm";
  }
  throw std::logic_error("unreachable ModelFamily");
}

ModelFamily model_family_from_string(const std::string& s) {
  if (s == "llm") return ModelFamily::llm;
  if (s == "lrm") return ModelFamily::lrm;
  throw std::runtime_error("unknown model family: " + s);
}

const char* to_string(ApiFlavor f) {
  switch (f) {
    case ApiFlavor::chat: return "chat";
    case ApiFlavor::completion: return "completion";
  }
  throw std::logic_error("unreachable ApiFlavor");
}

ApiFlavor api_flavor_from_string(const std::string& s) {
  if (s == "chat") return ApiFlavor::chat;
  if (s == "completion") return ApiFlavor::completion;
  throw std::runtime_error("unknown api flavor: " + s);
}

const char* to_string(ContinuationStrategy s) {
  switch (s) {
    case ContinuationStrategy::graft: return "graft";
    case ContinuationStrategy::quote_reask: return "quote_reask";
  }
  throw std::logic_error("unreachable ContinuationStrategy");
}

ContinuationStrategy continuation_strategy_from_string(const std::string& s) {
  if (s == "graft") return ContinuationStrategy::graft;
  if (s == "quote_reask") return ContinuationStrategy::quote_reask;
  throw std::runtime_error("unknown continuation strategy: " + s);
}

void ModelKind::validate() const {
  if (name.empty()) throw std::runtime_error("model kind: empty name");
  if (answer_markers.empty()) throw std::runtime_error("model kind: no answer markers");
  for (const auto& m : answer_markers)
    if (m.empty()) throw std::runtime_error("model kind: empty answer marker");
  if (family == ModelFamily::lrm) {
    if (think_open.empty() || think_close.empty())
      throw std::runtime_error("model kind: thinking delimiters must be non-empty");
    if (think_open == think_close)
      throw std::runtime_error("model kind: thinking delimiters must differ");
  }
}

namespace {

const std::map<std::string, std::string>& template_registry() {
  static const std::map<std::string, std::string> kTemplates = {
      {"numeric-zeroshot/v1",
       "{question}\n\nWork through the problem step by step. Finish with one line of "
       "the form \"The answer is <number>.\""},
      {"choice-zeroshot/v1",
       "{question}\n\nOptions:\n{options}\n\nWork through the problem step by step. "
       "Finish with one line of the form \"The answer is (<letter>).\""},
      {"fewshot-block/v1", "{question}\n{answer_lead} {answer}.\n\n"},
      {"graft/v1", "{base_prompt}\n\n{think_block}{chain}\n{answer_lead}"},
      {"quote-reask/v1",
       "{question_block}\n\nA reasoning trace for this problem is quoted below."
       "\n\n{think_quote}[quoted chain]\n{chain}\n[end quoted chain]\n\n"
       "Taking the quoted reasoning as given, reply with one line of the form "
       "\"The answer is {answer_shape}.\""},
      {"noop-propose/v1",
       "Read the question below. Invent {count} numeric side conditions that are "
       "completely irrelevant to it, each of the form <letter> = <integer>, using "
       "single-letter variable names that do not occur in the question and nonzero "
       "integers between -99 and 99 that do not occur in the question. Reply with "
       "only the conditions, one per line.\n\nQuestion: {question}"},
  };
  return kTemplates;
}

std::string lowered(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::size_t find_ci(const std::string& haystack_lower, const std::string& needle) {
  return haystack_lower.find(lowered(needle));
}

std::string options_block(const ProblemInstance& instance) {
  std::string out;
  for (std::size_t i = 0; i < instance.options.size(); ++i) {
    if (i) out += "\n";
    out += "(" + ProblemInstance::option_label(i) + ") " + instance.options[i];
  }
  return out;
}

std::string question_block(const ProblemInstance& instance, const std::string& z_text) {
  std::string out = z_text;
  if (instance.kind == AnswerKind::multiple_choice)
    out += "\n\nOptions:\n" + options_block(instance);
  return out;
}

std::string directive(AnswerKind kind) {
  if (kind == AnswerKind::numeric)
    return "\n\nWork through the problem step by step. Finish with one line of the "
           "form \"The answer is <number>.\"";
  return "\n\nWork through the problem step by step. Finish with one line of the "
         "form \"The answer is (<letter>).\"";
}

// Splits a region into chain-of-thought and answer text at the first marker
// kind (in priority order) that occurs anywhere in it.
void split_at_answer_marker(const std::string& text, const ModelKind& kind,
                            Transcript& out) {
  std::string low = lowered(text);
  for (const auto& marker : kind.answer_markers) {
    std::size_t p = (marker == "boxed") ? find_ci(low, "\\boxed{") : find_ci(low, marker);
    if (p != std::string::npos) {
      out.cot = text.substr(0, p);
      out.answer_text = text.substr(p);
      return;
    }
  }
  out.flags.push_back("no_answer_marker");
  std::size_t nl = text.rfind('\n');
  if (nl == std::string::npos) {
    out.answer_text = text;
  } else {
    out.cot = text.substr(0, nl + 1);
    out.answer_text = text.substr(nl + 1);
  }
  if (out.answer_text.empty()) out.flags.push_back("empty_answer");
}

}  // namespace

const std::string& prompt_template(const std::string& name) {
  const auto& reg = template_registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw std::runtime_error("unknown prompt template: " + name);
  return it->second;
}

std::vector<std::string> prompt_template_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : template_registry()) names.push_back(k);
  return names;
}

RequestPlan build_prompt(const ProblemInstance& instance, const ModelKind& kind,
                         const GenParams& gen,
                         const std::vector<Demonstration>& demonstrations,
                         const std::optional<std::string>& z_override) {
  kind.validate();
  if (!demonstrations.empty() && kind.family == ModelFamily::lrm)
    throw std::runtime_error("demonstrations are only supported for llm-family models");

  const std::string z = z_override.value_or(instance.question);
  std::string prompt;
  for (const auto& d : demonstrations)
    prompt += d.question + "\n" + kAnswerLead + " " + d.answer + ".\n\n";
  prompt += question_block(instance, z) + directive(instance.kind);

  RequestPlan plan;
  plan.instance_id = instance.id;
  plan.dataset = instance.dataset;
  plan.fixed.z = z;
  plan.gen = gen;
  plan.prompt = prompt;
  plan.messages = {{"user", prompt}};
  plan.template_name = instance.kind == AnswerKind::numeric ? "numeric-zeroshot/v1"
                                                            : "choice-zeroshot/v1";
  if (!demonstrations.empty()) plan.template_name += "+fewshot-block/v1";
  return plan;
}

Transcript parse_transcript(const std::string& raw, const ModelKind& kind) {
  Transcript out;
  if (kind.family == ModelFamily::llm) {
    split_at_answer_marker(raw, kind, out);
    if (out.answer_text.empty() &&
        std::find(out.flags.begin(), out.flags.end(), "empty_answer") == out.flags.end())
      out.flags.push_back("empty_answer");
    return out;
  }

  std::size_t open = raw.find(kind.think_open);
  if (open == std::string::npos) {
    // Thinking model that produced no thinking block: fall back to the plain
    // split so the response still grades, and say so.
    out.flags.push_back("missing_think_open");
    split_at_answer_marker(raw, kind, out);
    return out;
  }
  if (open > 0) out.flags.push_back("text_before_think_open");

  std::size_t body = open + kind.think_open.size();
  std::size_t close = raw.find(kind.think_close, body);
  if (close == std::string::npos) {
    out.thinking = raw.substr(body);
    out.flags.push_back("missing_think_close");
    out.flags.push_back("empty_answer");
    return out;
  }
  out.thinking = raw.substr(body, close - body);
  std::string tail = raw.substr(close + kind.think_close.size());
  split_at_answer_marker(tail, kind, out);
  if (out.answer_text.empty() &&
      std::find(out.flags.begin(), out.flags.end(), "empty_answer") == out.flags.end())
    out.flags.push_back("empty_answer");
  return out;
}

RequestPlan assemble_continuation(const ProblemInstance& instance, const ModelKind& kind,
                                  const Condition& condition, const std::string& z_text,
                                  const std::optional<std::string>& t_text,
                                  const std::string& x_text, ContinuationStrategy strategy,
                                  const GenParams& base_gen, int answer_max_tokens,
                                  const std::vector<Demonstration>& demonstrations) {
  kind.validate();
  if (kind.has_thinking() && !t_text)
    throw std::runtime_error("continuation for a thinking model needs a thinking segment");
  if (answer_max_tokens < 1) throw std::runtime_error("answer_max_tokens must be >= 1");

  RequestPlan plan;
  plan.instance_id = instance.id;
  plan.dataset = instance.dataset;
  plan.condition = condition;
  plan.fixed.z = z_text;
  if (kind.has_thinking()) plan.fixed.t = *t_text;
  plan.fixed.x = x_text;
  plan.gen = base_gen;
  plan.gen.max_tokens = answer_max_tokens;
  plan.continuation = to_string(strategy);

  if (strategy == ContinuationStrategy::graft) {
    RequestPlan base = build_prompt(instance, kind, base_gen, demonstrations, z_text);
    std::string think_block =
        kind.has_thinking() ? kind.think_open + *t_text + kind.think_close + "\n" : "";
    plan.prompt = base.prompt + "\n\n" + think_block + x_text + "\n" + kAnswerLead;
    plan.messages = {{"user", base.prompt},
                     {"assistant", think_block + x_text + "\n" + kAnswerLead}};
    plan.response_prefix = kAnswerLead;
    plan.gen.stop = {"\n"};
    plan.template_name = "graft/v1";
    return plan;
  }

  std::string think_quote;
  if (kind.has_thinking())
    think_quote = "[quoted thinking]\n" + *t_text + "\n[end quoted thinking]\n\n";
  std::string shape = instance.kind == AnswerKind::numeric ? "<number>" : "(<letter>)";
  std::string body = question_block(instance, z_text) +
                     "\n\nA reasoning trace for this problem is quoted below.\n\n" +
                     think_quote + "[quoted chain]\n" + x_text + "\n[end quoted chain]\n\n" +
                     "Taking the quoted reasoning as given, reply with one line of the "
                     "form \"The answer is " +
                     shape + ".\"";
  plan.prompt = body;
  plan.messages = {{"user", body}};
  plan.template_name = "quote-reask/v1";
  return plan;
}

void to_json(json& j, const RequestPlan& p) {
  j = json{{"instance_id", p.instance_id},
           {"dataset", p.dataset},
           {"condition", p.condition},
           {"prompt", p.prompt},
           {"response_prefix", p.response_prefix},
           {"gen",
            {{"temperature", p.gen.temperature},
             {"max_tokens", p.gen.max_tokens},
             {"stop", p.gen.stop}}},
           {"template_name", p.template_name},
           {"continuation", p.continuation}};
  json msgs = json::array();
  for (const auto& m : p.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  j["messages"] = msgs;
  json fixed = json::object();
  if (p.fixed.z) fixed["z"] = *p.fixed.z;
  if (p.fixed.t) fixed["t"] = *p.fixed.t;
  if (p.fixed.x) fixed["x"] = *p.fixed.x;
  j["fixed"] = fixed;
}

void from_json(const json& j, RequestPlan& p) {
  j.at("instance_id").get_to(p.instance_id);
  j.at("dataset").get_to(p.dataset);
  j.at("condition").get_to(p.condition);
  j.at("prompt").get_to(p.prompt);
  j.at("response_prefix").get_to(p.response_prefix);
  p.gen.temperature = j.at("gen").at("temperature").get<double>();
  p.gen.max_tokens = j.at("gen").at("max_tokens").get<int>();
  p.gen.stop = j.at("gen").at("stop").get<std::vector<std::string>>();
  j.at("template_name").get_to(p.template_name);
  j.at("continuation").get_to(p.continuation);
  p.messages.clear();
  for (const auto& m : j.at("messages"))
    p.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
  p.fixed = {};
  const auto& f = j.at("fixed");
  if (f.contains("z")) p.fixed.z = f.at("z").get<std::string>();
  if (f.contains("t")) p.fixed.t = f.at("t").get<std::string>();
  if (f.contains("x")) p.fixed.x = f.at("x").get<std::string>();
}

}  // namespace scmprobe
