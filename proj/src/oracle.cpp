#include "scmprobe/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "scmprobe/rational.hpp"
#include "scmprobe/rng.hpp"

namespace scmprobe {

const char* to_string(OracleScm s) {
  switch (s) {
    case OracleScm::chain: return "chain";
    case OracleScm::common_cause: return "common_cause";
    case OracleScm::full_connection: return "full_connection";
    case OracleScm::isolation: return "isolation";
  }
  throw std::logic_error("unreachable OracleScm");
}

OracleScm oracle_scm_from_string(const std::string& s) {
  if (s == "chain") return OracleScm::chain;
  if (s == "common_cause") return OracleScm::common_cause;
  if (s == "full_connection") return OracleScm::full_connection;
  if (s == "isolation") return OracleScm::isolation;
  throw std::runtime_error("unknown oracle scm: " + s);
}

void OracleConfig::validate() const {
  if (!(mix_p >= 0.0 && mix_p <= 1.0))
    throw std::runtime_error("oracle: mix_p must be in [0, 1]");
  if (!(base_acc >= 0.0 && base_acc <= 1.0))
    throw std::runtime_error("oracle: base_acc must be in [0, 1]");
}

void to_json(json& j, const OracleConfig& c) {
  j = json{{"scm", to_string(c.scm)},
           {"mix_p", c.mix_p},
           {"base_acc", c.base_acc},
           {"emits_thinking", c.emits_thinking},
           {"t_effect", c.t_effect},
           {"noop_sensitive", c.noop_sensitive},
           {"seed", c.seed}};
}

void from_json(const json& j, OracleConfig& c) {
  c.scm = oracle_scm_from_string(j.at("scm").get<std::string>());
  c.mix_p = j.value("mix_p", 0.5);
  c.base_acc = j.value("base_acc", 1.0);
  c.emits_thinking = j.value("emits_thinking", true);
  c.t_effect = j.value("t_effect", false);
  c.noop_sensitive = j.value("noop_sensitive", false);
  c.seed = j.value("seed", std::uint64_t{0});
}

namespace {

// Latent-draw channels; each (seed, instance, channel) triple is an
// independent deterministic coin.
enum Channel : std::uint64_t {
  kChBelief = 0,
  kChMode = 1,
  kChWrongDelta = 2,
  kChCorruptDelta = 3,
  kChGarbageDelta = 4,
};

double hash_real(const OracleConfig& cfg, const std::string& id, std::uint64_t ch) {
  return static_cast<double>(stable_hash64(cfg.seed, id, ch) >> 11) * 0x1.0p-53;
}

// A simulated answer value: exact rational for numeric instances, option
// label for multiple choice.
struct Value {
  bool is_label = false;
  Rational r;
  std::string label;

  bool operator==(const Value& o) const {
    if (is_label != o.is_label) return false;
    return is_label ? label == o.label : r == o.r;
  }

  std::string display() const { return is_label ? "(" + label + ")" : r.str(); }
};

Value gold_value(const ProblemInstance& instance) {
  Value v;
  if (instance.kind == AnswerKind::multiple_choice) {
    v.is_label = true;
    v.label = instance.gold.value;
    return v;
  }
  auto r = parse_rational(instance.gold.value);
  if (!r)
    throw std::runtime_error("oracle: malformed gold on instance '" + instance.id + "'");
  v.r = *r;
  return v;
}

Value shift_value(const Value& v, long long delta, std::size_t option_count) {
  Value out = v;
  if (!v.is_label) {
    out.r = v.r.add_int(delta == 0 ? 1 : delta);
    return out;
  }
  std::size_t k = std::max<std::size_t>(option_count, 2);
  std::size_t idx = static_cast<std::size_t>(v.label[0] - 'A');
  std::uint64_t mag = static_cast<std::uint64_t>(delta < 0 ? -delta : delta);
  // Cyclic shift of 1..k-1 positions so the result always differs.
  std::size_t step = 1 + static_cast<std::size_t>((mag == 0 ? 0 : mag - 1) % (k - 1));
  out.label = ProblemInstance::option_label((idx + step) % k);
  return out;
}

Value divergent_value(const OracleConfig& cfg, const ProblemInstance& instance,
                      const Value& from, std::uint64_t channel) {
  long long delta =
      1 + static_cast<long long>(stable_hash64(cfg.seed, instance.id, channel) % 9);
  return shift_value(from, delta, instance.options.size());
}

std::string lowered(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string render_thinking(const Value& v) {
  return "Let me think this through carefully. My working conclusion is " + v.display() + ".";
}

std::string render_chain(const Value& v, AnswerKind kind) {
  if (kind == AnswerKind::numeric)
    return "We work the problem step by step. The computed value is " + v.display() + ".";
  return "We weigh the options step by step. The best option is " + v.display() + ".";
}

// Reads a conclusion planted by render_thinking/render_chain back out of a
// (possibly replaced or mangled) segment. Returns nullopt when no intact
// conclusion phrase survives, which is exactly what makes shuffled and
// noise replacements destructive.
std::optional<Value> parse_conclusion(const std::string& text, const ProblemInstance& instance) {
  static const char* kPhrases[] = {"the computed value is ", "the best option is ",
                                   "my working conclusion is "};
  std::string low = lowered(text);
  std::size_t best = std::string::npos;
  std::size_t best_len = 0;
  for (const char* phrase : kPhrases) {
    std::string p(phrase);
    std::size_t pos = 0, found;
    while ((found = low.find(p, pos)) != std::string::npos) {
      if (best == std::string::npos || found > best) {
        best = found;
        best_len = p.size();
      }
      pos = found + 1;
    }
  }
  if (best == std::string::npos) return std::nullopt;
  std::size_t start = best + best_len;
  std::size_t end = start;
  while (end < text.size() && text[end] != '.' && text[end] != '\n') ++end;
  std::string token = text.substr(start, end - start);
  while (!token.empty() && token.front() == ' ') token.erase(0, 1);
  while (!token.empty() && token.back() == ' ') token.pop_back();
  if (token.empty()) return std::nullopt;

  Value v;
  if (instance.kind == AnswerKind::multiple_choice) {
    std::string t = token;
    if (t.size() >= 2 && t.front() == '(' && t.back() == ')') t = t.substr(1, t.size() - 2);
    if (t.size() != 1 || !std::isalpha(static_cast<unsigned char>(t[0]))) return std::nullopt;
    char up = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
    if (static_cast<std::size_t>(up - 'A') >= instance.options.size()) return std::nullopt;
    v.is_label = true;
    v.label = std::string(1, up);
    return v;
  }
  auto r = parse_rational(token);
  if (!r) return std::nullopt;
  v.r = *r;
  return v;
}

// Suggested answer from an instruction-bias sentence in the rendered
// question, if one is present.
std::optional<Value> parse_bias(const std::string& z_text, const ProblemInstance& instance) {
  std::string low = lowered(z_text);
  std::size_t pos = low.find("i think the answer is ");
  if (pos == std::string::npos) return std::nullopt;
  std::size_t start = pos + 22;
  std::size_t end = start;
  while (end < z_text.size() && z_text[end] != '.' && z_text[end] != '\n') ++end;
  std::string token = z_text.substr(start, end - start);
  while (!token.empty() && token.front() == ' ') token.erase(0, 1);
  while (!token.empty() && token.back() == ' ') token.pop_back();
  if (token.empty()) return std::nullopt;
  Value v;
  if (instance.kind == AnswerKind::multiple_choice) {
    std::string t = token;
    if (t.size() >= 2 && t.front() == '(' && t.back() == ')') t = t.substr(1, t.size() - 2);
    if (t.size() != 1) return std::nullopt;
    v.is_label = true;
    v.label = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(t[0]))));
    return v;
  }
  auto r = parse_rational(token);
  if (!r) return std::nullopt;
  v.r = *r;
  return v;
}

// Values of "given that <letter> = <int>" side conditions in the question.
std::vector<long long> parse_noop_values(const std::string& z_text) {
  std::vector<long long> out;
  std::string low = lowered(z_text);
  std::size_t pos = 0;
  while ((pos = low.find("given that ", pos)) != std::string::npos) {
    std::size_t i = pos + 11;
    for (;;) {
      while (i < z_text.size() && z_text[i] == ' ') ++i;
      if (i >= z_text.size() || !std::isalpha(static_cast<unsigned char>(z_text[i]))) break;
      std::size_t j = i + 1;
      while (j < z_text.size() && z_text[j] == ' ') ++j;
      if (j >= z_text.size() || z_text[j] != '=') break;
      ++j;
      while (j < z_text.size() && z_text[j] == ' ') ++j;
      std::size_t num_start = j;
      if (j < z_text.size() && z_text[j] == '-') ++j;
      std::size_t digit_start = j;
      while (j < z_text.size() && std::isdigit(static_cast<unsigned char>(z_text[j]))) ++j;
      if (j == digit_start || j - digit_start > 18) break;
      out.push_back(std::stoll(z_text.substr(num_start, j - num_start)));
      // Continue past " and " to the next clause if there is one.
      if (low.compare(j, 5, " and ") == 0) i = j + 5;
      else break;
    }
    pos += 11;
  }
  return out;
}

}  // namespace

CompletionResult simulate(const RequestPlan& plan, const OracleConfig& config,
                          const ModelKind& kind, const ProblemInstance& instance) {
  config.validate();
  const Value gold = gold_value(instance);
  const std::string z_text = plan.fixed.z ? *plan.fixed.z : instance.question;

  const bool believes = hash_real(config, instance.id, kChBelief) < config.base_acc;
  Value belief = believes ? gold : divergent_value(config, instance, gold, kChWrongDelta);

  const bool chain_mode =
      config.scm == OracleScm::chain ||
      (config.scm == OracleScm::full_connection &&
       hash_real(config, instance.id, kChMode) < config.mix_p);
  const bool cc_mode = config.scm == OracleScm::common_cause ||
                       (config.scm == OracleScm::full_connection && !chain_mode);

  // The oracle's own derivation. A noop-sensitive oracle gets derailed by
  // injected side-condition numerals: its derived value absorbs the first
  // injected value, modeling a spurious surface-feature shortcut.
  Value derived = belief;
  if (config.noop_sensitive && chain_mode) {
    auto noop_vals = parse_noop_values(z_text);
    if (!noop_vals.empty()) derived = shift_value(derived, noop_vals[0], instance.options.size());
  }

  const std::string t_text = plan.fixed.t ? *plan.fixed.t : render_thinking(derived);
  const std::string x_text = plan.fixed.x ? *plan.fixed.x : render_chain(derived, instance.kind);

  Value answer = belief;
  if (config.scm == OracleScm::isolation) {
    answer = belief;
  } else if (cc_mode) {
    auto bias = parse_bias(z_text, instance);
    answer = bias ? *bias : belief;
  } else {
    auto x_conc = parse_conclusion(x_text, instance);
    answer = x_conc ? *x_conc : divergent_value(config, instance, gold, kChGarbageDelta);
    if (config.t_effect) {
      auto t_conc = parse_conclusion(t_text, instance);
      bool agreed = t_conc && x_conc && *t_conc == *x_conc;
      if (!agreed) answer = divergent_value(config, instance, answer, kChCorruptDelta);
    }
  }

  CompletionResult out;
  if (plan.continuation == "graft") {
    // Completing a prompt that already ends with the answer lead.
    out.text = " " + answer.display() + ".";
    return out;
  }
  if (plan.continuation == "quote_reask") {
    out.text = std::string(kAnswerLead) + " " + answer.display() + ".";
    return out;
  }
  std::string text;
  if (kind.has_thinking() && config.emits_thinking)
    text += kind.think_open + "\n" + t_text + "\n" + kind.think_close + "\n";
  text += x_text + "\n" + std::string(kAnswerLead) + " " + answer.display() + ".";
  out.text = text;
  return out;
}

OracleBackend::OracleBackend(OracleConfig config, ModelKind kind,
                             const std::vector<ProblemInstance>& instances)
    : config_(config), kind_(std::move(kind)) {
  config_.validate();
  kind_.validate();
  for (const auto& p : instances) {
    if (!by_id_.emplace(p.id, p).second)
      throw std::runtime_error("oracle: duplicate instance id '" + p.id + "'");
  }
}

std::string OracleBackend::identity() const {
  return std::string("oracle-") + to_string(config_.scm) + "-" +
         sha256_hex(json(config_).dump()).substr(0, 12);
}

CompletionResult OracleBackend::complete(const RequestPlan& plan) {
  auto it = by_id_.find(plan.instance_id);
  if (it == by_id_.end())
    throw std::runtime_error("oracle: unknown instance id '" + plan.instance_id + "'");
  return simulate(plan, config_, kind_, it->second);
}

}  // namespace scmprobe
