#include "scmprobe/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "scmprobe/interventions.hpp"

namespace scmprobe {

void DatasetSpec::validate() const {
  if (tag.empty()) throw std::runtime_error("dataset: tag must not be empty");
  if (arith) {
    if (!path.empty())
      throw std::runtime_error("dataset '" + tag + "': choose a file or arith, not both");
    arith->validate();
  } else if (path.empty()) {
    throw std::runtime_error("dataset '" + tag + "': needs a path or an arith block");
  }
}

void BackendConfig::validate() const {
  if (kind == "oracle") {
    oracle.validate();
  } else if (kind == "http") {
    endpoint.validate();
  } else {
    throw std::runtime_error("backend: kind must be 'oracle' or 'http', got '" + kind + "'");
  }
}

namespace {

// Checks a condition's strategy field parses for its variant. Empty is
// always allowed (default replacement / per-instance bias pick).
void check_condition(const Condition& c, const ModelKind& model) {
  switch (c.variant) {
    case ConditionVariant::baseline:
      if (!c.strategy.empty())
        throw std::runtime_error("condition baseline: strategy must be empty");
      break;
    case ConditionVariant::random_thinking:
      if (!model.has_thinking())
        throw std::runtime_error(
            "condition random_thinking: model family has no thinking channel");
      [[fallthrough]];
    case ConditionVariant::random_cot:
      if (!c.strategy.empty()) replacement_strategy_from_string(c.strategy);
      break;
    case ConditionVariant::instruction_bias:
      if (!c.strategy.empty()) bias_strategy_from_string(c.strategy);
      break;
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (name.empty()) throw std::runtime_error("config: name must not be empty");
  if (out_dir.empty()) throw std::runtime_error("config: out_dir must not be empty");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::runtime_error("config: alpha must be in (0, 1)");
  if (concurrency < 1) throw std::runtime_error("config: concurrency must be >= 1");
  if (answer_max_tokens < 1)
    throw std::runtime_error("config: answer_max_tokens must be >= 1");
  if (gen.max_tokens < 1) throw std::runtime_error("config: gen.max_tokens must be >= 1");
  model.validate();
  backend.validate();
  if (!demonstrations.empty() && model.has_thinking())
    throw std::runtime_error(
        "config: demonstrations require a plain llm model (thinking models are zero-shot)");

  if (datasets.empty()) throw std::runtime_error("config: at least one dataset required");
  std::set<std::string> tags;
  for (const auto& d : datasets) {
    d.validate();
    if (!tags.insert(d.tag).second)
      throw std::runtime_error("config: duplicate dataset tag '" + d.tag + "'");
  }

  if (conditions.empty())
    throw std::runtime_error("config: at least the baseline condition required");
  std::size_t baselines = 0;
  std::set<std::string> slugs;
  for (const auto& c : conditions) {
    check_condition(c, model);
    if (c.variant == ConditionVariant::baseline) ++baselines;
    if (!slugs.insert(c.slug()).second)
      throw std::runtime_error("config: duplicate condition slug '" + c.slug() + "'");
  }
  if (baselines != 1)
    throw std::runtime_error("config: exactly one baseline condition required, got " +
                             std::to_string(baselines));
}

std::vector<Condition> default_conditions(const ModelKind& model, std::uint64_t seed) {
  std::vector<Condition> out;
  out.push_back({ConditionVariant::baseline, "", seed});
  if (model.has_thinking()) out.push_back({ConditionVariant::random_thinking, "", seed});
  out.push_back({ConditionVariant::random_cot, "", seed});
  out.push_back({ConditionVariant::instruction_bias, "", seed});
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("config " + path.string() + ": " + e.what());
  }
  ExperimentConfig config = j.get<ExperimentConfig>();
  if (config.conditions.empty())
    config.conditions = default_conditions(config.model, config.seed);
  config.validate();
  return config;
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path.string());
  out << json(config).dump(2) << "\n";
}

void to_json(json& j, const ModelKind& m) {
  j = json{{"name", m.name},
           {"family", to_string(m.family)},
           {"think_open", m.think_open},
           {"think_close", m.think_close},
           {"answer_markers", m.answer_markers}};
}

void from_json(const json& j, ModelKind& m) {
  ModelKind d;
  m.name = j.value("name", d.name);
  if (j.contains("family")) m.family = model_family_from_string(j.at("family"));
  m.think_open = j.value("think_open", d.think_open);
  m.think_close = j.value("think_close", d.think_close);
  m.answer_markers = j.value("answer_markers", d.answer_markers);
}

void to_json(json& j, const GenParams& g) {
  j = json{{"temperature", g.temperature}, {"max_tokens", g.max_tokens}, {"stop", g.stop}};
}

void from_json(const json& j, GenParams& g) {
  GenParams d;
  g.temperature = j.value("temperature", d.temperature);
  g.max_tokens = j.value("max_tokens", d.max_tokens);
  g.stop = j.value("stop", d.stop);
}

void to_json(json& j, const Demonstration& d) {
  j = json{{"question", d.question}, {"answer", d.answer}};
}

void from_json(const json& j, Demonstration& d) {
  j.at("question").get_to(d.question);
  j.at("answer").get_to(d.answer);
}

void to_json(json& j, const ArithSpec& a) {
  j = json{{"op", to_string(a.op)}, {"digits", a.digits}, {"count", a.count}, {"seed", a.seed}};
}

void from_json(const json& j, ArithSpec& a) {
  ArithSpec d;
  a.op = arith_op_from_string(j.at("op").get<std::string>());
  a.digits = j.value("digits", d.digits);
  a.count = j.value("count", d.count);
  a.seed = j.value("seed", d.seed);
}

void to_json(json& j, const RetryPolicy& r) {
  j = json{{"max_attempts", r.max_attempts}, {"backoff_ms", r.backoff_ms}};
}

void from_json(const json& j, RetryPolicy& r) {
  RetryPolicy d;
  r.max_attempts = j.value("max_attempts", d.max_attempts);
  r.backoff_ms = j.value("backoff_ms", d.backoff_ms);
}

void to_json(json& j, const EndpointProfile& e) {
  j = json{{"base_url", e.base_url},
           {"chat_path", e.chat_path},
           {"completions_path", e.completions_path},
           {"model", e.model},
           {"flavor", to_string(e.flavor)},
           {"supports_prefill", e.supports_prefill},
           {"auth_env", e.auth_env},
           {"timeout_s", e.timeout_s},
           {"max_inflight", e.max_inflight},
           {"retry", e.retry}};
}

void from_json(const json& j, EndpointProfile& e) {
  EndpointProfile d;
  e.base_url = j.value("base_url", d.base_url);
  e.chat_path = j.value("chat_path", d.chat_path);
  e.completions_path = j.value("completions_path", d.completions_path);
  e.model = j.value("model", d.model);
  if (j.contains("flavor")) e.flavor = api_flavor_from_string(j.at("flavor"));
  e.supports_prefill = j.value("supports_prefill", d.supports_prefill);
  e.auth_env = j.value("auth_env", d.auth_env);
  e.timeout_s = j.value("timeout_s", d.timeout_s);
  e.max_inflight = j.value("max_inflight", d.max_inflight);
  e.retry = j.value("retry", d.retry);
}

void to_json(json& j, const DatasetSpec& d) {
  j = json{{"tag", d.tag}, {"schema", to_string(d.schema)}};
  if (!d.path.empty()) j["path"] = d.path;
  if (d.arith) j["arith"] = *d.arith;
  if (d.subsample > 0) j["subsample"] = d.subsample;
}

void from_json(const json& j, DatasetSpec& d) {
  d.tag = j.value("tag", std::string());
  d.path = j.value("path", std::string());
  if (j.contains("schema")) d.schema = dataset_schema_from_string(j.at("schema"));
  if (j.contains("arith")) d.arith = j.at("arith").get<ArithSpec>();
  d.subsample = j.value("subsample", std::size_t{0});
  if (d.tag.empty() && j.contains("arith"))
    d.tag = std::string(to_string(d.arith->op)) + "-" + std::to_string(d.arith->digits) + "d";
}

void to_json(json& j, const BackendConfig& b) {
  j = json{{"kind", b.kind}};
  if (b.kind == "oracle") j["oracle"] = b.oracle;
  if (b.kind == "http") j["endpoint"] = b.endpoint;
}

void from_json(const json& j, BackendConfig& b) {
  b.kind = j.value("kind", std::string("oracle"));
  if (j.contains("oracle")) b.oracle = j.at("oracle").get<OracleConfig>();
  if (j.contains("endpoint")) b.endpoint = j.at("endpoint").get<EndpointProfile>();
}

// out_dir and cache_dir are invocation details, not experiment semantics;
// leaving them out keeps artifact snapshots byte-identical across reruns
// into different directories.
void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"name", c.name},
           {"seed", c.seed},
           {"alpha", c.alpha},
           {"mcnemar", to_string(c.method)},
           {"continuation", to_string(c.continuation)},
           {"concurrency", c.concurrency},
           {"model", c.model},
           {"backend", c.backend},
           {"gen", c.gen},
           {"answer_max_tokens", c.answer_max_tokens},
           {"datasets", c.datasets},
           {"conditions", c.conditions}};
  if (!c.demonstrations.empty()) j["demonstrations"] = c.demonstrations;
}

void from_json(const json& j, ExperimentConfig& c) {
  ExperimentConfig d;
  c.name = j.value("name", d.name);
  c.out_dir = j.value("out_dir", d.out_dir);
  c.cache_dir = j.value("cache_dir", d.cache_dir);
  c.seed = j.value("seed", d.seed);
  c.alpha = j.value("alpha", d.alpha);
  if (j.contains("mcnemar")) c.method = mcnemar_method_from_string(j.at("mcnemar"));
  if (j.contains("continuation"))
    c.continuation = continuation_strategy_from_string(j.at("continuation"));
  c.concurrency = j.value("concurrency", d.concurrency);
  if (j.contains("model")) c.model = j.at("model").get<ModelKind>();
  if (j.contains("demonstrations"))
    c.demonstrations = j.at("demonstrations").get<std::vector<Demonstration>>();
  if (j.contains("backend")) c.backend = j.at("backend").get<BackendConfig>();
  if (j.contains("gen")) c.gen = j.at("gen").get<GenParams>();
  c.answer_max_tokens = j.value("answer_max_tokens", d.answer_max_tokens);
  if (j.contains("datasets")) c.datasets = j.at("datasets").get<std::vector<DatasetSpec>>();
  if (j.contains("conditions")) c.conditions = j.at("conditions").get<std::vector<Condition>>();
}

}  // namespace scmprobe
