#include "scmprobe/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "scmprobe/grading.hpp"
#include "scmprobe/interventions.hpp"
#include "scmprobe/oracle.hpp"
#include "scmprobe/rng.hpp"

namespace scmprobe {

const char* to_string(Edge e) {
  switch (e) {
    case Edge::z_to_y: return "Z->Y";
    case Edge::t_to_y: return "T->Y";
    case Edge::x_to_y: return "X->Y";
  }
  throw std::logic_error("unreachable Edge");
}

Edge edge_from_string(const std::string& s) {
  if (s == "Z->Y") return Edge::z_to_y;
  if (s == "T->Y") return Edge::t_to_y;
  if (s == "X->Y") return Edge::x_to_y;
  throw std::runtime_error("unknown edge: " + s);
}

Edge edge_for(const Condition& condition) {
  switch (condition.variant) {
    case ConditionVariant::instruction_bias: return Edge::z_to_y;
    case ConditionVariant::random_thinking: return Edge::t_to_y;
    case ConditionVariant::random_cot: return Edge::x_to_y;
    case ConditionVariant::baseline: break;
  }
  throw std::runtime_error("baseline condition probes no edge");
}

LoadedDataset load_dataset(const DatasetSpec& spec) {
  spec.validate();
  LoadedDataset out;
  out.tag = spec.tag;
  if (spec.arith) {
    out.instances = gen_arith(*spec.arith);
    for (auto& p : out.instances) p.dataset = spec.tag;
  } else {
    out.instances = load_jsonl(spec.path, spec.schema, spec.tag);
  }
  if (spec.subsample > 0)
    out.instances = subsample(out.instances, spec.subsample, spec.arith ? spec.arith->seed : 0);
  return out;
}

const ConditionRun& DatasetRun::baseline() const {
  for (const auto& c : conditions)
    if (c.condition.variant == ConditionVariant::baseline) return c;
  throw std::runtime_error("dataset run '" + dataset + "' has no baseline condition");
}

namespace {

// Per-instance draw channels for intervention randomness. Everything is
// keyed by (condition seed, instance id) so thread scheduling and condition
// order cannot move a draw.
enum DrawChannel : std::uint64_t {
  kChanBias = 10,
  kChanThinking = 11,
  kChanCot = 12,
};

std::string trim_copy(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Runs f(0..n-1), possibly on several workers. Any exception aborts the
// batch and is rethrown on the caller thread.
template <typename F>
void for_each_index(std::size_t n, int concurrency, F&& f) {
  if (concurrency <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(concurrency), n);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

double accuracy_over(const std::vector<TrialResult>& trials, long long* counted = nullptr) {
  long long n = 0, correct = 0;
  for (const auto& t : trials) {
    if (t.excluded) continue;
    ++n;
    if (t.correct) ++correct;
  }
  if (counted) *counted = n;
  return n == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace

Orchestrator::Orchestrator(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  cache_ = config_.cache_dir.empty() ? std::make_shared<ResponseCache>()
                                     : std::make_shared<ResponseCache>(config_.cache_dir);
}

Orchestrator::Orchestrator(ExperimentConfig config, std::shared_ptr<ModelBackend> backend,
                           std::shared_ptr<ResponseCache> cache)
    : config_(std::move(config)), cache_(std::move(cache)), injected_(std::move(backend)) {
  config_.validate();
  if (!cache_)
    cache_ = config_.cache_dir.empty() ? std::make_shared<ResponseCache>()
                                       : std::make_shared<ResponseCache>(config_.cache_dir);
}

std::vector<LoadedDataset> Orchestrator::load_datasets() const {
  std::vector<LoadedDataset> out;
  out.reserve(config_.datasets.size());
  for (const auto& spec : config_.datasets) out.push_back(load_dataset(spec));
  return out;
}

std::shared_ptr<ModelBackend> Orchestrator::backend_for(
    const std::vector<ProblemInstance>& instances) {
  std::shared_ptr<ModelBackend> inner = injected_;
  if (!inner) {
    if (config_.backend.kind == "oracle")
      inner = std::make_shared<OracleBackend>(config_.backend.oracle, config_.model, instances);
    else
      inner = std::make_shared<HttpBackend>(config_.backend.endpoint);
  }
  return std::make_shared<CachedBackend>(inner, cache_);
}

TrialResult Orchestrator::run_fresh_trial(const ProblemInstance& instance,
                                          const Condition& condition,
                                          const std::string& dataset_tag, ModelBackend& backend,
                                          const std::optional<std::string>& z_override) {
  RequestPlan plan =
      build_prompt(instance, config_.model, config_.gen, config_.demonstrations, z_override);
  plan.dataset = dataset_tag;
  plan.condition = condition;

  TrialResult trial;
  trial.instance_id = instance.id;
  trial.condition = condition;
  trial.request_fingerprint = request_fingerprint(plan, backend.identity());

  CompletionResult completion = backend.complete(plan);
  trial.transcript = parse_transcript(completion.text, config_.model);
  trial.extracted =
      extract_answer(trial.transcript.answer_text, instance.kind, instance.options.size());
  trial.truncated = completion.truncated;
  trial.correct = !trial.truncated && grade(trial.extracted, instance);
  if (trial.truncated) trial.flags.push_back("truncated");
  return trial;
}

ConditionRun Orchestrator::run_condition(const Condition& condition,
                                         const std::string& dataset_tag,
                                         const std::vector<ProblemInstance>& instances,
                                         const ConditionRun* baseline_run) {
  ConditionRun out;
  out.condition = condition;
  out.dataset = dataset_tag;
  out.trials.resize(instances.size());

  auto backend = backend_for(instances);

  if (condition.variant == ConditionVariant::baseline) {
    for_each_index(instances.size(), config_.concurrency, [&](std::size_t i) {
      out.trials[i] = run_fresh_trial(instances[i], condition, dataset_tag, *backend, std::nullopt);
    });
  } else if (condition.variant == ConditionVariant::instruction_bias) {
    for_each_index(instances.size(), config_.concurrency, [&](std::size_t i) {
      const ProblemInstance& instance = instances[i];
      BiasStrategy strategy =
          condition.strategy.empty()
              ? (instance.kind == AnswerKind::numeric ? BiasStrategy::numeric_offset
                                                      : BiasStrategy::wrong_option)
              : bias_strategy_from_string(condition.strategy);
      Rng rng(stable_hash64(condition.seed, instance.id, kChanBias));
      InstructionBias bias = make_instruction_bias(instance, strategy, rng);
      TrialResult trial =
          run_fresh_trial(instance, condition, dataset_tag, *backend, bias.biased_question);
      trial.flags.push_back("bias_w=" + bias.w);
      out.trials[i] = std::move(trial);
    });
  } else {
    if (!baseline_run)
      throw std::logic_error("replacement condition needs the baseline run first");
    const bool on_thinking = condition.variant == ConditionVariant::random_thinking;
    ReplacementStrategy strategy = condition.strategy.empty()
                                       ? kDefaultReplacement
                                       : replacement_strategy_from_string(condition.strategy);

    // Baseline transcripts keyed by instance; their segments are both the
    // pinned own-segment and the mismatch donor pool.
    std::unordered_map<std::string, const TrialResult*> base_by_id;
    for (const auto& t : baseline_run->trials) base_by_id[t.instance_id] = &t;
    std::vector<SegmentPoolEntry> pool;
    for (const auto& instance : instances) {
      auto it = base_by_id.find(instance.id);
      if (it == base_by_id.end()) continue;
      const Transcript& ts = it->second->transcript;
      std::string segment = trim_copy(on_thinking ? ts.thinking : ts.cot);
      if (!segment.empty()) pool.push_back({instance.id, segment});
    }

    for_each_index(instances.size(), config_.concurrency, [&](std::size_t i) {
      const ProblemInstance& instance = instances[i];
      auto it = base_by_id.find(instance.id);
      if (it == base_by_id.end())
        throw std::runtime_error("no baseline trial for instance '" + instance.id + "'");
      const Transcript& base_ts = it->second->transcript;
      std::string own_thinking = trim_copy(base_ts.thinking);
      std::string own_cot = trim_copy(base_ts.cot);
      std::string own = on_thinking ? own_thinking : own_cot;

      Rng rng(stable_hash64(condition.seed, instance.id,
                            on_thinking ? kChanThinking : kChanCot));
      Replacement repl = make_replacement(pool, instance.id, own, strategy, rng);
      TrialResult trial;
      trial.instance_id = instance.id;
      trial.condition = condition;
      if (repl.degenerate) {
        trial.excluded = true;
        trial.flags.push_back("degenerate_replacement");
        out.trials[i] = std::move(trial);
        return;
      }

      std::optional<std::string> t_text;
      if (config_.model.has_thinking())
        t_text = on_thinking ? repl.text : own_thinking;
      std::string x_text = on_thinking ? own_cot : repl.text;

      RequestPlan plan = assemble_continuation(
          instance, config_.model, condition, instance.question, t_text, x_text,
          config_.continuation, config_.gen, config_.answer_max_tokens,
          config_.demonstrations);
      plan.dataset = dataset_tag;
      trial.request_fingerprint = request_fingerprint(plan, backend->identity());

      CompletionResult completion = backend->complete(plan);
      trial.transcript.thinking = t_text.value_or("");
      trial.transcript.cot = x_text;
      trial.transcript.answer_text = plan.response_prefix + completion.text;
      trial.extracted =
          extract_answer(trial.transcript.answer_text, instance.kind, instance.options.size());
      trial.truncated = completion.truncated;
      trial.correct = !trial.truncated && grade(trial.extracted, instance);
      if (trial.truncated) trial.flags.push_back("truncated");
      if (!repl.source_id.empty()) trial.flags.push_back("donor=" + repl.source_id);
      out.trials[i] = std::move(trial);
    });
  }

  // Aggregation and artifacts use one deterministic order regardless of how
  // the work was scheduled.
  std::stable_sort(out.trials.begin(), out.trials.end(),
                   [](const TrialResult& a, const TrialResult& b) {
                     return a.instance_id < b.instance_id;
                   });
  return out;
}

ExperimentRun Orchestrator::run() {
  ExperimentRun out;
  out.config = config_;
  for (const auto& loaded : load_datasets()) {
    DatasetRun ds;
    ds.dataset = loaded.tag;
    ds.instances = loaded.instances;

    const Condition* baseline_cond = nullptr;
    for (const auto& c : config_.conditions)
      if (c.variant == ConditionVariant::baseline) baseline_cond = &c;
    ConditionRun baseline =
        run_condition(*baseline_cond, loaded.tag, loaded.instances, nullptr);

    for (const auto& condition : config_.conditions) {
      if (condition.variant == ConditionVariant::baseline) {
        ds.conditions.push_back(baseline);
      } else {
        ds.conditions.push_back(
            run_condition(condition, loaded.tag, loaded.instances, &baseline));
      }
    }
    out.datasets.push_back(std::move(ds));
  }
  cache_->compact();
  return out;
}

ExperimentAnalysis analyze(const ExperimentRun& run) {
  ExperimentAnalysis out;
  out.name = run.config.name;
  out.alpha = run.config.alpha;
  out.method = run.config.method;

  std::vector<ScmResult> classified;
  for (const auto& ds : run.datasets) {
    DatasetAnalysis da;
    da.dataset = ds.dataset;
    da.instances = static_cast<long long>(ds.instances.size());
    const ConditionRun& baseline = ds.baseline();
    da.baseline_acc = accuracy_over(baseline.trials, &da.baseline_trials);

    bool have_edge[3] = {false, false, false};
    bool flag_edge[3] = {false, false, false};
    for (const auto& cr : ds.conditions) {
      if (cr.condition.variant == ConditionVariant::baseline) continue;
      EdgeAnalysis ea;
      ea.condition = cr.condition;
      ea.edge = edge_for(cr.condition);
      PairedJoin join = build_paired_table(baseline.trials, cr.trials);
      ea.test = significance(join.table, run.config.alpha, run.config.method);
      ea.discarded_missing = join.discarded_missing;
      ea.discarded_excluded = join.discarded_excluded;
      int idx = static_cast<int>(ea.edge);
      if (!have_edge[idx]) {
        have_edge[idx] = true;
        flag_edge[idx] = ea.test.significant;
      }
      da.edges.push_back(std::move(ea));
    }

    const bool z = flag_edge[static_cast<int>(Edge::z_to_y)];
    const bool t = flag_edge[static_cast<int>(Edge::t_to_y)];
    const bool x = flag_edge[static_cast<int>(Edge::x_to_y)];
    const bool has_t = have_edge[static_cast<int>(Edge::t_to_y)];
    if (!da.edges.empty()) {
      if (has_t) {
        da.scm = classify4(EdgeFlags{z, t, x});
      } else {
        ScmResult r;
        r.major = classify3(z, x);
        da.scm = r;
      }
      classified.push_back(*da.scm);
    }
    out.datasets.push_back(std::move(da));
  }
  if (!classified.empty()) out.distribution = scm_distribution(classified);
  return out;
}

std::string noop_quadrant(double clean_acc, double noop_acc, double threshold) {
  const bool clean_high = clean_acc >= threshold;
  const bool noop_high = noop_acc >= threshold;
  if (clean_high && noop_high) return "strong_causality";
  if (clean_high && !noop_high) return "weak_causality_spurious";
  if (!clean_high && !noop_high) return "low_competence";
  return "anomalous_gain";
}

NoopEvalResult noop_delta(const std::string& dataset_tag,
                          const std::vector<TrialResult>& clean_trials,
                          const std::vector<TrialResult>& noop_trials, double threshold) {
  std::set<std::string> clean_ids, noop_ids;
  for (const auto& t : clean_trials) clean_ids.insert(t.instance_id);
  for (const auto& t : noop_trials) noop_ids.insert(t.instance_id);
  std::vector<std::string> orphans;
  for (const auto& id : clean_ids)
    if (!noop_ids.count(id + "-noop")) orphans.push_back(id);
  for (const auto& id : noop_ids) {
    bool paired = id.size() > 5 && id.compare(id.size() - 5, 5, "-noop") == 0 &&
                  clean_ids.count(id.substr(0, id.size() - 5));
    if (!paired) orphans.push_back(id);
  }
  if (!orphans.empty()) {
    std::string msg = "noop_delta: unpaired ids:";
    for (std::size_t i = 0; i < orphans.size() && i < 10; ++i) msg += " " + orphans[i];
    if (orphans.size() > 10) msg += " (+" + std::to_string(orphans.size() - 10) + " more)";
    throw std::runtime_error(msg);
  }

  NoopEvalResult out;
  out.dataset = dataset_tag;
  out.n = static_cast<long long>(clean_ids.size());
  out.clean_acc = accuracy_over(clean_trials);
  out.noop_acc = accuracy_over(noop_trials);
  out.delta = delta_pct(out.clean_acc, out.noop_acc);
  out.quadrant = noop_quadrant(out.clean_acc, out.noop_acc, threshold);
  out.clean_trials = clean_trials;
  out.noop_trials = noop_trials;
  return out;
}

std::vector<NoopEvalResult> Orchestrator::noop_eval(NoopMode mode, std::uint64_t seed,
                                                    double threshold) {
  std::vector<LoadedDataset> datasets = load_datasets();

  NoopProposer proposer = nullptr;
  std::shared_ptr<ModelBackend> propose_backend;
  if (mode == NoopMode::llm_assisted) {
    std::vector<ProblemInstance> all;
    for (const auto& d : datasets)
      all.insert(all.end(), d.instances.begin(), d.instances.end());
    propose_backend = backend_for(all);
    proposer = [this, propose_backend](const ProblemInstance& instance) {
      RequestPlan plan;
      plan.instance_id = instance.id;
      plan.dataset = instance.dataset;
      plan.condition = Condition{ConditionVariant::baseline, "", 0};
      plan.condition.strategy = "";
      std::string text = prompt_template("noop-propose/v1");
      auto sub = [&text](const std::string& key, const std::string& value) {
        std::size_t pos = text.find(key);
        if (pos != std::string::npos) text.replace(pos, key.size(), value);
      };
      sub("{count}", "1 or 2");
      sub("{question}", instance.question);
      plan.prompt = text;
      plan.messages = {{"user", text}};
      plan.gen = config_.gen;
      plan.gen.max_tokens = 128;
      plan.template_name = "noop-propose/v1";
      return propose_backend->complete(plan).text;
    };
  }

  const Condition* baseline_cond = nullptr;
  for (const auto& c : config_.conditions)
    if (c.variant == ConditionVariant::baseline) baseline_cond = &c;

  std::vector<NoopEvalResult> out;
  for (const auto& loaded : datasets) {
    std::vector<ProblemInstance> augmented;
    long long fallbacks = 0;
    augmented.reserve(loaded.instances.size());
    for (const auto& instance : loaded.instances) {
      NoopAugmentation aug = augment_noop(instance, mode, seed, proposer);
      if (!verify_noop(instance, aug.augmented))
        throw std::runtime_error("noop augmentation failed verification on '" + instance.id +
                                 "'");
      if (aug.used_fallback) ++fallbacks;
      augmented.push_back(std::move(aug.augmented));
    }

    ConditionRun clean_run =
        run_condition(*baseline_cond, loaded.tag, loaded.instances, nullptr);
    ConditionRun noop_run =
        run_condition(*baseline_cond, loaded.tag + "-noop", augmented, nullptr);

    NoopEvalResult result = noop_delta(loaded.tag, clean_run.trials, noop_run.trials, threshold);
    result.fallback_count = fallbacks;
    result.augmented = std::move(augmented);
    out.push_back(std::move(result));
  }
  cache_->compact();
  return out;
}

CorrelateResult correlate_series(const std::vector<CheckpointSeries>& series) {
  CorrelateResult out;
  out.series = static_cast<long long>(series.size());
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    if (s.entries.empty())
      throw std::runtime_error("correlate: series '" + s.name + "' has no entries");
    std::set<std::string> labels;
    for (const auto& e : s.entries)
      if (!labels.insert(e.label).second)
        throw std::runtime_error("correlate: series '" + s.name + "' repeats label '" +
                                 e.label + "'");
    const CheckpointEntry& ref = s.entries.front();
    for (std::size_t i = 1; i < s.entries.size(); ++i) {
      double dx = s.entries[i].scm_i_pct - ref.scm_i_pct;
      double dy = s.entries[i].delta_pct - ref.delta_pct;
      xs.push_back(dx);
      ys.push_back(dy);
      out.points.emplace_back(dx, dy);
    }
  }
  if (xs.size() < 3)
    throw std::runtime_error("correlate: need at least 3 pooled checkpoint deltas, got " +
                             std::to_string(xs.size()));
  out.stats = pearson(xs, ys);
  return out;
}

void to_json(json& j, const CheckpointEntry& e) {
  j = json{{"label", e.label}, {"scm_i_pct", e.scm_i_pct}, {"delta_pct", e.delta_pct}};
}

void from_json(const json& j, CheckpointEntry& e) {
  j.at("label").get_to(e.label);
  j.at("scm_i_pct").get_to(e.scm_i_pct);
  j.at("delta_pct").get_to(e.delta_pct);
}

void to_json(json& j, const CheckpointSeries& s) {
  j = json{{"name", s.name}, {"entries", s.entries}};
}

void from_json(const json& j, CheckpointSeries& s) {
  j.at("name").get_to(s.name);
  j.at("entries").get_to(s.entries);
}

std::vector<CheckpointSeries> load_checkpoint_series(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open series file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("series " + path.string() + ": " + e.what());
  }
  std::vector<CheckpointSeries> out;
  if (j.is_array())
    out = j.get<std::vector<CheckpointSeries>>();
  else
    out.push_back(j.get<CheckpointSeries>());
  return out;
}

namespace {

void audit_entry(const json& entry, const std::string& where, AuditReport& report) {
  auto issue = [&](const std::string& what) { report.issues.push_back(where + ": " + what); };
  if (!entry.contains("key") || !entry.contains("request") || !entry.contains("response")) {
    issue("missing key/request/response field");
    return;
  }
  const json& request = entry.at("request");
  if (entry.at("key").get<std::string>() != sha256_hex(request.dump()))
    issue("key does not match request hash");
  if (!entry.at("response").contains("text")) issue("response has no text");

  std::string prompt = request.value("prompt", std::string());
  std::string chat;
  if (request.contains("messages"))
    for (const auto& m : request.at("messages")) chat += m.value("content", std::string()) + "\n";
  if (request.contains("fixed")) {
    for (const auto& [name, value] : request.at("fixed").items()) {
      const std::string segment = value.get<std::string>();
      if (segment.empty()) continue;
      if (prompt.find(segment) == std::string::npos)
        issue("fixed segment '" + name + "' not embedded verbatim in prompt");
      if (!chat.empty() && chat.find(segment) == std::string::npos)
        issue("fixed segment '" + name + "' not embedded verbatim in messages");
    }
  }
}

}  // namespace

AuditReport audit_cache_dir(const std::filesystem::path& root) {
  AuditReport report;
  if (!std::filesystem::exists(root)) {
    report.issues.push_back("cache root does not exist: " + root.string());
    return report;
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension();
    if (ext == ".jsonl" || ext == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file);
    if (file.extension() == ".json") {
      json entry;
      try {
        entry = json::parse(in);
      } catch (const json::exception& e) {
        report.issues.push_back(file.string() + ": unparseable: " + e.what());
        continue;
      }
      ++report.checked;
      audit_entry(entry, file.string(), report);
      continue;
    }
    std::string line;
    long long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json entry;
      try {
        entry = json::parse(line);
      } catch (const json::exception& e) {
        report.issues.push_back(file.string() + ":" + std::to_string(lineno) +
                                ": unparseable: " + e.what());
        continue;
      }
      ++report.checked;
      audit_entry(entry, file.string() + ":" + std::to_string(lineno), report);
    }
  }
  return report;
}

void to_json(json& j, const EdgeAnalysis& e) {
  j = json{{"condition", e.condition},
           {"edge", to_string(e.edge)},
           {"test", e.test},
           {"discarded_missing", e.discarded_missing},
           {"discarded_excluded", e.discarded_excluded}};
}

void from_json(const json& j, EdgeAnalysis& e) {
  j.at("condition").get_to(e.condition);
  e.edge = edge_from_string(j.at("edge").get<std::string>());
  j.at("test").get_to(e.test);
  e.discarded_missing = j.value("discarded_missing", 0LL);
  e.discarded_excluded = j.value("discarded_excluded", 0LL);
}

void to_json(json& j, const DatasetAnalysis& d) {
  j = json{{"dataset", d.dataset},
           {"instances", d.instances},
           {"baseline_acc", d.baseline_acc},
           {"baseline_trials", d.baseline_trials},
           {"edges", d.edges}};
  if (d.scm) j["scm"] = *d.scm;
}

void from_json(const json& j, DatasetAnalysis& d) {
  j.at("dataset").get_to(d.dataset);
  j.at("instances").get_to(d.instances);
  j.at("baseline_acc").get_to(d.baseline_acc);
  j.at("baseline_trials").get_to(d.baseline_trials);
  j.at("edges").get_to(d.edges);
  if (j.contains("scm")) d.scm = j.at("scm").get<ScmResult>();
}

void to_json(json& j, const ExperimentAnalysis& a) {
  j = json{{"name", a.name},
           {"alpha", a.alpha},
           {"mcnemar", to_string(a.method)},
           {"datasets", a.datasets}};
  if (a.distribution) {
    json d = json::object();
    json counts = json::object(), percent = json::object();
    for (ScmMajor m : {ScmMajor::i, ScmMajor::ii, ScmMajor::iii, ScmMajor::iv}) {
      counts[to_string(m)] = a.distribution->count(m);
      percent[to_string(m)] = a.distribution->percent(m);
    }
    d["counts"] = counts;
    d["percent"] = percent;
    d["total"] = a.distribution->total;
    j["distribution"] = d;
  }
}

void from_json(const json& j, ExperimentAnalysis& a) {
  j.at("name").get_to(a.name);
  j.at("alpha").get_to(a.alpha);
  a.method = mcnemar_method_from_string(j.at("mcnemar").get<std::string>());
  j.at("datasets").get_to(a.datasets);
  a.distribution.reset();
  if (j.contains("distribution")) {
    ScmDistribution d;
    const json& dj = j.at("distribution");
    for (ScmMajor m : {ScmMajor::i, ScmMajor::ii, ScmMajor::iii, ScmMajor::iv})
      d.counts[static_cast<int>(m)] = dj.at("counts").at(to_string(m)).get<long long>();
    d.total = dj.at("total").get<long long>();
    a.distribution = d;
  }
}

void to_json(json& j, const NoopEvalResult& r) {
  j = json{{"dataset", r.dataset},
           {"n", r.n},
           {"clean_acc", r.clean_acc},
           {"noop_acc", r.noop_acc},
           {"delta_pct", r.delta},
           {"quadrant", r.quadrant},
           {"fallback_count", r.fallback_count}};
}

void from_json(const json& j, NoopEvalResult& r) {
  j.at("dataset").get_to(r.dataset);
  j.at("n").get_to(r.n);
  j.at("clean_acc").get_to(r.clean_acc);
  j.at("noop_acc").get_to(r.noop_acc);
  j.at("delta_pct").get_to(r.delta);
  j.at("quadrant").get_to(r.quadrant);
  r.fallback_count = j.value("fallback_count", 0LL);
}

}  // namespace scmprobe
