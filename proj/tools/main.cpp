#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scmprobe/config.hpp"
#include "scmprobe/datagen.hpp"
#include "scmprobe/grading.hpp"
#include "scmprobe/oracle.hpp"
#include "scmprobe/orchestrator.hpp"
#include "scmprobe/report.hpp"
#include "scmprobe/version.hpp"

namespace {

using namespace scmprobe;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool offline = false;
  std::string oracle_name;
};

OracleConfig oracle_preset(const std::string& name, std::uint64_t seed) {
  OracleConfig c;
  c.seed = seed;
  if (name == "chain") {
    c.scm = OracleScm::chain;
  } else if (name == "chain-t") {
    c.scm = OracleScm::chain;
    c.t_effect = true;
  } else if (name == "common_cause") {
    c.scm = OracleScm::common_cause;
    c.base_acc = 0.9;
  } else if (name == "full_connection") {
    c.scm = OracleScm::full_connection;
    c.mix_p = 0.5;
  } else if (name == "isolation") {
    c.scm = OracleScm::isolation;
    c.base_acc = 0.9;
  } else if (name == "spurious") {
    c.scm = OracleScm::chain;
    c.noop_sensitive = true;
  } else {
    throw std::runtime_error(
        "unknown oracle preset '" + name +
        "' (try chain, chain-t, common_cause, full_connection, isolation, spurious)");
  }
  return c;
}

ExperimentConfig load_effective_config(const GlobalArgs& g) {
  if (g.config_path.empty())
    throw std::runtime_error("this subcommand needs --config <path>");
  ExperimentConfig config = load_config(g.config_path);
  if (!g.out_dir.empty()) config.out_dir = g.out_dir;
  if (g.seed) {
    config.seed = *g.seed;
    for (auto& c : config.conditions) c.seed = *g.seed;
    if (config.backend.kind == "oracle") config.backend.oracle.seed = *g.seed;
  }
  if (!g.oracle_name.empty()) {
    config.backend.kind = "oracle";
    config.backend.oracle = oracle_preset(g.oracle_name, config.seed);
  }
  config.validate();
  return config;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void print_analysis(const ExperimentAnalysis& analysis) {
  for (const auto& ds : analysis.datasets) {
    std::printf("%s: baseline %.3f over %lld trials\n", ds.dataset.c_str(), ds.baseline_acc,
                ds.baseline_trials);
    for (const auto& e : ds.edges)
      std::printf("  %-22s %-5s ate %.3f  r-ate %s  p %.3g\n",
                  e.condition.slug().c_str(), to_string(e.edge), e.test.ate,
                  r_ate_cell(e.test.r_ate, e.test.significant).c_str(), e.test.p_value);
    if (ds.scm) std::printf("  scm: %s\n", ds.scm->label().c_str());
  }
  if (analysis.distribution) {
    const auto& d = *analysis.distribution;
    std::printf("distribution:");
    for (ScmMajor m : {ScmMajor::i, ScmMajor::ii, ScmMajor::iii, ScmMajor::iv})
      std::printf(" %s=%lld(%d%%)", to_string(m), d.count(m), d.percent(m));
    std::printf(" of %lld\n", d.total);
  }
}

int cmd_gen_arith(const GlobalArgs& g, const std::string& op, int digits, long long count,
                  const std::string& output) {
  ArithSpec spec;
  spec.op = arith_op_from_string(op);
  spec.digits = digits;
  spec.count = count;
  spec.seed = g.seed.value_or(0);
  auto instances = gen_arith(spec);
  save_jsonl(output, instances);
  std::printf("wrote %zu instances to %s\n", instances.size(), output.c_str());
  return 0;
}

int cmd_load(const std::string& input, const std::string& schema, const std::string& tag,
             const std::string& output) {
  auto instances = load_jsonl(input, dataset_schema_from_string(schema), tag);
  if (!output.empty()) {
    save_jsonl(output, instances);
    std::printf("validated %zu instances, canonical copy at %s\n", instances.size(),
                output.c_str());
  } else {
    std::printf("validated %zu instances\n", instances.size());
  }
  return 0;
}

int cmd_augment_noop(const GlobalArgs& g, const std::string& input, const std::string& schema,
                     const std::string& tag, const std::string& mode_name,
                     const std::string& output) {
  auto instances = load_jsonl(input, dataset_schema_from_string(schema), tag);
  NoopMode mode = noop_mode_from_string(mode_name);
  NoopProposer proposer = nullptr;
  if (mode == NoopMode::llm_assisted)
    throw std::runtime_error(
        "augment-noop: llm_assisted proposals run inside noop-eval (which has a backend); "
        "this offline subcommand supports --mode template");
  std::vector<ProblemInstance> augmented;
  long long fallbacks = 0;
  for (const auto& instance : instances) {
    NoopAugmentation aug = augment_noop(instance, mode, g.seed.value_or(0), proposer);
    if (!verify_noop(instance, aug.augmented))
      throw std::runtime_error("augmentation failed verification on '" + instance.id + "'");
    if (aug.used_fallback) ++fallbacks;
    augmented.push_back(std::move(aug.augmented));
  }
  save_jsonl(output, augmented);
  std::printf("wrote %zu augmented instances to %s (%lld fallbacks)\n", augmented.size(),
              output.c_str(), fallbacks);
  return 0;
}

int cmd_run(const GlobalArgs& g, bool force) {
  ExperimentConfig config = load_effective_config(g);
  Orchestrator orch(config);
  ExperimentRun run = orch.run();
  ExperimentAnalysis analysis = analyze(run);
  write_run_artifacts(config.out_dir, run, analysis, {}, force);
  print_analysis(analysis);
  std::printf("cache: %lld hits, %lld stores\n", orch.cache().hits(), orch.cache().stores());
  std::printf("artifacts: %s\n", config.out_dir.c_str());
  return 0;
}

int cmd_analyze(const GlobalArgs& g, const std::string& artifacts) {
  std::string dir = !artifacts.empty() ? artifacts : g.out_dir;
  if (dir.empty()) throw std::runtime_error("analyze: pass --artifacts <dir> (or --out)");
  ExperimentRun run = load_run_artifacts(dir);
  ExperimentAnalysis analysis = analyze(run);
  json results{{"tool_version", kToolVersion}, {"analysis", analysis}};
  std::ofstream out(std::filesystem::path(dir) / "results.json", std::ios::binary);
  out << results.dump(2) << "\n";
  print_analysis(analysis);
  return 0;
}

int cmd_classify(const std::string& artifacts, std::optional<bool> z, std::optional<bool> t,
                 std::optional<bool> x) {
  if (!artifacts.empty()) {
    ExperimentRun run = load_run_artifacts(artifacts);
    ExperimentAnalysis analysis = analyze(run);
    print_analysis(analysis);
    return 0;
  }
  if (!z || !x)
    throw std::runtime_error("classify: pass --artifacts <dir>, or --z and --x (and "
                             "optionally --t) as true/false");
  ScmResult result;
  if (t) {
    result = classify4(EdgeFlags{*z, *t, *x});
  } else {
    result.major = classify3(*z, *x);
  }
  std::printf("%s\n", result.label().c_str());
  return 0;
}

int cmd_noop_eval(const GlobalArgs& g, const std::string& mode_name, double threshold,
                  std::uint64_t noop_seed, bool force) {
  ExperimentConfig config = load_effective_config(g);
  Orchestrator orch(config);
  auto results = orch.noop_eval(noop_mode_from_string(mode_name), noop_seed, threshold);
  write_noop_artifacts(config.out_dir, config, results, force);
  for (const auto& r : results)
    std::printf("%s: clean %.3f noop %.3f delta %.1f%% -> %s\n", r.dataset.c_str(),
                r.clean_acc, r.noop_acc, r.delta * 100.0, r.quadrant.c_str());
  std::printf("cache: %lld hits, %lld stores\n", orch.cache().hits(), orch.cache().stores());
  std::printf("artifacts: %s\n", config.out_dir.c_str());
  return 0;
}

int cmd_correlate(const std::vector<std::string>& series_paths, const std::string& out_path) {
  std::vector<CheckpointSeries> series;
  for (const auto& path : series_paths) {
    auto loaded = load_checkpoint_series(path);
    series.insert(series.end(), loaded.begin(), loaded.end());
  }
  CorrelateResult result = correlate_series(series);
  std::printf("pooled %zu deltas from %lld series\n", result.points.size(), result.series);
  std::printf("%-12s %-12s\n", "d_scm_i_pct", "d_delta_pct");
  for (const auto& [dx, dy] : result.points) std::printf("%-12g %-12g\n", dx, dy);
  std::printf("pearson r = %.6f, p = %.6f, n = %lld\n", result.stats.r, result.stats.p,
              result.stats.n);
  if (!out_path.empty()) {
    json j{{"tool_version", kToolVersion},
           {"r", result.stats.r},
           {"p", result.stats.p},
           {"n", result.stats.n},
           {"series", result.series}};
    json points = json::array();
    for (const auto& [dx, dy] : result.points)
      points.push_back({{"d_scm_i_pct", dx}, {"d_delta_pct", dy}});
    j["points"] = points;
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << j.dump(2) << "\n";
    std::printf("wrote %s\n", out_path.c_str());
  }
  return 0;
}

int cmd_report(const GlobalArgs& g, const std::string& artifacts) {
  std::string dir = !artifacts.empty() ? artifacts : g.out_dir;
  if (dir.empty()) throw std::runtime_error("report: pass --artifacts <dir> (or --out)");
  std::filesystem::path root(dir);
  ExperimentRun run = load_run_artifacts(root);
  ExperimentAnalysis analysis = analyze(run);
  std::vector<NoopEvalResult> noop;
  if (std::filesystem::exists(root / "noop.json")) {
    json nj = json::parse(read_file((root / "noop.json").string()));
    noop = nj.at("results").get<std::vector<NoopEvalResult>>();
  }
  std::ofstream md(root / "report.md", std::ios::binary);
  md << render_report_md(run.config, &run, &analysis, noop);
  std::ofstream csv(root / "edges.csv", std::ios::binary);
  csv << render_edges_csv(analysis);
  std::printf("regenerated report.md and edges.csv under %s\n", dir.c_str());
  return 0;
}

int cmd_audit(const GlobalArgs& g, const std::string& artifacts, const std::string& cache_dir) {
  std::string dir = !artifacts.empty() ? artifacts : g.out_dir;
  if (dir.empty() && cache_dir.empty())
    throw std::runtime_error("audit: pass --artifacts <dir> and/or --cache <dir>");
  long long checked = 0;
  std::vector<std::string> issues;
  if (!dir.empty()) {
    AuditReport r = audit_artifacts(dir);
    checked += r.checked;
    issues.insert(issues.end(), r.issues.begin(), r.issues.end());
  }
  if (!cache_dir.empty()) {
    AuditReport r = audit_cache_dir(cache_dir);
    checked += r.checked;
    issues.insert(issues.end(), r.issues.begin(), r.issues.end());
  }
  std::printf("audited %lld records\n", checked);
  for (const auto& issue : issues) std::fprintf(stderr, "issue: %s\n", issue.c_str());
  if (!issues.empty()) {
    std::fprintf(stderr, "%zu issue(s)\n", issues.size());
    return 1;
  }
  std::printf("no issues\n");
  return 0;
}

int cmd_simulate(const GlobalArgs& g, const std::string& dataset_tag, std::size_t index,
                 const std::string& condition_name) {
  ExperimentConfig config = load_effective_config(g);
  if (config.backend.kind != "oracle")
    throw std::runtime_error("simulate: config must use the oracle backend (or pass --oracle)");
  Orchestrator orch(config);
  auto datasets = orch.load_datasets();
  const LoadedDataset* ds = nullptr;
  for (const auto& d : datasets)
    if (dataset_tag.empty() || d.tag == dataset_tag) {
      ds = &d;
      break;
    }
  if (!ds) throw std::runtime_error("simulate: no dataset tagged '" + dataset_tag + "'");
  if (index >= ds->instances.size())
    throw std::runtime_error("simulate: index out of range (dataset has " +
                             std::to_string(ds->instances.size()) + " instances)");
  const ProblemInstance& instance = ds->instances[index];

  Condition condition{condition_variant_from_string(condition_name), "", config.seed};
  RequestPlan plan = build_prompt(instance, config.model, config.gen, config.demonstrations);
  plan.dataset = ds->tag;
  plan.condition = condition;
  CompletionResult completion =
      simulate(plan, config.backend.oracle, config.model, instance);
  Transcript transcript = parse_transcript(completion.text, config.model);
  ExtractedAnswer extracted =
      extract_answer(transcript.answer_text, instance.kind, instance.options.size());

  std::printf("instance: %s\nquestion: %s\ngold: %s\n\n--- raw completion ---\n%s\n",
              instance.id.c_str(), instance.question.c_str(), instance.gold.value.c_str(),
              completion.text.c_str());
  std::printf("\n--- parsed ---\nthinking: %s\ncot: %s\nanswer_text: %s\n",
              transcript.thinking.c_str(), transcript.cot.c_str(),
              transcript.answer_text.c_str());
  std::printf("extracted: '%s' (%s) -> %s\n", extracted.value.c_str(),
              to_string(extracted.confidence),
              grade(extracted, instance) ? "correct" : "wrong");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal-structure probe for chain-of-thought reasoning"};
  app.set_version_flag("--version", std::string("scmprobe ") + kToolVersion);
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "Experiment config JSON");
  app.add_option("--out", g.out_dir, "Output directory override");
  app.add_option("--seed", g.seed, "Seed override (config, conditions, oracle)");
  app.add_flag("--offline", g.offline, "Forbid network access");
  app.add_option("--oracle", g.oracle_name,
                 "Replace the backend with a named oracle preset");

  // gen-arith
  auto* gen = app.add_subcommand("gen-arith", "Generate an arithmetic dataset");
  std::string gen_op = "addition";
  int gen_digits = 9;
  long long gen_count = 500;
  std::string gen_output;
  gen->add_option("--op", gen_op, "addition or multiplication");
  gen->add_option("--digits", gen_digits, "Operand digit count (1-18)");
  gen->add_option("--count", gen_count, "Instance count");
  gen->add_option("--output", gen_output, "Output JSONL path")->required();

  // load
  auto* load = app.add_subcommand("load", "Validate (and normalize) a dataset file");
  std::string load_input, load_schema = "canonical", load_tag = "dataset", load_output;
  load->add_option("--input", load_input, "Input JSONL")->required();
  load->add_option("--schema", load_schema, "canonical, numeric_qa or multiple_choice");
  load->add_option("--tag", load_tag, "Dataset tag");
  load->add_option("--output", load_output, "Write canonical JSONL here");

  // augment-noop
  auto* aug = app.add_subcommand("augment-noop", "Insert irrelevant side conditions");
  std::string aug_input, aug_schema = "canonical", aug_tag = "dataset";
  std::string aug_mode = "template", aug_output;
  aug->add_option("--input", aug_input, "Input JSONL")->required();
  aug->add_option("--schema", aug_schema, "Input schema");
  aug->add_option("--tag", aug_tag, "Dataset tag");
  aug->add_option("--mode", aug_mode, "template (llm_assisted runs inside noop-eval)");
  aug->add_option("--output", aug_output, "Output JSONL path")->required();

  // run
  auto* run = app.add_subcommand("run", "Execute all conditions and write artifacts");
  bool run_force = false;
  run->add_flag("--force", run_force, "Overwrite existing artifacts");

  // analyze
  auto* ana = app.add_subcommand("analyze", "Recompute analysis from written trials");
  std::string ana_artifacts;
  ana->add_option("--artifacts", ana_artifacts, "Artifact directory");

  // classify
  auto* cls = app.add_subcommand("classify", "SCM type from edge flags or artifacts");
  std::string cls_artifacts;
  std::optional<bool> cls_z, cls_t, cls_x;
  cls->add_option("--artifacts", cls_artifacts, "Artifact directory");
  cls->add_option("--z", cls_z, "Z->Y significant (true/false)");
  cls->add_option("--t", cls_t, "T->Y significant (true/false)");
  cls->add_option("--x", cls_x, "X->Y significant (true/false)");

  // noop-eval
  auto* noop = app.add_subcommand("noop-eval", "Clean vs noop-augmented accuracy drop");
  std::string noop_mode = "template";
  double noop_threshold = kDefaultQuadrantThreshold;
  std::uint64_t noop_seed = 0;
  bool noop_force = false;
  noop->add_option("--mode", noop_mode, "template or llm_assisted");
  noop->add_option("--threshold", noop_threshold, "Quadrant accuracy threshold");
  noop->add_option("--noop-seed", noop_seed, "Augmentation seed");
  noop->add_flag("--force", noop_force, "Overwrite existing artifacts");

  // correlate
  auto* corr = app.add_subcommand("correlate", "Pool checkpoint deltas and correlate");
  std::vector<std::string> corr_series;
  std::string corr_out;
  corr->add_option("--series", corr_series, "Checkpoint series JSON file(s)")->required();
  corr->add_option("--output", corr_out, "Write correlation JSON here");

  // report
  auto* rep = app.add_subcommand("report", "Regenerate documents from artifacts");
  std::string rep_artifacts;
  rep->add_option("--artifacts", rep_artifacts, "Artifact directory");

  // audit
  auto* aud = app.add_subcommand("audit", "Recompute and diff artifacts; verify cache");
  std::string aud_artifacts, aud_cache;
  aud->add_option("--artifacts", aud_artifacts, "Artifact directory");
  aud->add_option("--cache", aud_cache, "Cache directory");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Print one oracle completion, parsed");
  std::string sim_dataset, sim_condition = "baseline";
  std::size_t sim_index = 0;
  sim->add_option("--dataset", sim_dataset, "Dataset tag (default: first)");
  sim->add_option("--index", sim_index, "Instance index");
  sim->add_option("--condition", sim_condition, "Condition variant name");

  // Lets --config/--out/--seed/--offline/--oracle appear after the
  // subcommand name as well as before it.
  for (CLI::App* sub : {gen, load, aug, run, ana, cls, noop, corr, rep, aud, sim})
    sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    set_offline(g.offline);
    if (gen->parsed()) return cmd_gen_arith(g, gen_op, gen_digits, gen_count, gen_output);
    if (load->parsed()) return cmd_load(load_input, load_schema, load_tag, load_output);
    if (aug->parsed())
      return cmd_augment_noop(g, aug_input, aug_schema, aug_tag, aug_mode, aug_output);
    if (run->parsed()) return cmd_run(g, run_force);
    if (ana->parsed()) return cmd_analyze(g, ana_artifacts);
    if (cls->parsed()) return cmd_classify(cls_artifacts, cls_z, cls_t, cls_x);
    if (noop->parsed()) return cmd_noop_eval(g, noop_mode, noop_threshold, noop_seed, noop_force);
    if (corr->parsed()) return cmd_correlate(corr_series, corr_out);
    if (rep->parsed()) return cmd_report(g, rep_artifacts);
    if (aud->parsed()) return cmd_audit(g, aud_artifacts, aud_cache);
    if (sim->parsed()) return cmd_simulate(g, sim_dataset, sim_index, sim_condition);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
