#include "scmprobe/report.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "scmprobe/version.hpp"

namespace scmprobe {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("not a number: '" + s + "'");
  return v;
}

std::string r_ate_cell(double r_ate, bool significant) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%_%c", r_ate * 100.0, significant ? 'T' : 'F');
  return buf;
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

std::string condition_row_label(const Condition& c) {
  std::string base;
  switch (c.variant) {
    case ConditionVariant::baseline: base = "default"; break;
    case ConditionVariant::random_thinking: base = "random-thinking"; break;
    case ConditionVariant::random_cot: base = "random-CoT"; break;
    case ConditionVariant::instruction_bias: base = "instruction-bias"; break;
  }
  if (!c.strategy.empty()) base += " (" + c.strategy + ")";
  return base;
}

std::vector<std::string> templates_used(const ExperimentConfig& config,
                                        const ExperimentRun* run) {
  std::set<std::string> names;
  if (run) {
    for (const auto& ds : run->datasets)
      for (const auto& p : ds.instances)
        names.insert(p.kind == AnswerKind::numeric ? "numeric-zeroshot/v1"
                                                   : "choice-zeroshot/v1");
  }
  if (!config.demonstrations.empty()) names.insert("fewshot-block/v1");
  for (const auto& c : config.conditions)
    if (c.variant == ConditionVariant::random_thinking ||
        c.variant == ConditionVariant::random_cot)
      names.insert(config.continuation == ContinuationStrategy::graft ? "graft/v1"
                                                                      : "quote-reask/v1");
  return {names.begin(), names.end()};
}

void ensure_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& item : items) out << json(item).dump() << "\n";
}

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string render_report_md(const ExperimentConfig& config, const ExperimentRun* run,
                             const ExperimentAnalysis* analysis,
                             const std::vector<NoopEvalResult>& noop) {
  std::ostringstream md;
  md << "# " << config.name << "\n\n";
  md << "Model: " << config.model.name << " (" << to_string(config.model.family) << "). ";
  md << "Significance: McNemar " << to_string(config.method) << ", alpha "
     << format_double(config.alpha) << ". ";
  md << "Continuation: " << to_string(config.continuation) << ".\n";

  if (analysis) {
    for (const auto& ds : analysis->datasets) {
      md << "\n## Dataset " << ds.dataset << "\n\n";
      md << "| Condition | n | Accuracy | R-ATE | p-value | Significant |\n";
      md << "| --- | --- | --- | --- | --- | --- |\n";
      md << "| default | " << ds.baseline_trials << " | " << fmt("%.3f", ds.baseline_acc)
         << " | - | - | - |\n";
      for (const auto& e : ds.edges) {
        md << "| " << condition_row_label(e.condition) << " | " << e.test.table.n() << " | "
           << fmt("%.3f", e.test.treated_acc) << " | "
           << r_ate_cell(e.test.r_ate, e.test.significant) << " | "
           << fmt("%.3g", e.test.p_value) << " | " << (e.test.significant ? "yes" : "no")
           << " |\n";
      }
      long long discarded = 0;
      for (const auto& e : ds.edges) discarded += e.discarded_missing + e.discarded_excluded;
      if (discarded > 0)
        md << "\nDiscarded from pairing: " << discarded << " trial(s).\n";
      if (ds.scm) md << "\nSCM type: **" << ds.scm->label() << "**\n";
    }
    if (analysis->distribution) {
      const ScmDistribution& d = *analysis->distribution;
      md << "\n## SCM distribution\n\n";
      md << "| Type | Count | Share |\n| --- | --- | --- |\n";
      for (ScmMajor m : {ScmMajor::i, ScmMajor::ii, ScmMajor::iii, ScmMajor::iv})
        md << "| " << to_string(m) << " | " << d.count(m) << " | " << d.percent(m) << "% |\n";
      md << "\nClassified runs: " << d.total << "\n";
    }
  }

  if (!noop.empty()) {
    md << "\n## Noop sensitivity\n\n";
    md << "| Dataset | n | Clean acc | Noop acc | Delta | Quadrant |\n";
    md << "| --- | --- | --- | --- | --- | --- |\n";
    for (const auto& r : noop) {
      md << "| " << r.dataset << " | " << r.n << " | " << fmt("%.3f", r.clean_acc) << " | "
         << fmt("%.3f", r.noop_acc) << " | " << fmt("%.1f%%", r.delta * 100.0) << " | "
         << r.quadrant << " |\n";
    }
    long long fallbacks = 0;
    for (const auto& r : noop) fallbacks += r.fallback_count;
    if (fallbacks > 0)
      md << "\nProposal fallbacks to template augmentation: " << fallbacks << "\n";
  }

  auto templates = templates_used(config, run);
  if (!templates.empty()) {
    md << "\nPrompt templates: ";
    for (std::size_t i = 0; i < templates.size(); ++i)
      md << (i ? ", " : "") << templates[i];
    md << "\n";
  }
  md << "\nGenerated by scmprobe " << kToolVersion << ".\n";
  return md.str();
}

static const char* kCsvHeader =
    "dataset,condition,edge,n,a,b,c,d,baseline_acc,treated_acc,ate_raw,ate,r_ate,"
    "r_ate_degenerate,p_value,statistic,method,alpha,significant,discarded_missing,"
    "discarded_excluded";

std::string render_edges_csv(const ExperimentAnalysis& analysis) {
  std::ostringstream csv;
  csv << kCsvHeader << "\n";
  for (const auto& ds : analysis.datasets) {
    for (const auto& e : ds.edges) {
      const EdgeTestResult& t = e.test;
      csv << ds.dataset << "," << e.condition.slug() << "," << to_string(e.edge) << ","
          << t.table.n() << "," << t.table.a << "," << t.table.b << "," << t.table.c << ","
          << t.table.d << "," << format_double(t.baseline_acc) << ","
          << format_double(t.treated_acc) << "," << format_double(t.ate_raw) << ","
          << format_double(t.ate) << "," << format_double(t.r_ate) << ","
          << (t.r_ate_degenerate ? "true" : "false") << "," << format_double(t.p_value) << ","
          << format_double(t.statistic) << "," << to_string(t.method) << ","
          << format_double(t.alpha) << "," << (t.significant ? "true" : "false") << ","
          << e.discarded_missing << "," << e.discarded_excluded << "\n";
    }
  }
  return csv.str();
}

std::vector<EdgeCsvRow> parse_edges_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("edges csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw std::runtime_error("edges csv: unexpected header: " + line);

  std::vector<EdgeCsvRow> rows;
  long long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (cells.size() != 21)
      throw std::runtime_error("edges csv line " + std::to_string(lineno) + ": expected 21 "
                               "cells, got " + std::to_string(cells.size()));
    EdgeCsvRow row;
    row.dataset = cells[0];
    row.condition_slug = cells[1];
    row.edge = edge_from_string(cells[2]);
    row.test.table.a = std::stoll(cells[4]);
    row.test.table.b = std::stoll(cells[5]);
    row.test.table.c = std::stoll(cells[6]);
    row.test.table.d = std::stoll(cells[7]);
    if (row.test.table.n() != std::stoll(cells[3]))
      throw std::runtime_error("edges csv line " + std::to_string(lineno) +
                               ": n does not equal a+b+c+d");
    row.test.baseline_acc = parse_double(cells[8]);
    row.test.treated_acc = parse_double(cells[9]);
    row.test.ate_raw = parse_double(cells[10]);
    row.test.ate = parse_double(cells[11]);
    row.test.r_ate = parse_double(cells[12]);
    row.test.r_ate_degenerate = cells[13] == "true";
    row.test.p_value = parse_double(cells[14]);
    row.test.statistic = parse_double(cells[15]);
    row.test.method = mcnemar_method_from_string(cells[16]);
    row.test.alpha = parse_double(cells[17]);
    row.test.significant = cells[18] == "true";
    row.discarded_missing = std::stoll(cells[19]);
    row.discarded_excluded = std::stoll(cells[20]);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string plot_accuracy_tsv(const ExperimentAnalysis& analysis) {
  std::ostringstream tsv;
  tsv << "# condition\taccuracy\n";
  for (const auto& ds : analysis.datasets) {
    tsv << ds.dataset << "/baseline\t" << format_double(ds.baseline_acc) << "\n";
    for (const auto& e : ds.edges)
      tsv << ds.dataset << "/" << e.condition.slug() << "\t"
          << format_double(e.test.treated_acc) << "\n";
  }
  return tsv.str();
}

std::string plot_delta_tsv(const std::vector<NoopEvalResult>& noop) {
  std::ostringstream tsv;
  tsv << "# dataset\tdelta_percent\n";
  for (const auto& r : noop)
    tsv << r.dataset << "\t" << format_double(r.delta * 100.0) << "\n";
  return tsv.str();
}

void write_config_snapshot(const std::filesystem::path& out_dir,
                           const ExperimentConfig& config) {
  json snapshot{{"tool_version", kToolVersion}, {"config", config}};
  write_text(out_dir / "config.json", snapshot.dump(2) + "\n");
}

void write_noop_trials(const std::filesystem::path& out_dir,
                       const std::vector<NoopEvalResult>& noop, bool include_clean) {
  for (const auto& r : noop) {
    if (include_clean && !r.clean_trials.empty())
      write_jsonl(out_dir / r.dataset / "trials-baseline.jsonl", r.clean_trials);
    if (!r.augmented.empty())
      write_jsonl(out_dir / (r.dataset + "-noop") / "instances.jsonl", r.augmented);
    if (!r.noop_trials.empty())
      write_jsonl(out_dir / (r.dataset + "-noop") / "trials-baseline.jsonl", r.noop_trials);
  }
}

}  // namespace

void write_run_artifacts(const std::filesystem::path& out_dir, const ExperimentRun& run,
                         const ExperimentAnalysis& analysis,
                         const std::vector<NoopEvalResult>& noop, bool force) {
  if (!force && std::filesystem::exists(out_dir / "results.json"))
    throw std::runtime_error("artifacts already present in " + out_dir.string() +
                             " (use --force to overwrite)");
  std::filesystem::create_directories(out_dir);
  write_config_snapshot(out_dir, run.config);
  for (const auto& ds : run.datasets) {
    write_jsonl(out_dir / ds.dataset / "instances.jsonl", ds.instances);
    for (const auto& cr : ds.conditions)
      write_jsonl(out_dir / ds.dataset / ("trials-" + cr.condition.slug() + ".jsonl"),
                  cr.trials);
  }
  json results{{"tool_version", kToolVersion}, {"analysis", analysis}};
  write_text(out_dir / "results.json", results.dump(2) + "\n");
  write_text(out_dir / "edges.csv", render_edges_csv(analysis));
  write_text(out_dir / "report.md", render_report_md(run.config, &run, &analysis, noop));
  write_text(out_dir / "plot" / "accuracy.tsv", plot_accuracy_tsv(analysis));
  if (!noop.empty()) {
    json nj{{"tool_version", kToolVersion}, {"results", noop}};
    write_text(out_dir / "noop.json", nj.dump(2) + "\n");
    write_text(out_dir / "plot" / "delta.tsv", plot_delta_tsv(noop));
    write_noop_trials(out_dir, noop, /*include_clean=*/false);
  }
}

void write_noop_artifacts(const std::filesystem::path& out_dir, const ExperimentConfig& config,
                          const std::vector<NoopEvalResult>& noop, bool force) {
  if (!force && std::filesystem::exists(out_dir / "noop.json"))
    throw std::runtime_error("artifacts already present in " + out_dir.string() +
                             " (use --force to overwrite)");
  std::filesystem::create_directories(out_dir);
  write_config_snapshot(out_dir, config);
  json nj{{"tool_version", kToolVersion}, {"results", noop}};
  write_text(out_dir / "noop.json", nj.dump(2) + "\n");
  // Named so it cannot clobber a run report when both share a directory.
  write_text(out_dir / "noop-report.md", render_report_md(config, nullptr, nullptr, noop));
  write_text(out_dir / "plot" / "delta.tsv", plot_delta_tsv(noop));
  write_noop_trials(out_dir, noop, /*include_clean=*/true);
}

ExperimentRun load_run_artifacts(const std::filesystem::path& out_dir) {
  std::vector<std::string> missing;
  auto must_exist = [&](const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) missing.push_back(p.string());
    return missing.empty();
  };

  ExperimentRun run;
  const auto config_path = out_dir / "config.json";
  if (!std::filesystem::exists(config_path))
    throw std::runtime_error("incomplete artifacts: missing " + config_path.string());
  run.config = read_json_file(config_path).at("config").get<ExperimentConfig>();

  for (const auto& spec : run.config.datasets) {
    must_exist(out_dir / spec.tag / "instances.jsonl");
    for (const auto& c : run.config.conditions)
      must_exist(out_dir / spec.tag / ("trials-" + c.slug() + ".jsonl"));
  }
  if (!missing.empty()) {
    std::string msg = "incomplete artifacts, missing:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw std::runtime_error(msg);
  }

  for (const auto& spec : run.config.datasets) {
    DatasetRun ds;
    ds.dataset = spec.tag;
    ds.instances = read_jsonl<ProblemInstance>(out_dir / spec.tag / "instances.jsonl");
    for (const auto& c : run.config.conditions) {
      ConditionRun cr;
      cr.condition = c;
      cr.dataset = spec.tag;
      cr.trials =
          read_jsonl<TrialResult>(out_dir / spec.tag / ("trials-" + c.slug() + ".jsonl"));
      ds.conditions.push_back(std::move(cr));
    }
    run.datasets.push_back(std::move(ds));
  }
  return run;
}

namespace {

bool is_hex64(const std::string& s) {
  if (s.size() != 64) return false;
  for (char c : s)
    if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

void audit_trials_file(const std::filesystem::path& file,
                       const std::vector<TrialResult>& trials,
                       const std::vector<ProblemInstance>* instances, AuditReport& report) {
  auto issue = [&](const std::string& what) {
    report.issues.push_back(file.string() + ": " + what);
  };
  std::map<std::string, const ProblemInstance*> by_id;
  if (instances)
    for (const auto& p : *instances) by_id[p.id] = &p;
  if (instances && trials.size() != instances->size())
    issue("trial count " + std::to_string(trials.size()) + " != instance count " +
          std::to_string(instances->size()));
  for (const auto& t : trials) {
    ++report.checked;
    if (t.excluded) {
      if (!t.request_fingerprint.empty())
        issue("excluded trial '" + t.instance_id + "' carries a request fingerprint");
      if (t.correct) issue("excluded trial '" + t.instance_id + "' marked correct");
      continue;
    }
    if (!is_hex64(t.request_fingerprint))
      issue("trial '" + t.instance_id + "' has no valid request fingerprint");
    if (t.truncated && t.correct)
      issue("truncated trial '" + t.instance_id + "' marked correct");
    if (t.extracted.confidence == ExtractConfidence::none && t.correct)
      issue("trial '" + t.instance_id + "' correct without an extracted answer");
    if (instances) {
      auto it = by_id.find(t.instance_id);
      if (it == by_id.end()) {
        issue("trial '" + t.instance_id + "' has no matching instance");
      } else if (t.extracted.confidence != ExtractConfidence::none &&
                 t.extracted.kind != it->second->kind) {
        issue("trial '" + t.instance_id + "' extraction kind mismatches its instance");
      }
    }
  }
}

}  // namespace

AuditReport audit_artifacts(const std::filesystem::path& out_dir) {
  AuditReport report;
  const bool has_results = std::filesystem::exists(out_dir / "results.json");
  const bool has_noop = std::filesystem::exists(out_dir / "noop.json");
  if (!has_results && !has_noop) {
    report.issues.push_back("no results.json or noop.json under " + out_dir.string());
    return report;
  }

  if (has_results) {
    ExperimentRun run;
    try {
      run = load_run_artifacts(out_dir);
    } catch (const std::exception& e) {
      report.issues.push_back(e.what());
      return report;
    }
    ExperimentAnalysis recomputed = analyze(run);
    json stored = read_json_file(out_dir / "results.json");
    if (!stored.contains("analysis") || json(recomputed) != stored.at("analysis"))
      report.issues.push_back("results.json does not match analysis recomputed from trials");

    for (const auto& ds : run.datasets)
      for (const auto& cr : ds.conditions)
        audit_trials_file(out_dir / ds.dataset / ("trials-" + cr.condition.slug() + ".jsonl"),
                          cr.trials, &ds.instances, report);

    // The CSV must re-ingest to the same numbers the analysis holds.
    std::ifstream csv_in(out_dir / "edges.csv");
    if (!csv_in) {
      report.issues.push_back("missing edges.csv");
    } else {
      std::stringstream buf;
      buf << csv_in.rdbuf();
      try {
        auto rows = parse_edges_csv(buf.str());
        std::size_t expected = 0;
        for (const auto& ds : recomputed.datasets) expected += ds.edges.size();
        if (rows.size() != expected)
          report.issues.push_back("edges.csv row count does not match analysis");
        std::size_t idx = 0;
        for (const auto& ds : recomputed.datasets)
          for (const auto& e : ds.edges) {
            if (idx >= rows.size()) break;
            if (json(rows[idx].test) != json(e.test))
              report.issues.push_back("edges.csv row " + std::to_string(idx + 1) +
                                      " does not round-trip the stored edge test");
            ++idx;
          }
      } catch (const std::exception& e) {
        report.issues.push_back(std::string("edges.csv: ") + e.what());
      }
    }
  }

  if (has_noop) {
    json stored = read_json_file(out_dir / "noop.json");
    for (const auto& rj : stored.at("results")) {
      NoopEvalResult r = rj.get<NoopEvalResult>();
      const auto clean_path = out_dir / r.dataset / "trials-baseline.jsonl";
      const auto noop_path = out_dir / (r.dataset + "-noop") / "trials-baseline.jsonl";
      if (!std::filesystem::exists(clean_path) || !std::filesystem::exists(noop_path)) {
        report.issues.push_back("noop.json entry '" + r.dataset +
                                "' lacks its trial files");
        continue;
      }
      auto clean = read_jsonl<TrialResult>(clean_path);
      auto noop_trials = read_jsonl<TrialResult>(noop_path);
      std::vector<ProblemInstance> augmented;
      const auto aug_path = out_dir / (r.dataset + "-noop") / "instances.jsonl";
      if (std::filesystem::exists(aug_path)) {
        augmented = read_jsonl<ProblemInstance>(aug_path);
        audit_trials_file(noop_path, noop_trials, &augmented, report);
      } else {
        audit_trials_file(noop_path, noop_trials, nullptr, report);
      }
      try {
        NoopEvalResult again = noop_delta(r.dataset, clean, noop_trials);
        if (format_double(again.clean_acc) != format_double(r.clean_acc) ||
            format_double(again.noop_acc) != format_double(r.noop_acc) ||
            format_double(again.delta) != format_double(r.delta))
          report.issues.push_back("noop.json entry '" + r.dataset +
                                  "' does not match recomputation from trials");
      } catch (const std::exception& e) {
        report.issues.push_back("noop.json entry '" + r.dataset + "': " + e.what());
      }
    }
  }

  return report;
}

}  // namespace scmprobe
