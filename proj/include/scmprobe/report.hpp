#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scmprobe/orchestrator.hpp"

namespace scmprobe {

// Shortest decimal form that parses back to the identical double, for the
// machine-readable outputs.
std::string format_double(double v);
double parse_double(const std::string& s);

// One report cell: R-ATE as a percentage at one decimal with the
// significance verdict as suffix, e.g. "34.1%_T".
std::string r_ate_cell(double r_ate, bool significant);

// Human-readable summary. `run` (template provenance) and `analysis` may be
// null when only noop results exist.
std::string render_report_md(const ExperimentConfig& config, const ExperimentRun* run,
                             const ExperimentAnalysis* analysis,
                             const std::vector<NoopEvalResult>& noop);

struct EdgeCsvRow {
  std::string dataset;
  std::string condition_slug;
  Edge edge = Edge::x_to_y;
  EdgeTestResult test;
  long long discarded_missing = 0;
  long long discarded_excluded = 0;
};

// Machine-readable flat form of every edge decision, full precision.
std::string render_edges_csv(const ExperimentAnalysis& analysis);
std::vector<EdgeCsvRow> parse_edges_csv(const std::string& csv);

// Writes the full artifact tree:
//   config.json                      experiment snapshot
//   results.json                     analysis (when present)
//   noop.json                        noop evaluation (when present)
//   report.md, edges.csv
//   plot/accuracy.tsv                label <TAB> accuracy per condition
//   plot/delta.tsv                   label <TAB> delta percent (noop only)
//   <dataset>/instances.jsonl
//   <dataset>/trials-<condition>.jsonl
//   <dataset>-noop/... for augmented twins
// Completed artifacts are immutable: refuses to overwrite an out_dir that
// already holds results unless force is set.
void write_run_artifacts(const std::filesystem::path& out_dir, const ExperimentRun& run,
                         const ExperimentAnalysis& analysis,
                         const std::vector<NoopEvalResult>& noop = {}, bool force = false);

void write_noop_artifacts(const std::filesystem::path& out_dir, const ExperimentConfig& config,
                          const std::vector<NoopEvalResult>& noop, bool force = false);

// Reloads config snapshot, instances and trials; throws listing every
// missing piece when the artifact tree is incomplete.
ExperimentRun load_run_artifacts(const std::filesystem::path& out_dir);

// Recomputes the analysis from trial JSONL alone and diffs it against the
// stored results.json, then re-checks trial-level invariants (fingerprints,
// extraction kinds, truncation/confidence vs correctness).
AuditReport audit_artifacts(const std::filesystem::path& out_dir);

}  // namespace scmprobe
