#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scmprobe/client.hpp"
#include "scmprobe/config.hpp"
#include "scmprobe/scm.hpp"
#include "scmprobe/stats.hpp"

namespace scmprobe {

// Causal edge a non-baseline condition probes.
enum class Edge { z_to_y, t_to_y, x_to_y };

const char* to_string(Edge e);  // "Z->Y", "T->Y", "X->Y"
Edge edge_from_string(const std::string& s);
Edge edge_for(const Condition& condition);  // throws for baseline

struct LoadedDataset {
  std::string tag;
  std::vector<ProblemInstance> instances;
};

LoadedDataset load_dataset(const DatasetSpec& spec);

// All trials of one condition over one dataset, in instance order.
struct ConditionRun {
  Condition condition;
  std::string dataset;
  std::vector<TrialResult> trials;
};

struct DatasetRun {
  std::string dataset;
  std::vector<ProblemInstance> instances;
  std::vector<ConditionRun> conditions;  // config order; exactly one baseline

  const ConditionRun& baseline() const;
};

struct ExperimentRun {
  ExperimentConfig config;
  std::vector<DatasetRun> datasets;
};

// Decision for one probed edge on one dataset.
struct EdgeAnalysis {
  Condition condition;
  Edge edge = Edge::x_to_y;
  EdgeTestResult test;
  long long discarded_missing = 0;
  long long discarded_excluded = 0;
};

struct DatasetAnalysis {
  std::string dataset;
  long long instances = 0;
  double baseline_acc = 0.0;       // over non-excluded baseline trials
  long long baseline_trials = 0;   // non-excluded count
  std::vector<EdgeAnalysis> edges;
  // Absent when no edge condition ran. Uses the first condition per edge;
  // three-edge (thinking-channel) input yields a minor type.
  std::optional<ScmResult> scm;
};

struct ExperimentAnalysis {
  std::string name;
  double alpha = kDefaultAlpha;
  McNemarMethod method = McNemarMethod::exact;
  std::vector<DatasetAnalysis> datasets;
  // Over datasets that produced a classification; absent when none did.
  std::optional<ScmDistribution> distribution;
};

ExperimentAnalysis analyze(const ExperimentRun& run);

// Noop sensitivity read-out for one dataset: accuracy on the clean set vs
// its noop-augmented twin.
struct NoopEvalResult {
  std::string dataset;
  long long n = 0;  // paired instances evaluated
  double clean_acc = 0.0;
  double noop_acc = 0.0;
  double delta = 0.0;  // (clean - noop) / clean
  std::string quadrant;
  long long fallback_count = 0;       // llm-assisted proposals that fell back
  std::vector<TrialResult> clean_trials;
  std::vector<TrialResult> noop_trials;
  std::vector<ProblemInstance> augmented;
};

// Quadrant call on the two accuracies against one threshold:
//   both high        -> strong_causality (competent and robust)
//   clean high, noop low -> weak_causality_spurious (score leans on surface
//                           features the irrelevant conditions disturb)
//   both low         -> low_competence
//   clean low, noop high -> anomalous_gain
std::string noop_quadrant(double clean_acc, double noop_acc, double threshold);

inline constexpr double kDefaultQuadrantThreshold = 0.5;

// Pairs a clean baseline run with the run over its augmented twin (ids
// related by the "-noop" suffix) and computes the accuracy drop. Throws with
// a list of orphan ids when the two sets do not pair up exactly.
NoopEvalResult noop_delta(const std::string& dataset_tag,
                          const std::vector<TrialResult>& clean_trials,
                          const std::vector<TrialResult>& noop_trials,
                          double threshold = kDefaultQuadrantThreshold);

// One training-trajectory point for the structure/spuriousness correlation:
// the share of runs classified as the chain structure and the noop accuracy
// drop, both in percent.
struct CheckpointEntry {
  std::string label;
  double scm_i_pct = 0.0;
  double delta_pct = 0.0;
};

struct CheckpointSeries {
  std::string name;
  std::vector<CheckpointEntry> entries;  // first entry is the reference point
};

struct CorrelateResult {
  PearsonResult stats;
  long long series = 0;
  // Pooled (scm_i_pct change, delta_pct change) pairs, one per non-reference
  // entry, relative to each series' first entry. Needs at least 3.
  std::vector<std::pair<double, double>> points;
};

// Pools per-series changes from the first checkpoint and correlates them.
CorrelateResult correlate_series(const std::vector<CheckpointSeries>& series);

void to_json(json& j, const CheckpointEntry& e);
void from_json(const json& j, CheckpointEntry& e);
void to_json(json& j, const CheckpointSeries& s);
void from_json(const json& j, CheckpointSeries& s);

std::vector<CheckpointSeries> load_checkpoint_series(const std::filesystem::path& path);

// Post-hoc integrity checks.
struct AuditReport {
  long long checked = 0;
  std::vector<std::string> issues;

  bool ok() const { return issues.empty(); }
};

// Walks every cache entry under root and re-verifies: the stored key matches
// the request hash, and every fixed segment is embedded verbatim in the
// rendered prompt (and in the chat messages when present).
AuditReport audit_cache_dir(const std::filesystem::path& root);

// The artifact-level audit (recompute from trials, diff against stored
// results) lives in report.hpp next to the artifact layout it checks.

class Orchestrator {
 public:
  explicit Orchestrator(ExperimentConfig config);
  // Test seam: supply the backend (and optionally the cache) directly.
  Orchestrator(ExperimentConfig config, std::shared_ptr<ModelBackend> backend,
               std::shared_ptr<ResponseCache> cache = nullptr);

  const ExperimentConfig& config() const { return config_; }
  ResponseCache& cache() { return *cache_; }

  std::vector<LoadedDataset> load_datasets() const;

  // Executes every condition over every dataset. Deterministic: reruns with
  // the same config (and a warm cache) produce identical results.
  ExperimentRun run();

  // Clean-vs-augmented evaluation per dataset: augments every instance,
  // verifies each augmentation, then runs the baseline condition on both the
  // clean set and its "-noop" twin.
  std::vector<NoopEvalResult> noop_eval(NoopMode mode, std::uint64_t seed,
                                        double threshold = kDefaultQuadrantThreshold);

 private:
  std::shared_ptr<ModelBackend> backend_for(const std::vector<ProblemInstance>& instances);
  ConditionRun run_condition(const Condition& condition, const std::string& dataset_tag,
                             const std::vector<ProblemInstance>& instances,
                             const ConditionRun* baseline_run);
  TrialResult run_fresh_trial(const ProblemInstance& instance, const Condition& condition,
                              const std::string& dataset_tag, ModelBackend& backend,
                              const std::optional<std::string>& z_override);

  ExperimentConfig config_;
  std::shared_ptr<ResponseCache> cache_;
  std::shared_ptr<ModelBackend> injected_;
};

void to_json(json& j, const EdgeAnalysis& e);
void from_json(const json& j, EdgeAnalysis& e);
void to_json(json& j, const DatasetAnalysis& d);
void from_json(const json& j, DatasetAnalysis& d);
void to_json(json& j, const ExperimentAnalysis& a);
void from_json(const json& j, ExperimentAnalysis& a);
void to_json(json& j, const NoopEvalResult& r);
void from_json(const json& j, NoopEvalResult& r);

}  // namespace scmprobe
