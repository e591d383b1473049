#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scmprobe/client.hpp"
#include "scmprobe/datagen.hpp"
#include "scmprobe/oracle.hpp"
#include "scmprobe/stats.hpp"
#include "scmprobe/transcript.hpp"

namespace scmprobe {

// One problem source: either an external JSONL file or a generated
// arithmetic set. `tag` names the dataset in artifacts and cache paths.
struct DatasetSpec {
  std::string tag;
  std::string path;
  DatasetSchema schema = DatasetSchema::canonical;
  std::optional<ArithSpec> arith;
  // Seeded cut-down applied after loading; 0 means use everything.
  std::size_t subsample = 0;

  void validate() const;
};

// Which completion source serves requests.
struct BackendConfig {
  std::string kind = "oracle";  // "oracle" | "http"
  OracleConfig oracle;
  EndpointProfile endpoint;

  void validate() const;
};

// Full description of one experiment: problem sources, model shape,
// generation settings, and the condition grid to run.
struct ExperimentConfig {
  std::string name = "experiment";
  std::string out_dir = "out";
  // Response cache root; empty keeps the cache in memory only (no reuse
  // across runs).
  std::string cache_dir;
  std::uint64_t seed = 0;
  double alpha = kDefaultAlpha;
  McNemarMethod method = McNemarMethod::exact;
  ContinuationStrategy continuation = ContinuationStrategy::graft;
  int concurrency = 1;

  ModelKind model;
  std::vector<Demonstration> demonstrations;
  BackendConfig backend;
  GenParams gen;
  // Token budget for the short answer-only regeneration requests.
  int answer_max_tokens = 64;

  std::vector<DatasetSpec> datasets;
  std::vector<Condition> conditions;

  void validate() const;
};

// Conditions an experiment runs when the config lists none: baseline plus
// every intervention the model shape supports.
std::vector<Condition> default_conditions(const ModelKind& model, std::uint64_t seed);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

void to_json(json& j, const ModelKind& m);
void from_json(const json& j, ModelKind& m);
void to_json(json& j, const GenParams& g);
void from_json(const json& j, GenParams& g);
void to_json(json& j, const Demonstration& d);
void from_json(const json& j, Demonstration& d);
void to_json(json& j, const ArithSpec& a);
void from_json(const json& j, ArithSpec& a);
void to_json(json& j, const RetryPolicy& r);
void from_json(const json& j, RetryPolicy& r);
void to_json(json& j, const EndpointProfile& e);
void from_json(const json& j, EndpointProfile& e);
void to_json(json& j, const DatasetSpec& d);
void from_json(const json& j, DatasetSpec& d);
void to_json(json& j, const BackendConfig& b);
void from_json(const json& j, BackendConfig& b);
void to_json(json& j, const ExperimentConfig& c);
void from_json(const json& j, ExperimentConfig& c);

}  // namespace scmprobe
