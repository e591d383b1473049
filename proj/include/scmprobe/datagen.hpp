#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "scmprobe/domain.hpp"

namespace scmprobe {

enum class ArithOp { addition, multiplication };

const char* to_string(ArithOp op);
ArithOp arith_op_from_string(const std::string& s);

struct ArithSpec {
  ArithOp op = ArithOp::addition;
  int digits = 9;
  long long count = 500;
  std::uint64_t seed = 0;

  void validate() const;  // digits in [1, 18], count >= 1
};

// Synthesizes arithmetic instances with operands drawn uniformly from
// [10^(digits-1), 10^digits - 1]. Deterministic: the same spec always yields
// the same instances, and ids encode the seed and index.
std::vector<ProblemInstance> gen_arith(const ArithSpec& spec);

// Input schema of an external JSONL file.
enum class DatasetSchema { canonical, numeric_qa, multiple_choice };

const char* to_string(DatasetSchema s);
DatasetSchema dataset_schema_from_string(const std::string& s);

// Loads one instance per line. Schema violations throw with the 1-based line
// number in the message. Instances without an explicit id get a stable
// derived one (dataset tag + line number), and every instance records its
// source line under meta["line"].
std::vector<ProblemInstance> load_jsonl(const std::filesystem::path& path,
                                        DatasetSchema schema,
                                        const std::string& dataset_tag);

void save_jsonl(const std::filesystem::path& path,
                const std::vector<ProblemInstance>& instances);

// Seeded draw of k instances without replacement, preserving input order.
std::vector<ProblemInstance> subsample(const std::vector<ProblemInstance>& instances,
                                       std::size_t k, std::uint64_t seed);

enum class NoopMode { template_mode, llm_assisted };

const char* to_string(NoopMode m);
NoopMode noop_mode_from_string(const std::string& s);

// One injected irrelevant condition, e.g. var "a", value 7 renders "a = 7".
struct NoopClause {
  std::string var;
  long long value = 0;
};

struct NoopAugmentation {
  ProblemInstance augmented;
  std::vector<NoopClause> clauses;  // 1 or 2
  bool used_fallback = false;       // llm_assisted proposal rejected, template used
};

// Produces the proposal text for llm_assisted mode (normally backed by a
// model call; tests can script it).
using NoopProposer = std::function<std::string(const ProblemInstance&)>;

// Inserts the given clauses without drawing anything: the deterministic core
// of augment_noop, usable directly when the clause values are prescribed.
ProblemInstance insert_noop_clauses(const ProblemInstance& instance,
                                    const std::vector<NoopClause>& clauses);

// Inserts irrelevant numeric side conditions into the question without
// touching its answer. The clause group lands at the first top-level ", "
// of the question (reading "..., and given that a = 7 and b = -5, ..."); a
// question with no such comma gets the clause group prepended as
// "Given that ..., ". Variable names are single letters not occurring in the
// question; values are nonzero integers in [-99, 99] that do not occur in
// the question. The augmented instance keeps the gold answer, appends
// "-noop" to id and dataset, and records the clauses under meta.
//
// llm_assisted mode asks `proposer` for clause text; proposals that violate
// the constraints above fall back to template generation (flagged in meta
// and in the returned record).
NoopAugmentation augment_noop(const ProblemInstance& instance, NoopMode mode,
                              std::uint64_t seed, const NoopProposer& proposer = nullptr);

// Checks an (original, augmented) pair: gold answers equal, the original
// question text is recoverable from the augmented one by deleting exactly
// one inserted span, that span consists of "<letter> = <nonzero integer>"
// conditions, and none of the injected variable names occur standalone in
// the original question.
bool verify_noop(const ProblemInstance& original, const ProblemInstance& augmented);

}  // namespace scmprobe
