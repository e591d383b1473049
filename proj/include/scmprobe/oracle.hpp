#pragma once

#include <cstdint>
#include <unordered_map>

#include "scmprobe/client.hpp"
#include "scmprobe/domain.hpp"
#include "scmprobe/transcript.hpp"

namespace scmprobe {

// Which causal structure the simulated model implements.
enum class OracleScm { chain, common_cause, full_connection, isolation };

const char* to_string(OracleScm s);
OracleScm oracle_scm_from_string(const std::string& s);

// A simulated model with a KNOWN structural model, used to validate the
// whole identification pipeline end to end. Behavior per structure:
//
//   chain:           the emitted chain concludes a value and the answer
//                    restates the chain's conclusion, so replacing the chain
//                    drags the answer along; injected instruction bias is
//                    ignored.
//   common_cause:    the answer comes from a per-instance latent belief (or
//                    from an instruction-bias suggestion when one is
//                    present); the emitted reasoning is post-hoc decoration
//                    and pinning or replacing it changes nothing.
//   full_connection: each instance behaves as chain or as common_cause,
//                    chosen by a per-instance latent coin with P(chain) =
//                    mix_p.
//   isolation:       the answer depends only on the latent belief; both the
//                    reasoning text and the instruction are ignored.
//
// All randomness is derived from (seed, instance id), never from call
// order: repeated or reordered requests for the same instance are
// bit-identical, and an intervention on one variable cannot perturb the
// latent draws behind another.
struct OracleConfig {
  OracleScm scm = OracleScm::chain;
  double mix_p = 0.5;          // full_connection: P(instance acts as chain)
  double base_acc = 1.0;       // P(latent belief / derivation is correct)
  bool emits_thinking = true;  // wrap a thinking block when the profile has one
  // Chain-family only: the thinking segment genuinely feeds the answer. When
  // set, a thinking conclusion that disagrees with the chain's conclusion
  // corrupts the final answer (the T -> Y edge becomes real).
  bool t_effect = false;
  // Shortcut variant: injected noop side conditions (extra numerals in the
  // question) corrupt the oracle's own derivation, modeling reliance on
  // spurious surface features. Only affects chain-family derivations.
  bool noop_sensitive = false;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(json& j, const OracleConfig& c);
void from_json(const json& j, OracleConfig& c);

// Pure function from plan + config + instance to the raw response text the
// simulated model would produce for that request.
CompletionResult simulate(const RequestPlan& plan, const OracleConfig& config,
                          const ModelKind& kind, const ProblemInstance& instance);

class OracleBackend : public ModelBackend {
 public:
  OracleBackend(OracleConfig config, ModelKind kind,
                const std::vector<ProblemInstance>& instances);
  CompletionResult complete(const RequestPlan& plan) override;
  std::string identity() const override;

 private:
  OracleConfig config_;
  ModelKind kind_;
  std::unordered_map<std::string, ProblemInstance> by_id_;
};

}  // namespace scmprobe
