#pragma once

#include <array>
#include <string>
#include <vector>

#include "scmprobe/domain.hpp"

namespace scmprobe {

// Structural model families over instruction Z, thinking T, reasoning chain
// X and answer Y, identified from which intervention effects are
// significant:
//   I   chain:           X drives Y, Z does not act on Y directly
//   II  common cause:    Z drives Y directly, the emitted chain is post-hoc
//   III full connection: both paths active
//   IV  isolation:       neither; the answer ignores both
enum class ScmMajor { i, ii, iii, iv };

// Minor variant for models with a separate thinking channel, from which of
// T / X act on Y:
//   a: X only   b: both T and X   c: T only
enum class ScmMinor { a, b, c };

const char* to_string(ScmMajor m);
const char* to_string(ScmMinor m);
ScmMajor scm_major_from_string(const std::string& s);
ScmMinor scm_minor_from_string(const std::string& s);

// Effect flags for the three testable edges (true = significant reliance).
struct EdgeFlags {
  bool z_to_y = false;
  bool t_to_y = false;  // meaningless for models without a thinking channel
  bool x_to_y = false;
};

// Two-variable classification for models that expose no thinking channel.
ScmMajor classify3(bool z_to_y, bool x_to_y);

// Folds the thinking edge into the chain edge so three-edge results land in
// the same four-type scheme: the reasoning path counts as active when either
// T or X acts on Y.
struct AlignedFlags {
  bool z_to_y = false;
  bool x_effective = false;
};

AlignedFlags align4to3(const EdgeFlags& f);

struct ScmResult {
  ScmMajor major = ScmMajor::iv;
  bool has_minor = false;  // set for three-edge (thinking-channel) input
  ScmMinor minor = ScmMinor::a;
  // Majors II and IV have no active reasoning edge, so no minor is really
  // defined; they are reported as (a) with this flag set.
  bool minor_degenerate = false;

  // "I(a)", "II", ... as printed in reports.
  std::string label() const;
};

ScmResult classify4(const EdgeFlags& f);

// Tally of major types over a collection of per-(model, dataset) results,
// with percentages rounded to the nearest whole percent.
struct ScmDistribution {
  std::array<long long, 4> counts{0, 0, 0, 0};
  long long total = 0;

  long long count(ScmMajor m) const { return counts[static_cast<int>(m)]; }
  int percent(ScmMajor m) const;
};

ScmDistribution scm_distribution(const std::vector<ScmResult>& results);

void to_json(json& j, const ScmResult& r);
void from_json(const json& j, ScmResult& r);

}  // namespace scmprobe
