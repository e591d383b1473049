#pragma once

#include <vector>

#include "scmprobe/domain.hpp"

namespace scmprobe {

inline constexpr double kDefaultAlpha = 0.01;

enum class McNemarMethod { exact, chi2_cc };

const char* to_string(McNemarMethod m);
McNemarMethod mcnemar_method_from_string(const std::string& s);

// Average treatment effect of an intervention on answer correctness,
// estimated over a paired table. `raw` is baseline_acc - treated_acc and can
// be negative when the intervention helps; `clipped` zeroes that case, which
// is the quantity the relative effect and the significance gate use.
struct AteResult {
  double baseline_acc = 0.0;
  double treated_acc = 0.0;
  double raw = 0.0;
  double clipped = 0.0;
};

AteResult ate(const PairedOutcomeTable& t);

// Relative ATE: clipped ATE divided by its attainable maximum, which for a
// correctness outcome is the baseline accuracy itself (dropping every
// baseline-correct instance to wrong is the largest possible effect). A
// baseline accuracy of 0 makes the ratio undefined; that degenerate case is
// reported as 0 with the flag set.
struct RAteResult {
  double value = 0.0;
  bool degenerate = false;
};

RAteResult r_ate(const AteResult& a);

struct McNemarResult {
  double p_value = 1.0;
  double statistic = 0.0;  // chi2_cc only; 0 for the exact method
  McNemarMethod method = McNemarMethod::exact;
};

// Exact binomial McNemar test, two-sided: with n = b + c discordant pairs,
// p = min(1, 2 * sum_{k=0..min(b,c)} C(n,k) / 2^n), and p = 1 when n = 0.
double mcnemar_exact_p(long long b, long long c);

// Continuity-corrected chi-square variant: (|b-c|-1)^2 / (b+c) against a
// one-dof chi-square, p = erfc(sqrt(stat/2)). The corrected numerator is
// deliberately not clamped at zero, so b == c gives stat = 1/(b+c).
double mcnemar_chi2_cc_stat(long long b, long long c);

McNemarResult mcnemar(const PairedOutcomeTable& t, McNemarMethod method);

// Full decision for one causal edge: effect sizes plus the significance
// gate. An edge counts as significant only when the test rejects at alpha
// AND the clipped ATE is positive; a "significant" effect in the helpful
// direction is treated as no evidence of reliance.
struct EdgeTestResult {
  PairedOutcomeTable table;
  double baseline_acc = 0.0;
  double treated_acc = 0.0;
  double ate_raw = 0.0;
  double ate = 0.0;
  double r_ate = 0.0;
  bool r_ate_degenerate = false;
  double p_value = 1.0;
  double statistic = 0.0;
  McNemarMethod method = McNemarMethod::exact;
  double alpha = kDefaultAlpha;
  bool significant = false;
};

EdgeTestResult significance(const PairedOutcomeTable& t, double alpha = kDefaultAlpha,
                            McNemarMethod method = McNemarMethod::exact);

// Relative accuracy drop caused by noop augmentation:
// (acc_clean - acc_noop) / acc_clean. Negative values (noop helped) are
// reported as-is. acc_clean == 0 is an error, not a NaN.
double delta_pct(double acc_clean, double acc_noop);

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;  // two-sided, t distribution with n-2 dof
  long long n = 0;
};

// Requires at least 3 points and nonzero variance on both axes; throws
// std::runtime_error("degenerate series: ...") otherwise.
PearsonResult pearson(const std::vector<double>& xs, const std::vector<double>& ys);

// Regularized incomplete beta I_x(a, b), exposed for tests. Continued
// fraction evaluation (Lentz), accurate to ~1e-14 for the arguments the
// t-test produces.
double reg_incomplete_beta(double a, double b, double x);

void to_json(json& j, const EdgeTestResult& e);
void from_json(const json& j, EdgeTestResult& e);

}  // namespace scmprobe
