#include "scmprobe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scmprobe {

const char* to_string(McNemarMethod m) {
  switch (m) {
    case McNemarMethod::exact: return "exact";
    case McNemarMethod::chi2_cc: return "chi2_cc";
  }
  throw std::logic_error("unreachable McNemarMethod");
}

McNemarMethod mcnemar_method_from_string(const std::string& s) {
  if (s == "exact") return McNemarMethod::exact;
  if (s == "chi2_cc") return McNemarMethod::chi2_cc;
  throw std::runtime_error("unknown mcnemar method: " + s);
}

AteResult ate(const PairedOutcomeTable& t) {
  AteResult r;
  r.baseline_acc = t.baseline_acc();
  r.treated_acc = t.treated_acc();
  r.raw = r.baseline_acc - r.treated_acc;
  r.clipped = std::max(0.0, r.raw);
  return r;
}

RAteResult r_ate(const AteResult& a) {
  if (a.baseline_acc == 0.0) return {0.0, true};
  return {a.clipped / a.baseline_acc, false};
}

namespace {

// Binomial(n, 1/2) lower tail up to m, summed in log space. Only needed for
// very large discordant counts where the direct recurrence would underflow.
double binom_half_lower_tail_log(long long n, long long m) {
  double lterm = -static_cast<double>(n) * std::log(2.0);  // log pmf(0)
  double lsum = lterm;
  for (long long k = 0; k < m; ++k) {
    lterm += std::log(static_cast<double>(n - k)) - std::log(static_cast<double>(k + 1));
    double hi = std::max(lsum, lterm);
    double lo = std::min(lsum, lterm);
    lsum = hi + std::log1p(std::exp(lo - hi));
  }
  return lsum;
}

}  // namespace

double mcnemar_exact_p(long long b, long long c) {
  if (b < 0 || c < 0) throw std::invalid_argument("mcnemar: negative discordant count");
  long long n = b + c;
  if (n == 0) return 1.0;
  long long m = std::min(b, c);

  double tail;
  if (n <= 500) {
    // pmf(k) = C(n,k)/2^n via the multiplicative recurrence. For n <= 500
    // the first term (2^-n ~ 3e-151) is comfortably inside double range and
    // the terms grow monotonically up to k = m <= n/2, so the forward sum
    // is well conditioned.
    double term = std::ldexp(1.0, -static_cast<int>(n));
    double sum = term;
    for (long long k = 0; k < m; ++k) {
      term *= static_cast<double>(n - k) / static_cast<double>(k + 1);
      sum += term;
    }
    tail = sum;
  } else {
    tail = std::exp(binom_half_lower_tail_log(n, m));
  }
  return std::min(1.0, 2.0 * tail);
}

double mcnemar_chi2_cc_stat(long long b, long long c) {
  if (b < 0 || c < 0) throw std::invalid_argument("mcnemar: negative discordant count");
  long long n = b + c;
  if (n == 0) throw std::runtime_error("mcnemar chi2_cc: no discordant pairs");
  double diff = std::abs(static_cast<double>(b - c)) - 1.0;
  return diff * diff / static_cast<double>(n);
}

McNemarResult mcnemar(const PairedOutcomeTable& t, McNemarMethod method) {
  McNemarResult r;
  r.method = method;
  if (method == McNemarMethod::exact) {
    r.p_value = mcnemar_exact_p(t.b, t.c);
    return r;
  }
  if (t.b + t.c == 0) {
    // No discordant pairs carries no evidence either way; mirror the exact
    // method's convention instead of dividing by zero.
    r.p_value = 1.0;
    r.statistic = 0.0;
    return r;
  }
  r.statistic = mcnemar_chi2_cc_stat(t.b, t.c);
  // Upper tail of chi-square with 1 dof: P(X > s) = erfc(sqrt(s/2)).
  r.p_value = std::erfc(std::sqrt(r.statistic / 2.0));
  return r;
}

EdgeTestResult significance(const PairedOutcomeTable& t, double alpha, McNemarMethod method) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
  EdgeTestResult e;
  e.table = t;
  AteResult a = ate(t);
  e.baseline_acc = a.baseline_acc;
  e.treated_acc = a.treated_acc;
  e.ate_raw = a.raw;
  e.ate = a.clipped;
  RAteResult rr = r_ate(a);
  e.r_ate = rr.value;
  e.r_ate_degenerate = rr.degenerate;
  McNemarResult m = mcnemar(t, method);
  e.p_value = m.p_value;
  e.statistic = m.statistic;
  e.method = method;
  e.alpha = alpha;
  e.significant = (m.p_value < alpha) && (e.ate > 0.0);
  return e;
}

double delta_pct(double acc_clean, double acc_noop) {
  if (acc_clean == 0.0)
    throw std::runtime_error("delta_pct: clean accuracy is 0, relative drop undefined");
  return (acc_clean - acc_noop) / acc_clean;
}

namespace {

// Continued fraction for the regularized incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;

  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double reg_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

PearsonResult pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
  long long n = static_cast<long long>(xs.size());
  if (n < 3) throw std::runtime_error("degenerate series: need at least 3 points");

  double mx = 0.0, my = 0.0;
  for (long long i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (long long i = 0; i < n; ++i) {
    double dx = xs[i] - mx;
    double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::runtime_error("degenerate series: zero variance");

  PearsonResult out;
  out.n = n;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  double dof = static_cast<double>(n - 2);
  if (std::abs(out.r) >= 1.0) {
    out.p = 0.0;
    return out;
  }
  double t2 = out.r * out.r * dof / (1.0 - out.r * out.r);
  // Two-sided t-test p-value via the incomplete beta identity
  // P(|T| > t) = I_{dof/(dof+t^2)}(dof/2, 1/2).
  out.p = reg_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t2));
  return out;
}

void to_json(json& j, const EdgeTestResult& e) {
  j = json{{"table", e.table},
           {"baseline_acc", e.baseline_acc},
           {"treated_acc", e.treated_acc},
           {"ate_raw", e.ate_raw},
           {"ate", e.ate},
           {"r_ate", e.r_ate},
           {"r_ate_degenerate", e.r_ate_degenerate},
           {"p_value", e.p_value},
           {"statistic", e.statistic},
           {"method", to_string(e.method)},
           {"alpha", e.alpha},
           {"significant", e.significant}};
}

void from_json(const json& j, EdgeTestResult& e) {
  j.at("table").get_to(e.table);
  j.at("baseline_acc").get_to(e.baseline_acc);
  j.at("treated_acc").get_to(e.treated_acc);
  j.at("ate_raw").get_to(e.ate_raw);
  j.at("ate").get_to(e.ate);
  j.at("r_ate").get_to(e.r_ate);
  j.at("r_ate_degenerate").get_to(e.r_ate_degenerate);
  j.at("p_value").get_to(e.p_value);
  j.at("statistic").get_to(e.statistic);
  e.method = mcnemar_method_from_string(j.at("method").get<std::string>());
  j.at("alpha").get_to(e.alpha);
  j.at("significant").get_to(e.significant);
}

}  // namespace scmprobe
