// Exit-gate checks. Each numbered criterion runs standalone, is timed
// against its stated budget, and reports exactly one [PASS]/[FAIL] line.
// The binary exits nonzero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scmprobe/client.hpp"
#include "scmprobe/config.hpp"
#include "scmprobe/datagen.hpp"
#include "scmprobe/oracle.hpp"
#include "scmprobe/orchestrator.hpp"
#include "scmprobe/rng.hpp"
#include "scmprobe/scm.hpp"
#include "scmprobe/stats.hpp"

using namespace scmprobe;
namespace fs = std::filesystem;

namespace {

using Problems = std::vector<std::string>;

void expect(Problems& problems, bool ok, const std::string& what) {
  if (!ok) problems.push_back(what);
}

fs::path work_dir() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "scmprobe-acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Runs a shell command with stdout+stderr captured; returns the exit code
// (or a negative value when the process did not exit normally).
int run_shell(const std::string& cmd, const fs::path& log) {
  std::string full = cmd + " > \"" + log.string() + "\" 2>&1";
  int status = std::system(full.c_str());
  if (status == -1) return -1;
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -2;
}

ExperimentConfig oracle_experiment(OracleScm scm, long long n, std::uint64_t seed) {
  ExperimentConfig c;
  c.name = "acceptance";
  c.seed = seed;
  c.alpha = 0.01;
  c.backend.kind = "oracle";
  c.backend.oracle.scm = scm;
  c.backend.oracle.seed = seed;
  DatasetSpec ds;
  ds.tag = "addition-3d";
  ds.arith = ArithSpec{ArithOp::addition, 3, n, seed};
  c.datasets = {ds};
  c.conditions = default_conditions(c.model, seed);
  return c;
}

// ---------------------------------------------------------------- C1

void c1_rate_reproduction(Problems& problems) {
  struct Case {
    double baseline, treated, expect_pct;
  };
  const Case cases[] = {{0.996, 0.278, 72.1},
                        {0.99, 0.652, 34.1},
                        {0.996, 0.978, 1.8},
                        {0.99, 0.982, 0.8},
                        {0.996, 0.994, 0.2}};
  for (const Case& k : cases) {
    const long long n = 500;
    long long base_correct = std::llround(k.baseline * n);
    long long treat_correct = std::llround(k.treated * n);
    // Every treated-correct instance is also baseline-correct, so the
    // marginals pin the whole table.
    PairedOutcomeTable t{treat_correct, base_correct - treat_correct, 0, n - base_correct};
    expect(problems, t.n() == n, "table does not sum to 500");
    expect(problems, t.baseline_acc() == k.baseline && t.treated_acc() == k.treated,
           "marginals not reproduced for baseline " + std::to_string(k.baseline));
    EdgeTestResult r = significance(t);
    double one_decimal = static_cast<double>(std::llround(r.r_ate * 1000.0)) / 10.0;
    if (one_decimal != k.expect_pct)
      problems.push_back("R-ATE " + std::to_string(one_decimal) + " != expected " +
                         std::to_string(k.expect_pct));
  }
}

// ---------------------------------------------------------------- C2

double brute_force_exact_p(long long b, long long c) {
  long long n = b + c;
  if (n == 0) return 1.0;
  long long m = std::min(b, c);
  double tail = 0.0;
  for (long long k = 0; k <= m; ++k) {
    double binom = 1.0;  // C(n, k), exact in double for n <= 20
    for (long long i = 1; i <= k; ++i) binom = binom * static_cast<double>(n - i + 1) / i;
    tail += binom;
  }
  return std::min(1.0, 2.0 * tail / std::pow(2.0, static_cast<double>(n)));
}

void c2_mcnemar_exactness(Problems& problems) {
  for (long long n = 0; n <= 20; ++n) {
    for (long long b = 0; b <= n; ++b) {
      long long c = n - b;
      double p = mcnemar_exact_p(b, c);
      double ref = brute_force_exact_p(b, c);
      if (std::abs(p - ref) > 1e-12)
        problems.push_back("exact p mismatch at b=" + std::to_string(b) +
                           " c=" + std::to_string(c));
      if (n > 0) {
        double hand = std::pow(std::abs(static_cast<double>(b - c)) - 1.0, 2.0) /
                      static_cast<double>(n);
        if (std::abs(mcnemar_chi2_cc_stat(b, c) - hand) > 1e-12)
          problems.push_back("chi2_cc statistic mismatch at b=" + std::to_string(b) +
                             " c=" + std::to_string(c));
      }
    }
  }
  McNemarResult degenerate = mcnemar(PairedOutcomeTable{5, 0, 0, 5}, McNemarMethod::chi2_cc);
  expect(problems, degenerate.p_value == 1.0 && degenerate.statistic == 0.0,
         "chi2_cc with no discordant pairs should give p=1, stat=0");
}

// ---------------------------------------------------------------- C3

void c3_oracle_recovery(Problems& problems) {
  struct Case {
    const char* label;
    OracleScm scm;
    double base_acc;
    double mix_p;
    bool t_effect;
    ScmMajor major;
    const char* minor;  // nullptr when only the major type is required
  };
  const Case cases[] = {
      {"chain", OracleScm::chain, 1.0, 0.5, false, ScmMajor::i, "a"},
      {"chain+t_effect", OracleScm::chain, 1.0, 0.5, true, ScmMajor::i, "b"},
      {"common_cause", OracleScm::common_cause, 0.9, 0.5, false, ScmMajor::ii, nullptr},
      {"full_connection", OracleScm::full_connection, 1.0, 0.5, false, ScmMajor::iii, nullptr},
      {"isolation", OracleScm::isolation, 0.9, 0.5, false, ScmMajor::iv, nullptr},
  };
  set_offline(true);
  for (const Case& k : cases) {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      ExperimentConfig c = oracle_experiment(k.scm, 500, seed);
      c.backend.oracle.base_acc = k.base_acc;
      c.backend.oracle.mix_p = k.mix_p;
      c.backend.oracle.t_effect = k.t_effect;
      Orchestrator orch(c);
      ExperimentRun run = orch.run();
      ExperimentAnalysis analysis = analyze(run);
      if (!analysis.datasets[0].scm) continue;
      const ScmResult& scm = *analysis.datasets[0].scm;
      bool ok = scm.major == k.major;
      if (ok && k.minor)
        ok = scm.has_minor && std::string(to_string(scm.minor)) == k.minor;
      if (ok) ++hits;
    }
    if (hits < 19)
      problems.push_back(std::string(k.label) + " recovered " + std::to_string(hits) +
                         "/20 runs (need >= 19)");
  }
  set_offline(false);
}

// ---------------------------------------------------------------- C4

void c4_clipping_gate(Problems& problems) {
  Rng rng(4242);
  long long premise_hits = 0;
  for (int i = 0; i < 10000 && problems.size() < 5; ++i) {
    long long a = static_cast<long long>(rng.uniform(61));
    long long b = static_cast<long long>(rng.uniform(61));
    long long c = static_cast<long long>(rng.uniform(61));
    long long d = static_cast<long long>(rng.uniform(61));
    if (a + b + c + d == 0) a = 1;
    PairedOutcomeTable t{a, b, c, d};
    McNemarMethod method = (i % 2 == 0) ? McNemarMethod::exact : McNemarMethod::chi2_cc;
    EdgeTestResult r = significance(t, 0.01, method);
    if (r.treated_acc >= r.baseline_acc) {
      ++premise_hits;
      if (r.r_ate != 0.0 || r.significant)
        problems.push_back("helpful intervention not gated at a=" + std::to_string(a) +
                           " b=" + std::to_string(b) + " c=" + std::to_string(c) +
                           " d=" + std::to_string(d));
    }
  }
  expect(problems, premise_hits > 1000, "premise rarely exercised; sampling is broken");
}

// ---------------------------------------------------------------- C5

void c5_classification_table(Problems& problems) {
  expect(problems, classify3(false, true) == ScmMajor::i, "(z F, x T) must be I");
  expect(problems, classify3(true, false) == ScmMajor::ii, "(z T, x F) must be II");
  expect(problems, classify3(true, true) == ScmMajor::iii, "(z T, x T) must be III");
  expect(problems, classify3(false, false) == ScmMajor::iv, "(z F, x F) must be IV");

  // Published three-variable column: significance flags per dataset for the
  // RLHF model (Add., Mult., GSM8K, ProofWriter, FOLIO, LogiQA).
  const bool llm_z[] = {true, false, false, false, false, false};
  const bool llm_x[] = {false, true, false, true, false, false};
  const ScmMajor llm_expect[] = {ScmMajor::ii, ScmMajor::i,  ScmMajor::iv,
                                 ScmMajor::i,  ScmMajor::iv, ScmMajor::iv};
  for (int i = 0; i < 6; ++i)
    if (classify3(llm_z[i], llm_x[i]) != llm_expect[i])
      problems.push_back("three-variable column mismatch at dataset " + std::to_string(i));

  // Published four-variable column (Add., Mult., MATH500, ProofWriter,
  // FOLIO, LogiQA): thinking never significant, chain always significant,
  // instruction significant only on the first dataset.
  const ScmMajor lrm_expect[] = {ScmMajor::iii, ScmMajor::i, ScmMajor::i,
                                 ScmMajor::i,   ScmMajor::i, ScmMajor::i};
  for (int i = 0; i < 6; ++i) {
    EdgeFlags f{i == 0, false, true};
    if (classify4(f).major != lrm_expect[i])
      problems.push_back("four-variable column mismatch at dataset " + std::to_string(i));
  }
}

// ---------------------------------------------------------------- C6

void c6_distribution_tallies(Problems& problems) {
  auto majors = [](std::initializer_list<std::pair<ScmMajor, int>> counts) {
    std::vector<ScmResult> out;
    for (auto [m, k] : counts)
      for (int i = 0; i < k; ++i) out.push_back(ScmResult{m});
    return out;
  };
  using M = ScmMajor;
  // Per-model dataset types as printed, six datasets per model.
  const std::vector<std::vector<ScmResult>> llm_rows = {
      majors({{M::i, 2}, {M::ii, 1}, {M::iii, 3}}),  // GSM8K/FOLIO ideal
      majors({{M::i, 2}, {M::ii, 1}, {M::iv, 3}}),   // Mult./ProofW. ideal
      majors({{M::i, 2}, {M::iv, 4}}),               // Add./ProofW. ideal
      majors({{M::ii, 4}, {M::iii, 1}, {M::iv, 1}}),
      majors({{M::i, 3}, {M::iii, 3}}),
  };
  const int llm_pct[] = {33, 33, 33, 0, 50};
  const std::vector<std::vector<ScmResult>> lrm_rows = {
      majors({{M::i, 3}, {M::iii, 3}}),
      majors({{M::i, 3}, {M::iii, 3}}),
      majors({{M::i, 3}, {M::ii, 1}, {M::iii, 2}}),
      majors({{M::i, 5}, {M::iii, 1}}),
      majors({{M::i, 5}, {M::iv, 1}}),
  };
  const int lrm_pct[] = {50, 50, 50, 83, 83};

  std::vector<ScmResult> llm_pool, lrm_pool;
  for (int i = 0; i < 5; ++i) {
    ScmDistribution d = scm_distribution(llm_rows[i]);
    if (d.percent(ScmMajor::i) != llm_pct[i])
      problems.push_back("first block row " + std::to_string(i) + " is " +
                         std::to_string(d.percent(ScmMajor::i)) + "%, expected " +
                         std::to_string(llm_pct[i]));
    llm_pool.insert(llm_pool.end(), llm_rows[i].begin(), llm_rows[i].end());
  }
  for (int i = 0; i < 5; ++i) {
    ScmDistribution d = scm_distribution(lrm_rows[i]);
    if (d.percent(ScmMajor::i) != lrm_pct[i])
      problems.push_back("second block row " + std::to_string(i) + " is " +
                         std::to_string(d.percent(ScmMajor::i)) + "%, expected " +
                         std::to_string(lrm_pct[i]));
    lrm_pool.insert(lrm_pool.end(), lrm_rows[i].begin(), lrm_rows[i].end());
  }
  ScmDistribution llm = scm_distribution(llm_pool);
  ScmDistribution lrm = scm_distribution(lrm_pool);
  expect(problems, llm.total == 30 && llm.count(ScmMajor::i) == 9, "first block tally wrong");
  expect(problems, llm.percent(ScmMajor::i) == 30, "first block average must be 30%");
  expect(problems, lrm.total == 30 && lrm.count(ScmMajor::i) == 19, "second block tally wrong");
  expect(problems, lrm.percent(ScmMajor::i) == 63, "second block average must be 63%");
}

// ---------------------------------------------------------------- C7

void c7_noop_invariants(Problems& problems) {
  auto adds = gen_arith(ArithSpec{ArithOp::addition, 3, 500, 7});
  auto mults = gen_arith(ArithSpec{ArithOp::multiplication, 2, 500, 9});
  std::vector<ProblemInstance> pool = adds;
  pool.insert(pool.end(), mults.begin(), mults.end());
  long long verified = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    NoopAugmentation aug =
        augment_noop(pool[i], NoopMode::template_mode, 5000 + static_cast<std::uint64_t>(i));
    if (aug.used_fallback) {
      problems.push_back("template augmentation fell back at " + pool[i].id);
      break;
    }
    if (!verify_noop(pool[i], aug.augmented)) {
      problems.push_back("verify_noop rejected augmentation of " + pool[i].id);
      break;
    }
    ++verified;
  }
  expect(problems, verified == 1000, "expected 1000 verified augmentations");

  double d = delta_pct(0.8, 0.6);
  expect(problems, std::abs(d - 0.25) <= 1e-15 && std::llround(d * 100.0) == 25,
         "delta on (0.8, 0.6) must be 25%");

  ExperimentConfig clean = oracle_experiment(OracleScm::chain, 500, 31);
  auto honest = Orchestrator(clean).noop_eval(NoopMode::template_mode, 31);
  expect(problems, honest.size() == 1 && std::abs(honest[0].delta * 100.0) <= 2.0,
         "derivation-driven oracle must hold |delta| <= 2pp");

  ExperimentConfig spurious = oracle_experiment(OracleScm::chain, 500, 33);
  spurious.backend.oracle.noop_sensitive = true;
  auto tricked = Orchestrator(spurious).noop_eval(NoopMode::template_mode, 33);
  expect(problems, tricked.size() == 1 && tricked[0].delta * 100.0 >= 30.0,
         "surface-feature oracle must drop >= 30pp");
}

// ---------------------------------------------------------------- C8

void c8_pearson(Problems& problems) {
  Rng rng(99);
  for (int i = 0; i < 1000 && problems.size() < 5; ++i) {
    std::size_t n = 3 + rng.uniform(38);
    std::vector<double> xs(n), ys(n);
    for (std::size_t k = 0; k < n; ++k) {
      xs[k] = rng.uniform_real() * 20.0 - 10.0;
      ys[k] = rng.uniform_real() * 20.0 - 10.0;
    }
    PearsonResult pr = pearson(xs, ys);
    long double mx = 0.0L, my = 0.0L;
    for (std::size_t k = 0; k < n; ++k) {
      mx += xs[k];
      my += ys[k];
    }
    mx /= static_cast<long double>(n);
    my /= static_cast<long double>(n);
    long double sxy = 0.0L, sxx = 0.0L, syy = 0.0L;
    for (std::size_t k = 0; k < n; ++k) {
      sxy += (xs[k] - mx) * (ys[k] - my);
      sxx += (xs[k] - mx) * (xs[k] - mx);
      syy += (ys[k] - my) * (ys[k] - my);
    }
    double ref = static_cast<double>(sxy / std::sqrt(sxx * syy));
    if (std::abs(pr.r - ref) > 1e-12)
      problems.push_back("definitional disagreement " + std::to_string(std::abs(pr.r - ref)) +
                         " at series " + std::to_string(i));
  }

  CheckpointSeries anti;
  anti.name = "anti";
  anti.entries = {{"0", 0.0, 0.0}, {"500", 10.0, -5.0}, {"1000", 20.0, -10.0},
                  {"1500", 30.0, -15.0}};
  CorrelateResult cr = correlate_series({anti});
  expect(problems, std::abs(cr.stats.r + 1.0) <= 1e-12,
         "anticorrelated checkpoint series must give r = -1");

  // The CLI end of the same computation on an 8-point fixture.
  fs::path dir = work_dir() / "correlate";
  fs::create_directories(dir);
  json fixture = json::array();
  fixture.push_back(
      json{{"name", "base-rl"},
           {"entries",
            json::array({json{{"label", "0"}, {"scm_i_pct", 0}, {"delta_pct", 40}},
                         json{{"label", "600"}, {"scm_i_pct", 10}, {"delta_pct", 35}},
                         json{{"label", "1000"}, {"scm_i_pct", 0}, {"delta_pct", 42}},
                         json{{"label", "1500"}, {"scm_i_pct", 20}, {"delta_pct", 30}},
                         json{{"label", "2000"}, {"scm_i_pct", 20}, {"delta_pct", 28}}})}});
  fixture.push_back(
      json{{"name", "sft-rl"},
           {"entries",
            json::array({json{{"label", "0"}, {"scm_i_pct", 17}, {"delta_pct", 39}},
                         json{{"label", "500"}, {"scm_i_pct", 33}, {"delta_pct", 30}},
                         json{{"label", "1000"}, {"scm_i_pct", 50}, {"delta_pct", 25}},
                         json{{"label", "1500"}, {"scm_i_pct", 50}, {"delta_pct", 20}},
                         json{{"label", "2000"}, {"scm_i_pct", 67}, {"delta_pct", 17}}})}});
  std::ofstream(dir / "series.json") << fixture.dump(2) << "\n";

  fs::path log = dir / "correlate.log";
  int rc = run_shell(std::string("\"") + SCMPROBE_CLI_PATH + "\" correlate --series \"" +
                         (dir / "series.json").string() + "\" --output \"" +
                         (dir / "correlation.json").string() + "\"",
                     log);
  std::string out = slurp(log);
  expect(problems, rc == 0, "correlate command exited with " + std::to_string(rc));
  expect(problems, out.find("pooled 8 deltas from 2 series") != std::string::npos,
         "correlate did not pool 8 deltas");
  expect(problems,
         out.find("d_scm_i_pct") != std::string::npos &&
             out.find("pearson r = ") != std::string::npos,
         "correlate did not emit the delta table");
  expect(problems, fs::exists(dir / "correlation.json"), "correlation.json not written");
}

// ---------------------------------------------------------------- C9

void collect_files(const fs::path& root, std::map<std::string, fs::path>& out) {
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      out[fs::relative(entry.path(), root).string()] = entry.path();
}

bool trees_identical(const fs::path& a, const fs::path& b, std::string& why) {
  std::map<std::string, fs::path> fa, fb;
  collect_files(a, fa);
  collect_files(b, fb);
  if (fa.size() != fb.size()) {
    why = "file counts differ (" + std::to_string(fa.size()) + " vs " +
          std::to_string(fb.size()) + ")";
    return false;
  }
  for (const auto& [rel, pa] : fa) {
    auto it = fb.find(rel);
    if (it == fb.end()) {
      why = rel + " missing from second tree";
      return false;
    }
    if (slurp(pa) != slurp(it->second)) {
      why = rel + " differs";
      return false;
    }
  }
  return true;
}

void c9_determinism(Problems& problems) {
  fs::path root = work_dir() / "determinism";
  fs::create_directories(root);

  ExperimentConfig c = oracle_experiment(OracleScm::chain, 24, 11);
  json cfg = json(c);
  cfg["cache_dir"] = (root / "cache-ab").string();
  std::ofstream(root / "config-ab.json") << cfg.dump(2) << "\n";
  cfg["cache_dir"] = (root / "cache-c").string();
  std::ofstream(root / "config-c.json") << cfg.dump(2) << "\n";

  const std::string cli = std::string("\"") + SCMPROBE_CLI_PATH + "\"";
  auto run_once = [&](const std::string& config, const std::string& out,
                      const std::string& env) {
    std::string cmd = env.empty() ? "" : env + " ";
    cmd += cli + " run --config \"" + (root / config).string() + "\" --out \"" +
           (root / out).string() + "\"";
    return run_shell(cmd, root / (out + ".log"));
  };

  int rc_a = run_once("config-ab.json", "out-a", "");
  expect(problems, rc_a == 0, "cold run exited with " + std::to_string(rc_a));
  int rc_b = run_once("config-ab.json", "out-b", "");
  expect(problems, rc_b == 0, "warm run exited with " + std::to_string(rc_b));
  std::string warm_log = slurp(root / "out-b.log");
  expect(problems,
         warm_log.find("cache: 0 hits") == std::string::npos &&
             warm_log.find("cache: ") != std::string::npos,
         "warm run reported no cache hits");

  int rc_killed = run_once("config-c.json", "out-dead", "SCMPROBE_CRASH_AFTER_COMPLETIONS=40");
  expect(problems, rc_killed == 9, "injected kill exited with " + std::to_string(rc_killed) +
                                       ", expected 9");
  expect(problems, !fs::exists(root / "out-dead" / "results.json"),
         "killed run should not have written results");
  int rc_resumed = run_once("config-c.json", "out-c", "");
  expect(problems, rc_resumed == 0, "resumed run exited with " + std::to_string(rc_resumed));

  std::string why;
  if (!trees_identical(root / "out-a", root / "out-b", why))
    problems.push_back("warm-cache artifacts diverge: " + why);
  if (!trees_identical(root / "out-a", root / "out-c", why))
    problems.push_back("kill+resume artifacts diverge: " + why);
}

// ---------------------------------------------------------------- driver

int run_criterion(int number, const char* name, double budget_s,
                  const std::function<void(Problems&)>& body) {
  Problems problems;
  auto t0 = std::chrono::steady_clock::now();
  try {
    body(problems);
  } catch (const std::exception& e) {
    problems.push_back(std::string("exception: ") + e.what());
  }
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (elapsed >= budget_s)
    problems.push_back("runtime " + std::to_string(elapsed) + "s exceeds " +
                       std::to_string(budget_s) + "s budget");
  if (problems.empty()) {
    std::printf("[PASS] C%d %s (%.2fs)\n", number, name, elapsed);
    return 0;
  }
  std::printf("[FAIL] C%d %s (%.2fs): %s", number, name, elapsed, problems[0].c_str());
  if (problems.size() > 1) std::printf(" (+%zu more)", problems.size() - 1);
  std::printf("\n");
  return 1;
}

}  // namespace

int main() {
  int failures = 0;
  failures += run_criterion(1, "synthetic R-ATE reproduction", 1.0, c1_rate_reproduction);
  failures += run_criterion(2, "McNemar exactness", 5.0, c2_mcnemar_exactness);
  failures += run_criterion(3, "structure recovery on simulators", 60.0, c3_oracle_recovery);
  failures += run_criterion(4, "clipping gate property", 5.0, c4_clipping_gate);
  failures += run_criterion(5, "classification truth table", 1.0, c5_classification_table);
  failures += run_criterion(6, "distribution tallies", 1.0, c6_distribution_tallies);
  failures += run_criterion(7, "noop invariants", 30.0, c7_noop_invariants);
  failures += run_criterion(8, "Pearson correctness", 5.0, c8_pearson);
  failures += run_criterion(9, "determinism and resumability", 120.0, c9_determinism);
  if (failures == 0)
    std::printf("acceptance: all 9 criteria passed\n");
  else
    std::printf("acceptance: %d criteria FAILED\n", failures);
  return failures == 0 ? 0 : 1;
}
