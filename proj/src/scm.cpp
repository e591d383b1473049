#include "scmprobe/scm.hpp"

#include <cmath>
#include <stdexcept>

namespace scmprobe {

const char* to_string(ScmMajor m) {
  switch (m) {
    case ScmMajor::i: return "I";
    case ScmMajor::ii: return "II";
    case ScmMajor::iii: return "III";
    case ScmMajor::iv: return "IV";
  }
  throw std::logic_error("unreachable ScmMajor");
}

const char* to_string(ScmMinor m) {
  switch (m) {
    case ScmMinor::a: return "a";
    case ScmMinor::b: return "b";
    case ScmMinor::c: return "c";
  }
  throw std::logic_error("unreachable ScmMinor");
}

ScmMajor scm_major_from_string(const std::string& s) {
  if (s == "I") return ScmMajor::i;
  if (s == "II") return ScmMajor::ii;
  if (s == "III") return ScmMajor::iii;
  if (s == "IV") return ScmMajor::iv;
  throw std::runtime_error("unknown SCM type: " + s);
}

ScmMinor scm_minor_from_string(const std::string& s) {
  if (s == "a") return ScmMinor::a;
  if (s == "b") return ScmMinor::b;
  if (s == "c") return ScmMinor::c;
  throw std::runtime_error("unknown SCM minor: " + s);
}

ScmMajor classify3(bool z_to_y, bool x_to_y) {
  if (!z_to_y && x_to_y) return ScmMajor::i;
  if (z_to_y && !x_to_y) return ScmMajor::ii;
  if (z_to_y && x_to_y) return ScmMajor::iii;
  return ScmMajor::iv;
}

AlignedFlags align4to3(const EdgeFlags& f) {
  return {f.z_to_y, f.t_to_y || f.x_to_y};
}

ScmResult classify4(const EdgeFlags& f) {
  AlignedFlags aligned = align4to3(f);
  ScmResult r;
  r.major = classify3(aligned.z_to_y, aligned.x_effective);
  r.has_minor = true;
  if (!aligned.x_effective) {
    // Majors II and IV: neither reasoning edge fired, the a/b/c split does
    // not apply.
    r.minor = ScmMinor::a;
    r.minor_degenerate = true;
    return r;
  }
  if (f.t_to_y && f.x_to_y) r.minor = ScmMinor::b;
  else if (f.t_to_y) r.minor = ScmMinor::c;
  else r.minor = ScmMinor::a;
  return r;
}

std::string ScmResult::label() const {
  std::string s = to_string(major);
  if (has_minor && !minor_degenerate) {
    s += "(";
    s += to_string(minor);
    s += ")";
  }
  return s;
}

int ScmDistribution::percent(ScmMajor m) const {
  if (total == 0) throw std::runtime_error("scm distribution over empty input");
  return static_cast<int>(
      std::lround(100.0 * static_cast<double>(count(m)) / static_cast<double>(total)));
}

ScmDistribution scm_distribution(const std::vector<ScmResult>& results) {
  ScmDistribution d;
  for (const auto& r : results) {
    ++d.counts[static_cast<int>(r.major)];
    ++d.total;
  }
  return d;
}

void to_json(json& j, const ScmResult& r) {
  j = json{{"major", to_string(r.major)},
           {"has_minor", r.has_minor},
           {"minor", to_string(r.minor)},
           {"minor_degenerate", r.minor_degenerate},
           {"label", r.label()}};
}

void from_json(const json& j, ScmResult& r) {
  r.major = scm_major_from_string(j.at("major").get<std::string>());
  j.at("has_minor").get_to(r.has_minor);
  r.minor = scm_minor_from_string(j.at("minor").get<std::string>());
  j.at("minor_degenerate").get_to(r.minor_degenerate);
}

}  // namespace scmprobe
