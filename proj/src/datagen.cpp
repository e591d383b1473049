#include "scmprobe/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "scmprobe/rational.hpp"
#include "scmprobe/rng.hpp"

namespace scmprobe {

const char* to_string(ArithOp op) {
  switch (op) {
    case ArithOp::addition: return "addition";
    case ArithOp::multiplication: return "multiplication";
  }
  throw std::logic_error("unreachable ArithOp");
}

ArithOp arith_op_from_string(const std::string& s) {
  if (s == "addition") return ArithOp::addition;
  if (s == "multiplication") return ArithOp::multiplication;
  throw std::runtime_error("unknown arithmetic op: " + s);
}

const char* to_string(DatasetSchema s) {
  switch (s) {
    case DatasetSchema::canonical: return "canonical";
    case DatasetSchema::numeric_qa: return "numeric_qa";
    case DatasetSchema::multiple_choice: return "multiple_choice";
  }
  throw std::logic_error("unreachable DatasetSchema");
}

DatasetSchema dataset_schema_from_string(const std::string& s) {
  if (s == "canonical") return DatasetSchema::canonical;
  if (s == "numeric_qa") return DatasetSchema::numeric_qa;
  if (s == "multiple_choice") return DatasetSchema::multiple_choice;
  throw std::runtime_error("unknown dataset schema: " + s);
}

const char* to_string(NoopMode m) {
  switch (m) {
    case NoopMode::template_mode: return "template";
    case NoopMode::llm_assisted: return "llm_assisted";
  }
  throw std::logic_error("unreachable NoopMode");
}

NoopMode noop_mode_from_string(const std::string& s) {
  if (s == "template") return NoopMode::template_mode;
  if (s == "llm_assisted") return NoopMode::llm_assisted;
  throw std::runtime_error("unknown noop mode: " + s);
}

void ArithSpec::validate() const {
  if (digits < 1 || digits > 18)
    throw std::runtime_error("arith spec: digits must be in [1, 18], got " +
                             std::to_string(digits));
  if (count < 1) throw std::runtime_error("arith spec: count must be >= 1");
}

std::vector<ProblemInstance> gen_arith(const ArithSpec& spec) {
  spec.validate();
  long long lo = 1;
  for (int i = 1; i < spec.digits; ++i) lo *= 10;
  long long hi = lo * 10 - 1;

  const char* op_short = spec.op == ArithOp::addition ? "add" : "mult";
  const char* noun = spec.op == ArithOp::addition ? "sum" : "product";
  std::string dataset = std::string(to_string(spec.op)) + "-" + std::to_string(spec.digits) + "d";

  Rng rng(spec.seed);
  std::vector<ProblemInstance> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (long long i = 0; i < spec.count; ++i) {
    long long a = rng.uniform_range(lo, hi);
    long long b = rng.uniform_range(lo, hi);
    unsigned __int128 gold =
        spec.op == ArithOp::addition
            ? static_cast<unsigned __int128>(a) + static_cast<unsigned __int128>(b)
            : static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);

    char idx[24];
    std::snprintf(idx, sizeof(idx), "%05lld", i);
    ProblemInstance p;
    p.id = std::string(op_short) + std::to_string(spec.digits) + "d-s" +
           std::to_string(spec.seed) + "-" + idx;
    p.question = "Given the two numbers " + std::to_string(a) + " and " + std::to_string(b) +
                 ", what is their " + noun + "?";
    p.kind = AnswerKind::numeric;
    p.gold.value = int128_to_string(static_cast<__int128>(gold));
    p.dataset = dataset;
    p.meta = json{{"a", a}, {"b", b}};
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

[[noreturn]] void line_error(const std::filesystem::path& path, std::size_t line,
                             const std::string& why) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + why);
}

std::string mc_gold_label(const json& j, std::size_t option_count,
                          const std::filesystem::path& path, std::size_t line) {
  const json& a = j.at("answer");
  if (a.is_number_integer()) {
    long long idx = a.get<long long>();
    if (idx < 0 || static_cast<std::size_t>(idx) >= option_count)
      line_error(path, line, "answer index " + std::to_string(idx) + " out of range");
    return ProblemInstance::option_label(static_cast<std::size_t>(idx));
  }
  if (a.is_string()) {
    std::string s = a.get<std::string>();
    if (s.size() == 1 && std::isalpha(static_cast<unsigned char>(s[0])))
      return std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(s[0]))));
    line_error(path, line, "answer '" + s + "' is neither an option label nor an index");
  }
  line_error(path, line, "answer must be a label string or option index");
}

}  // namespace

std::vector<ProblemInstance> load_jsonl(const std::filesystem::path& path,
                                        DatasetSchema schema, const std::string& dataset_tag) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());

  std::vector<ProblemInstance> out;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      line_error(path, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) line_error(path, lineno, "line is not a JSON object");

    ProblemInstance p;
    try {
      switch (schema) {
        case DatasetSchema::canonical:
          p = j.get<ProblemInstance>();
          if (!dataset_tag.empty()) p.dataset = dataset_tag;
          break;
        case DatasetSchema::numeric_qa:
          p.question = j.at("question").get<std::string>();
          p.gold.value = j.at("answer").is_string()
                             ? j.at("answer").get<std::string>()
                             : j.at("answer").dump();
          p.kind = AnswerKind::numeric;
          break;
        case DatasetSchema::multiple_choice: {
          p.question = j.at("question").get<std::string>();
          p.options = j.at("options").get<std::vector<std::string>>();
          p.kind = AnswerKind::multiple_choice;
          p.gold.value = mc_gold_label(j, p.options.size(), path, lineno);
          break;
        }
      }
    } catch (const json::exception& e) {
      line_error(path, lineno, std::string("schema violation: ") + e.what());
    }
    if (schema != DatasetSchema::canonical) {
      p.dataset = dataset_tag.empty() ? path.stem().string() : dataset_tag;
      if (j.contains("id") && j.at("id").is_string()) p.id = j.at("id").get<std::string>();
      if (j.contains("meta") && j.at("meta").is_object()) p.meta = j.at("meta");
    }
    if (p.id.empty()) {
      char idx[16];
      std::snprintf(idx, sizeof(idx), "%05zu", lineno);
      p.id = p.dataset + "-" + idx;
    }
    p.meta["line"] = lineno;
    if (!seen_ids.insert(p.id).second)
      line_error(path, lineno, "duplicate instance id '" + p.id + "'");
    try {
      p.validate();
    } catch (const std::exception& e) {
      line_error(path, lineno, e.what());
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) throw std::runtime_error("dataset file is empty: " + path.string());
  return out;
}

void save_jsonl(const std::filesystem::path& path,
                const std::vector<ProblemInstance>& instances) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path.string());
  for (const auto& p : instances) out << json(p).dump() << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<ProblemInstance> subsample(const std::vector<ProblemInstance>& instances,
                                       std::size_t k, std::uint64_t seed) {
  if (k > instances.size())
    throw std::runtime_error("subsample: asked for " + std::to_string(k) + " of " +
                             std::to_string(instances.size()));
  std::vector<std::size_t> idx(instances.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<ProblemInstance> out;
  out.reserve(k);
  for (std::size_t i : idx) out.push_back(instances[i]);
  return out;
}

namespace {

bool letter_in_text(const std::string& text, char letter) {
  char lo = static_cast<char>(std::tolower(static_cast<unsigned char>(letter)));
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
    if (c != lo) continue;
    bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
    bool right_ok =
        i + 1 == text.size() || !std::isalnum(static_cast<unsigned char>(text[i + 1]));
    if (left_ok && right_ok) return true;
  }
  return false;
}

std::set<long long> integers_in_text(const std::string& text) {
  std::set<long long> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    bool neg = start > 0 && text[start - 1] == '-';
    std::string digits = text.substr(start, i - start);
    if (digits.size() <= 18) {
      long long v = std::stoll(digits);
      out.insert(v);
      if (neg) out.insert(-v);
    }
  }
  return out;
}

std::string render_clause_group(const std::vector<NoopClause>& clauses) {
  std::string out = "given that ";
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (i) out += " and ";
    out += clauses[i].var + " = " + std::to_string(clauses[i].value);
  }
  return out;
}

// First ", " of the question that is not inside any bracket pair and not a
// thousands separator; npos when there is none.
std::size_t insertion_comma(const std::string& q) {
  int depth = 0;
  for (std::size_t i = 0; i + 1 < q.size(); ++i) {
    char c = q[i];
    if (c == '(' || c == '{' || c == '[') ++depth;
    else if (c == ')' || c == '}' || c == ']') --depth;
    else if (c == ',' && q[i + 1] == ' ' && depth == 0) return i;
  }
  return std::string::npos;
}

}  // namespace

ProblemInstance insert_noop_clauses(const ProblemInstance& instance,
                                    const std::vector<NoopClause>& clauses) {
  if (clauses.empty() || clauses.size() > 2)
    throw std::runtime_error("noop insertion takes 1 or 2 clauses");
  std::string group = render_clause_group(clauses);
  ProblemInstance aug = instance;
  std::size_t pos = insertion_comma(instance.question);
  if (pos != std::string::npos) {
    aug.question = instance.question.substr(0, pos) + ", and " + group +
                   instance.question.substr(pos);
  } else {
    std::string prefix = group + ", ";
    prefix[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(prefix[0])));
    aug.question = prefix + instance.question;
  }
  aug.id = instance.id + "-noop";
  aug.dataset = instance.dataset + "-noop";
  json clause_list = json::array();
  for (const auto& c : clauses) clause_list.push_back({{"var", c.var}, {"value", c.value}});
  aug.meta["noop_clauses"] = clause_list;
  aug.meta["noop_source_id"] = instance.id;
  return aug;
}

namespace {

bool clause_ok(const NoopClause& c, const ProblemInstance& instance,
               const std::set<long long>& taken_values,
               const std::vector<NoopClause>& already) {
  if (c.var.size() != 1 || !std::isalpha(static_cast<unsigned char>(c.var[0]))) return false;
  if (letter_in_text(instance.question, c.var[0])) return false;
  if (c.value == 0 || c.value < -99 || c.value > 99) return false;
  if (taken_values.count(c.value)) return false;
  for (const auto& prev : already)
    if (prev.var == c.var || prev.value == c.value) return false;
  return true;
}

std::vector<NoopClause> parse_clause_text(const std::string& text) {
  std::vector<NoopClause> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isalpha(static_cast<unsigned char>(text[i]))) {
      bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
      std::size_t j = i + 1;
      while (j < text.size() && text[j] == ' ') ++j;
      if (left_ok && j < text.size() && text[j] == '=') {
        ++j;
        while (j < text.size() && text[j] == ' ') ++j;
        std::size_t num_start = j;
        if (j < text.size() && text[j] == '-') ++j;
        std::size_t digit_start = j;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        if (j > digit_start && j - digit_start <= 18) {
          out.push_back({std::string(1, text[i]),
                         std::stoll(text.substr(num_start, j - num_start))});
          i = j;
          continue;
        }
      }
    }
    ++i;
  }
  return out;
}

}  // namespace

NoopAugmentation augment_noop(const ProblemInstance& instance, NoopMode mode,
                              std::uint64_t seed, const NoopProposer& proposer) {
  instance.validate();
  Rng rng(stable_hash64(seed, instance.id, 7001));
  std::set<long long> question_values = integers_in_text(instance.question);

  NoopAugmentation result;
  if (mode == NoopMode::llm_assisted) {
    if (!proposer) throw std::runtime_error("llm_assisted noop mode needs a proposer");
    auto proposed = parse_clause_text(proposer(instance));
    std::vector<NoopClause> accepted;
    for (const auto& c : proposed) {
      if (accepted.size() == 2) break;
      if (clause_ok(c, instance, question_values, accepted)) accepted.push_back(c);
    }
    if (!accepted.empty() && accepted.size() == proposed.size()) {
      result.clauses = accepted;
      result.augmented = insert_noop_clauses(instance, accepted);
      return result;
    }
    result.used_fallback = true;
  }

  std::size_t want = 1 + rng.uniform(2);
  std::vector<char> letters;
  for (char c = 'a'; c <= 'z'; ++c)
    if (!letter_in_text(instance.question, c)) letters.push_back(c);
  if (letters.size() < want)
    throw std::runtime_error("instance '" + instance.id +
                             "': not enough free variable letters for noop clauses");

  std::vector<NoopClause> clauses;
  for (std::size_t i = 0; i < want; ++i) {
    std::size_t li = rng.uniform(letters.size());
    NoopClause c;
    c.var = std::string(1, letters[li]);
    letters.erase(letters.begin() + static_cast<std::ptrdiff_t>(li));
    for (int attempt = 0;; ++attempt) {
      if (attempt > 500)
        throw std::runtime_error("instance '" + instance.id +
                                 "': no usable noop value in [-99, 99]");
      long long v = rng.uniform_range(-99, 99);
      if (clause_ok({c.var, v}, instance, question_values, clauses)) {
        c.value = v;
        break;
      }
    }
    clauses.push_back(c);
  }
  result.clauses = clauses;
  result.augmented = insert_noop_clauses(instance, clauses);
  if (result.used_fallback) result.augmented.meta["noop_fallback"] = true;
  return result;
}

bool verify_noop(const ProblemInstance& original, const ProblemInstance& augmented) {
  if (original.kind != augmented.kind) return false;
  if (original.kind == AnswerKind::numeric) {
    auto g0 = parse_rational(original.gold.value);
    auto g1 = parse_rational(augmented.gold.value);
    if (!g0 || !g1 || !(*g0 == *g1)) return false;
  } else {
    if (original.gold.value != augmented.gold.value) return false;
    if (original.options != augmented.options) return false;
  }

  const std::string& orig = original.question;
  const std::string& aug = augmented.question;
  if (aug.size() <= orig.size()) return false;
  std::size_t ins = aug.size() - orig.size();

  std::size_t lcp = 0;
  while (lcp < orig.size() && orig[lcp] == aug[lcp]) ++lcp;
  std::size_t lcs = 0;
  while (lcs < orig.size() && orig[orig.size() - 1 - lcs] == aug[aug.size() - 1 - lcs]) ++lcs;
  // The original must be recoverable by deleting ONE contiguous span. When
  // the span's edge repeats the surrounding characters (a clause value
  // ending in the digits the question resumes with), several deletion
  // positions are equally valid; the insertion is good if any of them reads
  // as a clause group.
  if (lcp + lcs < orig.size()) return false;
  for (std::size_t split = orig.size() - lcs; split <= lcp; ++split) {
    auto clauses = parse_clause_text(aug.substr(split, ins));
    if (clauses.empty()) continue;
    bool ok = true;
    for (const auto& c : clauses) {
      if (c.value == 0 || letter_in_text(orig, c.var[0])) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace scmprobe
