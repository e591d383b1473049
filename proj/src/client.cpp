#include "scmprobe/client.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <httplib.h>

namespace scmprobe {

namespace {

std::atomic<bool> g_offline{false};

std::string sanitize_component(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
              c == '.' || c == '_' || c == '-';
    out.push_back(ok ? c : '-');
  }
  if (out.empty()) out = "x";
  return out;
}

// Caps concurrent requests per endpoint identity across the whole process,
// no matter how many backend objects point at the same endpoint.
class InflightLimiter {
 public:
  explicit InflightLimiter(int limit) : limit_(limit) {}

  void acquire() {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [this] { return active_ < limit_; });
    ++active_;
  }

  void release() {
    {
      std::lock_guard lk(mu_);
      --active_;
    }
    cv_.notify_one();
  }

  static std::shared_ptr<InflightLimiter> for_identity(const std::string& id, int limit) {
    static std::mutex mu;
    static std::unordered_map<std::string, std::shared_ptr<InflightLimiter>> registry;
    std::lock_guard lk(mu);
    auto& slot = registry[id];
    if (!slot) slot = std::make_shared<InflightLimiter>(limit);
    return slot;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int limit_;
  int active_ = 0;
};

struct LimiterGuard {
  explicit LimiterGuard(InflightLimiter& l) : limiter(l) { limiter.acquire(); }
  ~LimiterGuard() { limiter.release(); }
  InflightLimiter& limiter;
};

// Crash injection for resumability tests: after N real (non-cached)
// completions the process exits without unwinding, simulating a kill.
std::atomic<long long> g_crash_after{-1};
std::once_flag g_crash_once;

void maybe_crash_after_completion() {
  std::call_once(g_crash_once, [] {
    if (const char* env = std::getenv("SCMPROBE_CRASH_AFTER_COMPLETIONS"))
      g_crash_after.store(std::atoll(env));
  });
  if (g_crash_after.load() < 0) return;
  if (g_crash_after.fetch_sub(1) - 1 <= 0) std::_Exit(9);
}

}  // namespace

void set_offline(bool offline) { g_offline.store(offline); }
bool is_offline() { return g_offline.load(); }

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

json canonical_request(const RequestPlan& plan, const std::string& backend_identity) {
  // nlohmann objects keep keys sorted, so dumping this compact yields a
  // canonical byte string independent of field assignment order.
  json j;
  j["backend"] = backend_identity;
  j["condition"] = plan.condition;
  json msgs = json::array();
  for (const auto& m : plan.messages) msgs.push_back({{"content", m.content}, {"role", m.role}});
  j["messages"] = msgs;
  j["prompt"] = plan.prompt;
  j["response_prefix"] = plan.response_prefix;
  json fixed = json::object();
  if (plan.fixed.z) fixed["z"] = *plan.fixed.z;
  if (plan.fixed.t) fixed["t"] = *plan.fixed.t;
  if (plan.fixed.x) fixed["x"] = *plan.fixed.x;
  j["fixed"] = fixed;
  j["gen"] = {{"max_tokens", plan.gen.max_tokens},
              {"stop", plan.gen.stop},
              {"temperature", plan.gen.temperature}};
  j["continuation"] = plan.continuation;
  return j;
}

std::string request_fingerprint(const RequestPlan& plan, const std::string& backend_identity) {
  return sha256_hex(canonical_request(plan, backend_identity).dump());
}

void EndpointProfile::validate() const {
  if (base_url.empty()) throw std::runtime_error("endpoint: base_url is required");
  if (model.empty()) throw std::runtime_error("endpoint: model is required");
  if (timeout_s < 1) throw std::runtime_error("endpoint: timeout_s must be >= 1");
  if (max_inflight < 1) throw std::runtime_error("endpoint: max_inflight must be >= 1");
  if (retry.max_attempts < 1) throw std::runtime_error("endpoint: max_attempts must be >= 1");
}

std::string EndpointProfile::slug() const {
  std::string host = base_url;
  if (auto p = host.find("://"); p != std::string::npos) host = host.substr(p + 3);
  return sanitize_component(host) + "_" + sanitize_component(model);
}

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root)) {
  if (root_.empty()) throw std::runtime_error("cache root path is empty");
}

std::string ResponseCache::scope_dir_key(const Scope& s) const {
  return sanitize_component(s.endpoint) + "/" + sanitize_component(s.dataset) + "/" +
         sanitize_component(s.condition);
}

std::filesystem::path ResponseCache::scope_file(const Scope& s) const {
  return root_ / sanitize_component(s.endpoint) / sanitize_component(s.dataset) /
         (sanitize_component(s.condition) + ".jsonl");
}

std::filesystem::path ResponseCache::pending_dir(const Scope& s) const {
  return root_ / sanitize_component(s.endpoint) / sanitize_component(s.dataset) /
         (sanitize_component(s.condition) + ".pending");
}

ResponseCache::ScopeState& ResponseCache::state_for(const Scope& s) {
  std::string key = scope_dir_key(s);
  ScopeState& st = scopes_[key];
  scope_names_.emplace(key, s);
  if (st.loaded || !persistent()) {
    st.loaded = true;
    return st;
  }
  st.loaded = true;

  auto ingest = [&st](const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return;  // torn write, ignore
    CacheEntry e;
    e.key = j.value("key", "");
    if (e.key.empty()) return;
    e.request = j.value("request", json::object());
    e.response = j.value("response", json::object());
    e.meta = j.value("meta", json::object());
    st.entries[e.key] = std::move(e);
  };

  std::ifstream in(scope_file(s));
  if (in) {
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) ingest(line);
  }
  std::error_code ec;
  for (const auto& de : std::filesystem::directory_iterator(pending_dir(s), ec)) {
    if (de.path().extension() != ".json") continue;
    std::ifstream pf(de.path());
    std::string text((std::istreambuf_iterator<char>(pf)), std::istreambuf_iterator<char>());
    ingest(text);
    st.dirty = true;  // pending entries want compaction
  }
  return st;
}

std::optional<CacheEntry> ResponseCache::lookup(const Scope& scope, const std::string& key) {
  std::lock_guard lk(mu_);
  ScopeState& st = state_for(scope);
  auto it = st.entries.find(key);
  if (it == st.entries.end()) return std::nullopt;
  ++hits_;
  return it->second;
}

void ResponseCache::put(const Scope& scope, const CacheEntry& entry) {
  std::lock_guard lk(mu_);
  ScopeState& st = state_for(scope);
  st.entries[entry.key] = entry;
  st.dirty = true;
  ++stores_;
  if (!persistent()) return;

  std::filesystem::path dir = pending_dir(scope);
  std::filesystem::create_directories(dir);
  json j{{"key", entry.key},
         {"request", entry.request},
         {"response", entry.response},
         {"meta", entry.meta}};
  std::filesystem::path final_path = dir / (entry.key + ".json");
  std::filesystem::path tmp_path = dir / (entry.key + ".json.tmp");
  {
    std::ofstream out(tmp_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cache: cannot write " + tmp_path.string());
    out << j.dump() << "\n";
    if (!out.flush()) throw std::runtime_error("cache: write failed " + tmp_path.string());
  }
  std::filesystem::rename(tmp_path, final_path);
}

void ResponseCache::compact() {
  std::lock_guard lk(mu_);
  if (!persistent()) return;
  for (auto& [key, st] : scopes_) {
    if (!st.dirty) continue;
    const Scope& scope = scope_names_.at(key);
    std::filesystem::path file = scope_file(scope);
    std::filesystem::create_directories(file.parent_path());
    std::filesystem::path tmp = file;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw std::runtime_error("cache: cannot write " + tmp.string());
      for (const auto& [k, e] : st.entries) {
        out << json{{"key", e.key}, {"request", e.request}, {"response", e.response},
                    {"meta", e.meta}}
                   .dump()
            << "\n";
      }
      if (!out.flush()) throw std::runtime_error("cache: write failed " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
    std::error_code ec;
    std::filesystem::remove_all(pending_dir(scope), ec);
    st.dirty = false;
  }
}

long long ResponseCache::hits() const { return hits_; }
long long ResponseCache::stores() const { return stores_; }

HttpBackend::HttpBackend(EndpointProfile profile) : profile_(std::move(profile)) {
  profile_.validate();
}

std::string HttpBackend::identity() const {
  return profile_.base_url + "|" + profile_.model + "|" + to_string(profile_.flavor);
}

CompletionResult HttpBackend::complete(const RequestPlan& plan) {
  if (is_offline())
    throw std::runtime_error("offline mode: refusing network request for instance '" +
                             plan.instance_id + "' (response not in cache)");
  if (plan.continuation == "graft" && profile_.flavor == ApiFlavor::chat &&
      !profile_.supports_prefill)
    throw std::runtime_error(
        "endpoint '" + profile_.model +
        "' is chat-flavored without prefill support; graft continuations cannot be "
        "served, configure continuation=quote_reask or a completions endpoint");

  json body;
  body["model"] = profile_.model;
  body["temperature"] = plan.gen.temperature;
  body["max_tokens"] = plan.gen.max_tokens;
  if (!plan.gen.stop.empty()) body["stop"] = plan.gen.stop;
  std::string path;
  if (profile_.flavor == ApiFlavor::chat) {
    json msgs = json::array();
    for (const auto& m : plan.messages)
      msgs.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = msgs;
    path = profile_.chat_path;
  } else {
    body["prompt"] = plan.prompt;
    path = profile_.completions_path;
  }

  httplib::Client cli(profile_.base_url);
  cli.set_connection_timeout(profile_.timeout_s, 0);
  cli.set_read_timeout(profile_.timeout_s, 0);
  cli.set_write_timeout(profile_.timeout_s, 0);
  httplib::Headers headers;
  if (!profile_.auth_env.empty()) {
    if (const char* token = std::getenv(profile_.auth_env.c_str()); token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  auto limiter = InflightLimiter::for_identity(identity(), profile_.max_inflight);
  std::string last_error;
  for (int attempt = 0; attempt < profile_.retry.max_attempts; ++attempt) {
    if (attempt > 0) {
      const auto& b = profile_.retry.backoff_ms;
      int ms = b.empty() ? 1000 : b[std::min<std::size_t>(attempt - 1, b.size() - 1)];
      std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }
    httplib::Result res = [&] {
      LimiterGuard guard(*limiter);
      return cli.Post(path, headers, body.dump(), "application/json");
    }();
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "http " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw std::runtime_error("endpoint returned http " + std::to_string(res->status) + ": " +
                               res->body.substr(0, 200));

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty())
      throw std::runtime_error("malformed completion response: " + res->body.substr(0, 200));
    const json& choice = reply["choices"][0];
    CompletionResult out;
    if (profile_.flavor == ApiFlavor::chat)
      out.text = choice.at("message").at("content").get<std::string>();
    else
      out.text = choice.at("text").get<std::string>();
    out.truncated = choice.value("finish_reason", "") == "length";
    return out;
  }
  throw std::runtime_error("request failed after " +
                           std::to_string(profile_.retry.max_attempts) +
                           " attempts (last: " + last_error + ")");
}

CachedBackend::CachedBackend(std::shared_ptr<ModelBackend> inner,
                             std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
  if (!inner_) throw std::runtime_error("cached backend needs an inner backend");
  if (!cache_) throw std::runtime_error("cached backend needs a cache");
}

std::string CachedBackend::identity() const { return inner_->identity(); }

CompletionResult CachedBackend::complete(const RequestPlan& plan) {
  std::string key = request_fingerprint(plan, inner_->identity());
  ResponseCache::Scope scope{inner_->identity(), plan.dataset, plan.condition.slug()};
  if (auto hit = cache_->lookup(scope, key)) {
    CompletionResult out;
    out.text = hit->response.value("text", "");
    out.truncated = hit->response.value("truncated", false);
    out.from_cache = true;
    return out;
  }
  CompletionResult fresh = inner_->complete(plan);
  CacheEntry entry;
  entry.key = key;
  entry.request = canonical_request(plan, inner_->identity());
  entry.response = json{{"text", fresh.text}, {"truncated", fresh.truncated}};
  entry.meta = json{{"backend", inner_->identity()}};
  cache_->put(scope, entry);
  maybe_crash_after_completion();
  return fresh;
}

}  // namespace scmprobe
