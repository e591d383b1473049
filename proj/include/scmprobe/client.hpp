#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "scmprobe/transcript.hpp"

namespace scmprobe {

struct RetryPolicy {
  int max_attempts = 4;
  std::vector<int> backoff_ms = {500, 1000, 2000};  // last value repeats
};

// An OpenAI-compatible endpoint. Authentication comes from the environment
// variable named in auth_env (sent as a bearer token when set).
struct EndpointProfile {
  std::string base_url;  // e.g. "http://localhost:8000"
  std::string chat_path = "/v1/chat/completions";
  std::string completions_path = "/v1/completions";
  std::string model;
  ApiFlavor flavor = ApiFlavor::chat;
  // Chat endpoints can serve graft continuations only when they accept a
  // pre-filled assistant turn; otherwise graft plans are rejected up front.
  bool supports_prefill = false;
  std::string auth_env;
  int timeout_s = 120;
  int max_inflight = 4;
  RetryPolicy retry;

  void validate() const;
  // Filesystem-safe identity used as the cache directory component.
  std::string slug() const;
};

struct CompletionResult {
  std::string text;
  bool truncated = false;
  bool from_cache = false;
};

// Canonical serialization of everything that determines a request's
// semantics: model identity, rendered content, fixed segments and sampling
// parameters, as JSON with sorted keys and no incidental whitespace. Two
// plans with the same fields hash identically regardless of construction
// order.
json canonical_request(const RequestPlan& plan, const std::string& backend_identity);
std::string request_fingerprint(const RequestPlan& plan, const std::string& backend_identity);

std::string sha256_hex(const std::string& data);

// Process-wide kill switch for network access (--offline). HTTP backends
// refuse to issue requests while it is set; cache hits still work.
void set_offline(bool offline);
bool is_offline();

struct CacheEntry {
  std::string key;
  json request;
  json response;  // {"text": ..., "truncated": ...}
  json meta;
};

// Response cache keyed by request fingerprint, scoped per
// (endpoint, dataset, condition). On disk each scope is one JSONL file,
// <root>/<endpoint>/<dataset>/<condition>.jsonl. Writes first land as
// individual entry files in a sibling .pending directory via
// write-temp-then-rename, so a crash can never tear the JSONL; compact()
// folds pending entries into the scope file (sorted by key, so the file
// content is deterministic). A default-constructed cache is memory-only.
class ResponseCache {
 public:
  struct Scope {
    std::string endpoint;
    std::string dataset;
    std::string condition;
  };

  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path root);

  std::optional<CacheEntry> lookup(const Scope& scope, const std::string& key);
  void put(const Scope& scope, const CacheEntry& entry);
  // Folds pending entry files into the scope JSONL files.
  void compact();

  bool persistent() const { return !root_.empty(); }
  long long hits() const;
  long long stores() const;

 private:
  struct ScopeState {
    std::map<std::string, CacheEntry> entries;  // sorted: compaction is deterministic
    bool loaded = false;
    bool dirty = false;
  };

  std::string scope_dir_key(const Scope& s) const;
  std::filesystem::path scope_file(const Scope& s) const;
  std::filesystem::path pending_dir(const Scope& s) const;
  ScopeState& state_for(const Scope& s);  // loads from disk on first touch

  std::filesystem::path root_;
  std::map<std::string, ScopeState> scopes_;
  std::map<std::string, Scope> scope_names_;
  long long hits_ = 0;
  long long stores_ = 0;
  std::mutex mu_;
};

// Anything that can serve a generation request.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual CompletionResult complete(const RequestPlan& plan) = 0;
  // Stable identity string; part of every request fingerprint.
  virtual std::string identity() const = 0;
};

// Live HTTP client for OpenAI-compatible chat/completions APIs. Retries on
// 429/5xx/transport errors per the profile's policy, enforces the
// max_inflight cap across the process (one limiter per endpoint identity),
// and tags token-cap truncation from finish_reason.
class HttpBackend : public ModelBackend {
 public:
  explicit HttpBackend(EndpointProfile profile);
  CompletionResult complete(const RequestPlan& plan) override;
  std::string identity() const override;

 private:
  EndpointProfile profile_;
};

// Wraps another backend with the response cache: lookups first, one store
// per miss. Also the hook point for the crash-injection environment knob
// used by resumability tests (SCMPROBE_CRASH_AFTER_COMPLETIONS=<n> makes the
// process exit hard after n real completions).
class CachedBackend : public ModelBackend {
 public:
  CachedBackend(std::shared_ptr<ModelBackend> inner, std::shared_ptr<ResponseCache> cache);
  CompletionResult complete(const RequestPlan& plan) override;
  std::string identity() const override;

 private:
  std::shared_ptr<ModelBackend> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

}  // namespace scmprobe
