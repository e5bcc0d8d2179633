#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "strides/schema.hpp"

namespace strides {

struct ChatRequest {
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.0;  // [0, 2]
  std::string role_tag;      // agent name; keys transcript replay
  int max_tokens = 4096;
};

struct ChatResponse {
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  bool tokens_estimated = false;  // provider omitted usage; ceil(chars/4) used
  std::string backend_id;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Throws Error: Exhausted(retries), TranscriptMiss, AuthMissing.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

struct TranscriptEntry {
  std::string key;  // "<role_tag>#<index>"
  std::string role_tag;
  int index = 0;
  std::string text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

// Line-delimited JSON, one entry per line. Replay consumes entries in order
// per role_tag.
class Transcript {
 public:
  static Transcript load(const std::string& path);      // Error("Unreadable")
  static Transcript from_string(const std::string& body);
  void save(const std::string& path) const;
  std::string dump() const;

  void add(const std::string& role_tag, std::string text, long prompt_tokens = 0,
           long completion_tokens = 0);
  const std::vector<TranscriptEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<TranscriptEntry> entries_;
  std::map<std::string, int> counts_;
};

// Deterministic scripted backend: replays transcript entries per role_tag,
// reporting the recorded token counts verbatim.
class MockBackend : public Backend {
 public:
  explicit MockBackend(Transcript transcript);
  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return "replay"; }

 private:
  Transcript transcript_;
  std::map<std::string, std::vector<const TranscriptEntry*>> by_role_;
  std::map<std::string, std::size_t> cursor_;
  std::mutex mu_;
};

struct RemoteConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4.1";
  std::string api_key_env = "STRIDES_API_KEY";
  int max_retries = 3;          // attempts on transient failures
  int initial_backoff_ms = 1000;  // doubles per retry
  int connect_timeout_s = 10;
  int read_timeout_s = 120;
};

// HTTPS chat-completions client with bounded retries and exponential backoff.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return "remote:" + config_.model; }

 private:
  RemoteConfig config_;
  std::string api_key_;
};

// Wraps another backend and appends every exchange to a transcript, so live
// runs can be replayed later.
class RecordingBackend : public Backend {
 public:
  explicit RecordingBackend(std::shared_ptr<Backend> inner);
  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override;
  Transcript transcript() const;

 private:
  std::shared_ptr<Backend> inner_;
  Transcript recorded_;
  mutable std::mutex mu_;
};

// Strips code fences, finds the first balanced top-level JSON object, parses
// it. Throws Error("NoObjectFound") / Error("UnbalancedBraces").
nlohmann::json extract_structured(const std::string& text);

long estimate_tokens(const std::string& text);  // ceil(chars / 4)

}  // namespace strides
