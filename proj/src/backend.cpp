#include "strides/backend.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace strides {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

}  // namespace

long estimate_tokens(const std::string& text) {
  return static_cast<long>((text.size() + 3) / 4);
}

// ---------------------------------------------------------------------------
// Transcript
// ---------------------------------------------------------------------------

Transcript Transcript::from_string(const std::string& body) {
  Transcript t;
  std::istringstream in(body);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error("MalformedRecord",
                  "transcript line " + std::to_string(line_no) + ": " + e.what());
    }
    TranscriptEntry entry;
    entry.key = j.value("key", "");
    entry.text = j.value("text", "");
    entry.prompt_tokens = j.value("prompt_tokens", 0L);
    entry.completion_tokens = j.value("completion_tokens", 0L);
    const std::size_t hash = entry.key.rfind('#');
    if (hash == std::string::npos)
      throw Error("MalformedRecord", "transcript key without '#': " + entry.key);
    entry.role_tag = entry.key.substr(0, hash);
    entry.index = std::atoi(entry.key.c_str() + hash + 1);
    t.entries_.push_back(std::move(entry));
    t.counts_[t.entries_.back().role_tag]++;
  }
  return t;
}

Transcript Transcript::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("Unreadable", path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str());
}

void Transcript::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("Unreadable", path);
  out << dump();
}

std::string Transcript::dump() const {
  std::string out;
  for (const auto& e : entries_) {
    ordered_json j;
    j["key"] = e.key;
    j["text"] = e.text;
    j["prompt_tokens"] = e.prompt_tokens;
    j["completion_tokens"] = e.completion_tokens;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void Transcript::add(const std::string& role_tag, std::string text,
                     long prompt_tokens, long completion_tokens) {
  TranscriptEntry entry;
  entry.role_tag = role_tag;
  entry.index = counts_[role_tag]++;
  entry.key = role_tag + "#" + std::to_string(entry.index);
  entry.text = std::move(text);
  entry.prompt_tokens = prompt_tokens;
  entry.completion_tokens = completion_tokens;
  entries_.push_back(std::move(entry));
}

// ---------------------------------------------------------------------------
// MockBackend
// ---------------------------------------------------------------------------

MockBackend::MockBackend(Transcript transcript) : transcript_(std::move(transcript)) {
  for (const auto& e : transcript_.entries()) by_role_[e.role_tag].push_back(&e);
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
  if (request.role_tag.empty()) throw Error("BadRequest", "empty role_tag");
  std::lock_guard<std::mutex> lock(mu_);
  auto it = by_role_.find(request.role_tag);
  const std::size_t pos = cursor_[request.role_tag];
  if (it == by_role_.end() || pos >= it->second.size())
    throw Error("TranscriptMiss",
                request.role_tag + "#" + std::to_string(pos));
  cursor_[request.role_tag] = pos + 1;
  const TranscriptEntry* entry = it->second[pos];
  ChatResponse resp;
  resp.text = entry->text;
  resp.prompt_tokens = entry->prompt_tokens;
  resp.completion_tokens = entry->completion_tokens;
  resp.backend_id = id();
  return resp;
}

// ---------------------------------------------------------------------------
// RemoteBackend
// ---------------------------------------------------------------------------

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
}

ChatResponse RemoteBackend::complete(const ChatRequest& request) {
  if (api_key_.empty())
    throw Error("AuthMissing", "environment variable " + config_.api_key_env +
                                   " is not set");
  if (request.temperature < 0.0 || request.temperature > 2.0)
    throw Error("BadRequest", "temperature outside [0, 2]");

  ordered_json payload;
  payload["model"] = config_.model;
  payload["temperature"] = request.temperature;
  payload["max_tokens"] = request.max_tokens;
  ordered_json messages = ordered_json::array();
  if (!request.system_prompt.empty())
    messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
  payload["messages"] = messages;
  const std::string body = payload.dump();

  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.connect_timeout_s);
  client.set_read_timeout(config_.read_timeout_s);
  client.set_bearer_token_auth(api_key_);

  std::string last_error;
  int backoff_ms = config_.initial_backoff_ms;
  for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
    auto res = client.Post(config_.path, body, "application/json");
    if (!res) {
      last_error = "transport: " + httplib::to_string(res.error());
      continue;  // transient
    }
    if (res->status == 429 || res->status >= 500 || res->status == 408) {
      last_error = "status " + std::to_string(res->status);
      continue;  // transient
    }
    if (res->status != 200)
      throw Error("HttpError",
                  "status " + std::to_string(res->status) + ": " + res->body);

    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw Error("HttpError", std::string("unparseable response body: ") + e.what());
    }
    ChatResponse out;
    out.backend_id = id();
    try {
      out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw Error("HttpError", "response missing choices[0].message.content");
    }
    if (reply.contains("usage") && reply["usage"].is_object()) {
      out.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
      out.completion_tokens = reply["usage"].value("completion_tokens", 0L);
    } else {
      out.prompt_tokens = estimate_tokens(request.system_prompt + request.user_prompt);
      out.completion_tokens = estimate_tokens(out.text);
      out.tokens_estimated = true;
    }
    return out;
  }
  throw Error("Exhausted", std::to_string(config_.max_retries) +
                               " attempts failed; last: " + last_error);
}

// ---------------------------------------------------------------------------
// RecordingBackend
// ---------------------------------------------------------------------------

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner)
    : inner_(std::move(inner)) {}

ChatResponse RecordingBackend::complete(const ChatRequest& request) {
  ChatResponse resp = inner_->complete(request);
  std::lock_guard<std::mutex> lock(mu_);
  recorded_.add(request.role_tag, resp.text, resp.prompt_tokens,
                resp.completion_tokens);
  return resp;
}

std::string RecordingBackend::id() const { return inner_->id(); }

Transcript RecordingBackend::transcript() const {
  std::lock_guard<std::mutex> lock(mu_);
  return recorded_;
}

// ---------------------------------------------------------------------------
// extract_structured
// ---------------------------------------------------------------------------

nlohmann::json extract_structured(const std::string& text) {
  // Drop fence markers; the fenced payload itself stays in place.
  std::string cleaned;
  cleaned.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text.compare(i, 3, "```") == 0) {
      i += 3;
      // Skip a language tag directly after the opening fence.
      while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i]))))
        ++i;
    } else {
      cleaned.push_back(text[i]);
      ++i;
    }
  }

  bool saw_open = false;
  std::size_t start = 0;
  while ((start = cleaned.find('{', start)) != std::string::npos) {
    saw_open = true;
    int depth = 0;
    bool in_string = false, escaped = false;
    bool closed = false;
    std::size_t end = start;
    for (std::size_t i = start; i < cleaned.size(); ++i) {
      const char c = cleaned[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}') {
        if (--depth == 0) {
          end = i;
          closed = true;
          break;
        }
      }
    }
    if (!closed) throw Error("UnbalancedBraces", "object starting at byte " +
                                                     std::to_string(start));
    try {
      return nlohmann::json::parse(cleaned.substr(start, end - start + 1));
    } catch (const nlohmann::json::parse_error&) {
      start = start + 1;  // balanced but invalid; try the next candidate
    }
  }
  if (saw_open) throw Error("NoObjectFound", "braces present but nothing parsed");
  throw Error("NoObjectFound", "no '{' in text");
}

}  // namespace strides
