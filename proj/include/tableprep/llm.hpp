#pragma once

#include "tableprep/operators.hpp"
#include "tableprep/table.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tableprep {

struct ChatMessage {
  std::string role;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct HttpRequest {
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::chrono::milliseconds timeout{60'000};
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// POST-only HTTP seam. Implementations throw Error(TransportError) when no
/// response was received at all.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// Real network transport (cpp-httplib; http and https).
class HttplibTransport : public HttpTransport {
 public:
  HttpResponse post(const HttpRequest& request) override;

  /// Process-wide count of requests issued through this class.
  static std::uint64_t requests_issued();

 private:
  static std::atomic<std::uint64_t> issued_;
};

/// Offline transport double driven by a responder callback.
class ScriptedTransport : public HttpTransport {
 public:
  using Responder = std::function<HttpResponse(const HttpRequest&, std::size_t call_index)>;

  explicit ScriptedTransport(Responder responder) : responder_(std::move(responder)) {}

  HttpResponse post(const HttpRequest& request) override;

  std::size_t calls() const;
  std::vector<HttpRequest> requests() const;

 private:
  Responder responder_;
  mutable std::mutex mutex_;
  std::vector<HttpRequest> seen_;
};

/// Wraps `content` in a minimal chat-completion response body.
std::string chat_completion_body(std::string_view content);

/// Appends request/response pairs to a JSONL file.
class LlmLog {
 public:
  explicit LlmLog(const std::string& path);
  void record(const nlohmann::json& entry);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

struct ChatSettings {
  std::string endpoint = "http://localhost:8000/v1/chat/completions";
  std::string model = "tableprep-generator";
  double temperature = 0.8;
  int max_tokens = 1024;
  std::chrono::milliseconds timeout{60'000};
  int retries = 2;
  std::chrono::milliseconds retry_backoff{500};
  /// Empty disables authentication.
  std::string api_key_env = "OPENAI_API_KEY";

  static ChatSettings from_json(const nlohmann::json& doc);
};

using RequestLimiter = std::counting_semaphore<>;

/// OpenAI-compatible chat-completion client.
class ChatClient {
 public:
  ChatClient(ChatSettings settings, std::shared_ptr<HttpTransport> transport,
             std::shared_ptr<RequestLimiter> limiter = nullptr,
             std::shared_ptr<LlmLog> log = nullptr);

  /// Throws AuthMissing when the configured key variable is unset.
  std::optional<std::string> api_key() const;

  /// Returns choices[0].message.content. Retries transport errors, non-2xx
  /// statuses and malformed bodies up to `retries` extra times, then throws
  /// Error(TransportError).
  std::string complete(const std::vector<ChatMessage>& messages,
                       std::optional<std::int64_t> seed = std::nullopt) const;

  const ChatSettings& settings() const { return settings_; }

 private:
  ChatSettings settings_;
  std::shared_ptr<HttpTransport> transport_;
  std::shared_ptr<RequestLimiter> limiter_;
  std::shared_ptr<LlmLog> log_;
};

// ---------------------------------------------------------------------------
// Pipeline generation

/// System prompt describing the operator schema (constant).
std::string_view generation_system_prompt();

/// Two messages: the schema system prompt and a user message with the
/// question and the markdown table (capped at `max_rows`).
std::vector<ChatMessage> build_generation_prompt(std::string_view question, const Table& t,
                                                 std::size_t max_rows = 100);

struct CandidateFailure {
  std::size_t index;
  std::string message;
};

/// Index-stable generation outcome: slot i holds candidate i or nullopt if
/// that request failed (see `failures`).
struct CandidateBatch {
  std::vector<std::optional<std::string>> slots;
  std::vector<CandidateFailure> failures;

  std::vector<std::string> texts() const;
};

class CandidateGenerator {
 public:
  virtual ~CandidateGenerator() = default;
  virtual CandidateBatch generate(std::string_view question, const Table& t, std::size_t n) const = 0;
};

/// Samples `n` completions concurrently; request i carries seed + i.
class ChatCandidateGenerator : public CandidateGenerator {
 public:
  ChatCandidateGenerator(std::shared_ptr<ChatClient> client, std::int64_t seed = 0,
                         std::size_t prompt_max_rows = 100);

  /// Throws AuthMissing before any request; AllRequestsFailed if no slot
  /// succeeded.
  CandidateBatch generate(std::string_view question, const Table& t, std::size_t n) const override;

 private:
  std::shared_ptr<ChatClient> client_;
  std::int64_t seed_;
  std::size_t prompt_max_rows_;
};

/// Offline generator: question -> recorded raw completions. Returns the
/// first `n` recordings (fewer if fewer were recorded); unknown questions
/// yield an empty batch.
class ScriptedCandidateGenerator : public CandidateGenerator {
 public:
  explicit ScriptedCandidateGenerator(std::map<std::string, std::vector<std::string>> script);
  static ScriptedCandidateGenerator from_json(const nlohmann::json& doc);

  CandidateBatch generate(std::string_view question, const Table& t, std::size_t n) const override;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> script_;
};

/// Span of the first balanced `[...]` in `text` that parses as JSON.
/// Brackets inside JSON strings are ignored; anything before a closing
/// `</think>` tag is skipped.
std::optional<std::string_view> find_first_json_array(std::string_view text);

/// Throws NoJsonFound, or a PipelineParseError from parse_pipeline.
Pipeline extract_pipeline_json(std::string_view raw);

}  // namespace tableprep
