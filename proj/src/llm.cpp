#include "tableprep/llm.hpp"

#include "tableprep/error.hpp"

#include <httplib.h>

#include <cstdlib>
#include <future>
#include <thread>

namespace tableprep {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Transports

std::atomic<std::uint64_t> HttplibTransport::issued_{0};

std::uint64_t HttplibTransport::requests_issued() { return issued_.load(); }

HttpResponse HttplibTransport::post(const HttpRequest& request) {
  const auto scheme_end = request.url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::TransportError, "endpoint URL lacks a scheme: " + request.url);
  }
  const auto path_start = request.url.find('/', scheme_end + 3);
  const std::string origin = request.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);

  ++issued_;
  auto result = client.Post(path, headers, request.body, "application/json");
  if (!result) {
    throw Error(ErrorCode::TransportError,
                "request to " + origin + " failed: " + httplib::to_string(result.error()));
  }
  return HttpResponse{result->status, result->body};
}

HttpResponse ScriptedTransport::post(const HttpRequest& request) {
  std::size_t index = 0;
  {
    std::lock_guard lock(mutex_);
    index = seen_.size();
    seen_.push_back(request);
  }
  return responder_(request, index);
}

std::size_t ScriptedTransport::calls() const {
  std::lock_guard lock(mutex_);
  return seen_.size();
}

std::vector<HttpRequest> ScriptedTransport::requests() const {
  std::lock_guard lock(mutex_);
  return seen_;
}

std::string chat_completion_body(std::string_view content) {
  json body = {{"object", "chat.completion"},
               {"choices", json::array({{{"index", 0},
                                         {"message", {{"role", "assistant"}, {"content", content}}},
                                         {"finish_reason", "stop"}}})}};
  return body.dump();
}

LlmLog::LlmLog(const std::string& path) : out_(path, std::ios::app) {
  if (!out_) {
    throw Error(ErrorCode::ConfigError, "cannot open LLM log file " + path);
  }
}

void LlmLog::record(const json& entry) {
  std::lock_guard lock(mutex_);
  out_ << entry.dump() << '\n';
  out_.flush();
}

// ---------------------------------------------------------------------------
// Chat client

ChatSettings ChatSettings::from_json(const json& doc) {
  ChatSettings s;
  if (!doc.is_object()) return s;
  s.endpoint = doc.value("endpoint", s.endpoint);
  s.model = doc.value("model", s.model);
  s.temperature = doc.value("temperature", s.temperature);
  s.max_tokens = doc.value("max_tokens", s.max_tokens);
  if (doc.contains("timeout_s")) {
    s.timeout = std::chrono::milliseconds(
        static_cast<long long>(doc.at("timeout_s").get<double>() * 1000.0));
  }
  s.retries = doc.value("retries", s.retries);
  if (doc.contains("retry_backoff_ms")) {
    s.retry_backoff = std::chrono::milliseconds(doc.at("retry_backoff_ms").get<long long>());
  }
  s.api_key_env = doc.value("api_key_env", s.api_key_env);
  if (s.timeout.count() <= 0) {
    throw Error(ErrorCode::ConfigError, "timeout must be positive");
  }
  if (s.retries < 0) {
    throw Error(ErrorCode::ConfigError, "retries must be >= 0");
  }
  return s;
}

ChatClient::ChatClient(ChatSettings settings, std::shared_ptr<HttpTransport> transport,
                       std::shared_ptr<RequestLimiter> limiter, std::shared_ptr<LlmLog> log)
    : settings_(std::move(settings)),
      transport_(std::move(transport)),
      limiter_(std::move(limiter)),
      log_(std::move(log)) {}

std::optional<std::string> ChatClient::api_key() const {
  if (settings_.api_key_env.empty()) return std::nullopt;
  const char* key = std::getenv(settings_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::AuthMissing,
                "environment variable " + settings_.api_key_env + " is not set");
  }
  return std::string(key);
}

namespace {

struct LimiterSlot {
  explicit LimiterSlot(RequestLimiter* limiter) : limiter_(limiter) {
    if (limiter_) limiter_->acquire();
  }
  ~LimiterSlot() {
    if (limiter_) limiter_->release();
  }
  LimiterSlot(const LimiterSlot&) = delete;
  LimiterSlot& operator=(const LimiterSlot&) = delete;

 private:
  RequestLimiter* limiter_;
};

}  // namespace

std::string ChatClient::complete(const std::vector<ChatMessage>& messages,
                                 std::optional<std::int64_t> seed) const {
  const auto key = api_key();

  json body = {{"model", settings_.model},
               {"temperature", settings_.temperature},
               {"max_tokens", settings_.max_tokens},
               {"messages", json::array()}};
  for (const auto& m : messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  if (seed) body["seed"] = *seed;

  HttpRequest request;
  request.url = settings_.endpoint;
  request.body = body.dump();
  request.timeout = settings_.timeout;
  if (key) request.headers.emplace_back("Authorization", "Bearer " + *key);

  std::string last_error;
  for (int attempt = 0; attempt <= settings_.retries; ++attempt) {
    if (attempt > 0 && settings_.retry_backoff.count() > 0) {
      std::this_thread::sleep_for(settings_.retry_backoff * attempt);
    }
    try {
      HttpResponse response;
      {
        LimiterSlot slot(limiter_.get());
        response = transport_->post(request);
      }
      if (log_) {
        log_->record({{"request", body}, {"status", response.status}, {"response", response.body}});
      }
      if (response.status < 200 || response.status >= 300) {
        last_error = "HTTP " + std::to_string(response.status);
        continue;
      }
      auto parsed = json::parse(response.body, nullptr, false);
      if (parsed.is_discarded()) {
        last_error = "response body is not JSON";
        continue;
      }
      const auto& choices = parsed.value("choices", json::array());
      if (!choices.is_array() || choices.empty() || !choices[0].contains("message") ||
          !choices[0]["message"].value("content", json()).is_string()) {
        last_error = "response has no choices[0].message.content";
        continue;
      }
      return choices[0]["message"]["content"].get<std::string>();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TransportError) throw;
      last_error = e.what();
      if (log_) log_->record({{"request", body}, {"error", last_error}});
    }
  }
  throw Error(ErrorCode::TransportError, "chat completion failed after " +
                                             std::to_string(settings_.retries + 1) +
                                             " attempt(s): " + last_error);
}

// ---------------------------------------------------------------------------
// Generation

std::string_view generation_system_prompt() {
  return R"(You prepare tables for question answering. Given a question and a table, output a data preparation pipeline that turns the table into a small table that still contains everything needed to answer the question.

Reply with a single JSON array of operator objects and nothing else. Each object has an "operation" field, its parameters, and a short "explanation". Available operators:

{"operation": "select", "columns": ["<column>", ...], "explanation": "..."}
  keep only the listed columns
{"operation": "filter", "column": "<column>", "cmp": "==" | "!=" | ">" | "<" | ">=" | "<=", "value": <string or number>, "explanation": "..."}
  keep rows whose cell satisfies the comparison
{"operation": "sort_by", "column": "<column>", "order": "asc" | "desc", "k": <integer, optional>, "explanation": "..."}
  sort rows, optionally keeping only the first k
{"operation": "group_by", "column": "<column>", "explanation": "..."}
  count occurrences of each distinct value of the column
{"operation": "add_column", "new_column": "<name>", "description": "<how to derive it from existing columns>", "explanation": "..."}
  add a column inferred from existing columns
{"operation": "clean_column", "column": "<column>", "description": "<how to normalize the values>", "explanation": "..."}
  normalize the values of a column, e.g. date formats or units

Use exact column names from the table. Output [] if the table needs no preparation.)";
}

std::vector<ChatMessage> build_generation_prompt(std::string_view question, const Table& t,
                                                 std::size_t max_rows) {
  if (question.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::EmptyQuestion, "question is empty");
  }
  std::string user = "Question: " + std::string(question) + "\n\nTable:\n" +
                     serialize_markdown(t, max_rows) + "\n\nPipeline:";
  return {ChatMessage{"system", std::string(generation_system_prompt())},
          ChatMessage{"user", std::move(user)}};
}

std::vector<std::string> CandidateBatch::texts() const {
  std::vector<std::string> out;
  for (const auto& s : slots) {
    if (s) out.push_back(*s);
  }
  return out;
}

ChatCandidateGenerator::ChatCandidateGenerator(std::shared_ptr<ChatClient> client,
                                               std::int64_t seed, std::size_t prompt_max_rows)
    : client_(std::move(client)), seed_(seed), prompt_max_rows_(prompt_max_rows) {}

CandidateBatch ChatCandidateGenerator::generate(std::string_view question, const Table& t,
                                                std::size_t n) const {
  const auto messages = build_generation_prompt(question, t, prompt_max_rows_);
  client_->api_key();

  std::vector<std::future<std::string>> pending;
  pending.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto seed = seed_ + static_cast<std::int64_t>(i);
    pending.push_back(std::async(std::launch::async, [this, &messages, seed] {
      return client_->complete(messages, seed);
    }));
  }

  CandidateBatch batch;
  batch.slots.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      batch.slots[i] = pending[i].get();
    } catch (const std::exception& e) {
      batch.failures.push_back({i, e.what()});
    }
  }
  if (n > 0 && batch.failures.size() == n) {
    throw Error(ErrorCode::AllRequestsFailed,
                "all " + std::to_string(n) + " generation requests failed; first: " +
                    batch.failures.front().message);
  }
  return batch;
}

ScriptedCandidateGenerator::ScriptedCandidateGenerator(
    std::map<std::string, std::vector<std::string>> script)
    : script_(script.begin(), script.end()) {}

ScriptedCandidateGenerator ScriptedCandidateGenerator::from_json(const json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::ConfigError, "generator script must map questions to completions");
  }
  std::map<std::string, std::vector<std::string>> script;
  for (const auto& [question, texts] : doc.items()) {
    if (!texts.is_array()) {
      throw Error(ErrorCode::ConfigError, "script entry for \"" + question + "\" is not a list");
    }
    auto& out = script[question];
    for (const auto& t : texts) {
      out.push_back(t.is_string() ? t.get<std::string>() : t.dump());
    }
  }
  return ScriptedCandidateGenerator(std::move(script));
}

CandidateBatch ScriptedCandidateGenerator::generate(std::string_view question, const Table&,
                                                    std::size_t n) const {
  CandidateBatch batch;
  auto it = script_.find(question);
  if (it == script_.end()) return batch;
  for (std::size_t i = 0; i < n && i < it->second.size(); ++i) {
    batch.slots.emplace_back(it->second[i]);
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

// Returns the end (exclusive) of the balanced bracket group opening at
// `start`, or npos if unbalanced.
std::size_t balanced_end(std::string_view text, std::size_t start) {
  std::vector<char> stack;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_string = true;
        break;
      case '[':
      case '{':
        stack.push_back(c);
        break;
      case ']':
      case '}':
        if (stack.empty() || stack.back() != (c == ']' ? '[' : '{')) return std::string_view::npos;
        stack.pop_back();
        if (stack.empty()) return i + 1;
        break;
      default:
        break;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<std::string_view> find_first_json_array(std::string_view text) {
  if (auto think = text.rfind("</think>"); think != std::string_view::npos) {
    text.remove_prefix(think + 8);
  }
  for (std::size_t pos = text.find('['); pos != std::string_view::npos;
       pos = text.find('[', pos + 1)) {
    const auto end = balanced_end(text, pos);
    if (end == std::string_view::npos) continue;
    auto span = text.substr(pos, end - pos);
    if (json::accept(span)) return span;
  }
  return std::nullopt;
}

Pipeline extract_pipeline_json(std::string_view raw) {
  auto span = find_first_json_array(raw);
  if (!span) {
    throw Error(ErrorCode::NoJsonFound, "no JSON array found in model output");
  }
  return parse_pipeline(json::parse(*span));
}

}  // namespace tableprep
