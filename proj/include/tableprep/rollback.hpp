#pragma once

#include "tableprep/pipeline.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace tableprep {

class ChatClient;

/// True iff the response contains "no data available", ignoring case and
/// collapsing whitespace runs.
bool detect_no_data(std::string_view response);

/// Question answering over a serialized (markdown) table. Implementations
/// must tolerate concurrent calls; transport problems throw.
class QaClient {
 public:
  virtual ~QaClient() = default;
  virtual std::string ask(std::string_view question, std::string_view table_text) = 0;
};

std::string_view qa_system_prompt();

/// Chat-completion QA model instructed to reply "No data available" when
/// the table is insufficient.
class ChatQaClient : public QaClient {
 public:
  explicit ChatQaClient(std::shared_ptr<ChatClient> client);
  std::string ask(std::string_view question, std::string_view table_text) override;

 private:
  std::shared_ptr<ChatClient> client_;
};

/// Replays fixed responses keyed by (question, digest of the table text).
/// A "*" digest matches any table; unmatched calls get `fallback`.
class ScriptedQaClient : public QaClient {
 public:
  explicit ScriptedQaClient(std::string fallback = "No data available") : fallback_(std::move(fallback)) {}

  void add(std::string question, std::string digest, std::string response);
  std::string ask(std::string_view question, std::string_view table_text) override;

  std::size_t calls() const;

 private:
  std::string fallback_;
  std::map<std::pair<std::string, std::string>, std::string> responses_;
  mutable std::mutex mutex_;
  std::size_t calls_ = 0;
};

/// Simulated reader. For a known question it answers only when every
/// evidence string appears as a cell of the submitted table, else it says
/// "No data available". Tables with more than `capacity` cells (when set)
/// get the scripted distractor instead of the answer.
class LookupQaClient : public QaClient {
 public:
  struct Entry {
    std::string answer;
    std::vector<std::string> evidence;
    std::optional<std::size_t> capacity;
    std::string distractor = "unknown";
  };

  explicit LookupQaClient(std::map<std::string, Entry> entries);

  /// {question: {"answer", "evidence": [...], "capacity"?, "distractor"?}}
  static LookupQaClient from_json(const nlohmann::json& doc);

  std::string ask(std::string_view question, std::string_view table_text) override;

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

/// Data cell texts of a table produced by serialize_markdown (header,
/// separator and omission lines excluded; escapes undone).
std::vector<std::string> markdown_cells(std::string_view table_text);

struct TableShape {
  int state = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct RollbackResult {
  std::string answer;
  int state_used = 0;
  int qa_calls = 0;
  bool answered = false;        // false when the last response was still "No data available"
  bool short_circuited = false; // empty pipeline: one call stood in for all three states
  std::vector<TableShape> tables_tried;
  ExecutionTrace trace;
  Table submitted;              // table the returned answer was given for
};

struct RollbackOptions {
  bool short_circuit_empty_pipeline = true;
};

/// State 1 submits the fully prepared table; on "No data available" State 2
/// submits the table after the first operator (reused from the State-1
/// trace); State 3 submits the original table and returns its response
/// verbatim. QA failures are rethrown as QaTransportError(state).
RollbackResult answer_with_rollback(std::string_view question, const Table& t, const Pipeline& p,
                                    QaClient& qa, const SemanticExecutor& ex,
                                    const RollbackOptions& options = {});

}  // namespace tableprep
