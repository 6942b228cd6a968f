#pragma once

#include "tableprep/table.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace tableprep {

class ChatClient;

/// Raw executor output. For add_column each entry is the new cell (nullopt
/// becomes Null); for clean_column nullopt leaves the cell unchanged. The
/// vector may have the wrong length; callers repair it.
struct SemanticReply {
  std::vector<std::optional<Value>> values;
  std::vector<std::string> warnings;
};

/// Backend for the semantic operators. Implementations must be safe to
/// call concurrently from different tasks. Failures are reported by
/// throwing Error(ErrorCode::ExecutorFailure).
class SemanticExecutor {
 public:
  virtual ~SemanticExecutor() = default;

  virtual SemanticReply derive_column(const Table& t, std::string_view new_column,
                                      std::string_view description) const = 0;
  virtual SemanticReply rewrite_column(const Table& t, std::string_view column,
                                       std::string_view description) const = 0;
};

struct SemanticResult {
  Table table;
  std::vector<std::string> warnings;
};

SemanticResult exec_add_column(const Table& t, std::string_view new_column,
                               std::string_view description, const SemanticExecutor& ex);
SemanticResult exec_clean_column(const Table& t, std::string_view column,
                                 std::string_view description, const SemanticExecutor& ex);

/// Maps one input cell to an output cell; nullopt means "no mapping".
using ValueFunction = std::function<std::optional<Value>(const Value& input)>;

struct MockRule {
  std::string pattern;  // matched as a substring of the operator description
  ValueFunction fn;
};

/// Deterministic rule-based executor.
///
/// The first registered rule whose pattern occurs in the description is
/// used. For add_column the rule input is the cell of the longest column
/// name mentioned in the description (first column if none is mentioned);
/// for clean_column it is the target cell. Without a matching rule,
/// add_column yields Nulls and clean_column leaves the table unchanged,
/// each with a warning.
class MockSemanticExecutor : public SemanticExecutor {
 public:
  explicit MockSemanticExecutor(std::vector<MockRule> rules = {});

  /// Accepts {pattern: {input: output, ...}, ...} (key order is
  /// registration order) or [{"pattern": ..., "map": {...}}, ...].
  static MockSemanticExecutor from_json(const nlohmann::ordered_json& doc);

  SemanticReply derive_column(const Table& t, std::string_view new_column,
                              std::string_view description) const override;
  SemanticReply rewrite_column(const Table& t, std::string_view column,
                               std::string_view description) const override;

 private:
  const MockRule* match(std::string_view description) const;
  SemanticReply apply(const Table& t, std::size_t source, std::string_view description,
                      bool clean) const;

  std::vector<MockRule> rules_;
};

/// Executor used when no semantic backend is configured: every call fails.
class UnavailableExecutor : public SemanticExecutor {
 public:
  SemanticReply derive_column(const Table&, std::string_view, std::string_view) const override;
  SemanticReply rewrite_column(const Table&, std::string_view, std::string_view) const override;
};

/// LLM-backed executor. All rows go into one prompt; the model must answer
/// with a JSON array holding one value per row. Replies are memoized by
/// (table digest, operator, column, description).
class LlmSemanticExecutor : public SemanticExecutor {
 public:
  explicit LlmSemanticExecutor(std::shared_ptr<ChatClient> client);

  SemanticReply derive_column(const Table& t, std::string_view new_column,
                              std::string_view description) const override;
  SemanticReply rewrite_column(const Table& t, std::string_view column,
                               std::string_view description) const override;

  /// Prompt context: row index plus the columns named in the description,
  /// or the whole row when the description names none.
  static std::string build_rows_prompt(const Table& t, std::string_view description,
                                       std::optional<std::size_t> target_column);

 private:
  using MemoKey = std::tuple<std::string, int, std::string, std::string>;

  SemanticReply ask(const Table& t, int kind, std::string_view column,
                    std::string_view description) const;

  std::shared_ptr<ChatClient> client_;
  mutable std::mutex memo_mutex_;
  mutable std::map<MemoKey, SemanticReply> memo_;
};

}  // namespace tableprep
