#pragma once

#include "tableprep/error.hpp"
#include "tableprep/operators.hpp"
#include "tableprep/semantic.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace tableprep {

enum class StepStatus { Ok, Failed, Skipped };

std::string_view to_string(StepStatus status);

struct TraceStep {
  OperatorSpec spec;
  StepStatus status = StepStatus::Skipped;
  std::optional<ErrorCode> error_code;
  std::string error;
  /// Output of this operator; for Failed/Skipped steps, the last good table.
  Table table_after;
  std::vector<std::string> warnings;
};

/// T_0..T_n of one pipeline run. After the first failure every later step
/// is Skipped and `final_table` is the table before the failure.
struct ExecutionTrace {
  Table initial;
  std::vector<TraceStep> steps;
  Table final_table;
  std::optional<std::size_t> truncated_at;

  std::size_t ok_count() const;
};

ExecutionTrace execute(const Pipeline& p, const Table& t, const SemanticExecutor& ex);

/// Runs only the first k operators (k is clamped to len(p)).
Table apply_prefix(const Pipeline& p, const Table& t, std::size_t k, const SemanticExecutor& ex);

/// Per step: operator key, status, error, and rows x cols after.
nlohmann::json trace_to_json(const ExecutionTrace& trace);

}  // namespace tableprep
