#include "tableprep/pipeline.hpp"

namespace tableprep {

using json = nlohmann::json;

std::string_view to_string(StepStatus status) {
  switch (status) {
    case StepStatus::Ok: return "ok";
    case StepStatus::Failed: return "failed";
    case StepStatus::Skipped: return "skipped";
  }
  return "?";
}

std::size_t ExecutionTrace::ok_count() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.status == StepStatus::Ok ? 1 : 0;
  return n;
}

namespace {

SemanticResult run_operator(const OperatorSpec& spec, const Table& t, const SemanticExecutor& ex) {
  if (const auto* add = std::get_if<AddColumnParams>(&spec.params)) {
    return exec_add_column(t, add->new_column, add->description, ex);
  }
  if (const auto* clean = std::get_if<CleanColumnParams>(&spec.params)) {
    return exec_clean_column(t, clean->column, clean->description, ex);
  }
  return {exec_structured(spec, t), {}};
}

}  // namespace

ExecutionTrace execute(const Pipeline& p, const Table& t, const SemanticExecutor& ex) {
  ExecutionTrace trace;
  trace.initial = t;
  trace.steps.reserve(p.size());
  Table current = t;
  for (std::size_t i = 0; i < p.size(); ++i) {
    TraceStep step;
    step.spec = p[i];
    if (trace.truncated_at) {
      step.status = StepStatus::Skipped;
      step.table_after = current;
      trace.steps.push_back(std::move(step));
      continue;
    }
    try {
      auto result = run_operator(p[i], current, ex);
      current = std::move(result.table);
      step.status = StepStatus::Ok;
      step.warnings = std::move(result.warnings);
    } catch (const Error& e) {
      step.status = StepStatus::Failed;
      step.error_code = e.code();
      step.error = e.what();
      trace.truncated_at = i;
    } catch (const std::exception& e) {
      step.status = StepStatus::Failed;
      step.error_code = ErrorCode::ExecutorFailure;
      step.error = e.what();
      trace.truncated_at = i;
    }
    step.table_after = current;
    trace.steps.push_back(std::move(step));
  }
  trace.final_table = std::move(current);
  return trace;
}

Table apply_prefix(const Pipeline& p, const Table& t, std::size_t k, const SemanticExecutor& ex) {
  const auto n = std::min(k, p.size());
  Pipeline prefix(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(n));
  return execute(prefix, t, ex).final_table;
}

json trace_to_json(const ExecutionTrace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    json step = {{"op", canonical_key(s.spec)},
                 {"operation", std::string(to_string(s.spec.kind()))},
                 {"status", std::string(to_string(s.status))},
                 {"rows", s.table_after.row_count()},
                 {"cols", s.table_after.column_count()}};
    if (s.error_code) {
      step["error_code"] = std::string(to_string(*s.error_code));
      step["error"] = s.error;
    }
    if (!s.warnings.empty()) step["warnings"] = s.warnings;
    steps.push_back(std::move(step));
  }
  json out = {{"initial", {{"rows", trace.initial.row_count()}, {"cols", trace.initial.column_count()}}},
              {"final", {{"rows", trace.final_table.row_count()}, {"cols", trace.final_table.column_count()}}},
              {"steps", std::move(steps)}};
  out["truncated_at"] = trace.truncated_at ? json(*trace.truncated_at) : json(nullptr);
  return out;
}

}  // namespace tableprep
