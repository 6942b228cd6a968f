#include "tableprep/semantic.hpp"

#include "tableprep/error.hpp"
#include "tableprep/llm.hpp"

#include <algorithm>

namespace tableprep {

using json = nlohmann::json;

namespace {

void repair_length(SemanticReply& reply, std::size_t rows, std::string_view what) {
  if (reply.values.size() == rows) return;
  reply.warnings.push_back(std::string(what) + ": executor returned " +
                           std::to_string(reply.values.size()) + " values for " +
                           std::to_string(rows) + " rows; " +
                           (reply.values.size() < rows ? "padded with nulls" : "truncated"));
  reply.values.resize(rows);
}

}  // namespace

SemanticResult exec_add_column(const Table& t, std::string_view new_column,
                               std::string_view description, const SemanticExecutor& ex) {
  if (t.column_index(new_column)) {
    throw Error(ErrorCode::ColumnExists, "column \"" + std::string(new_column) + "\" already exists");
  }
  SemanticReply reply = ex.derive_column(t, new_column, description);
  repair_length(reply, t.row_count(), "add_column");

  auto columns = t.columns();
  columns.emplace_back(new_column);
  std::vector<Row> rows = t.rows();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    rows[r].push_back(reply.values[r].value_or(Value()));
  }
  return {Table(std::move(columns), std::move(rows)), std::move(reply.warnings)};
}

SemanticResult exec_clean_column(const Table& t, std::string_view column,
                                 std::string_view description, const SemanticExecutor& ex) {
  const auto idx = t.column_index(column);
  if (!idx) {
    throw Error(ErrorCode::ColumnNotFound, "column \"" + std::string(column) + "\" not found");
  }
  if (t.row_count() == 0) return {t, {}};

  SemanticReply reply = ex.rewrite_column(t, column, description);
  repair_length(reply, t.row_count(), "clean_column");

  std::vector<Row> rows = t.rows();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (reply.values[r]) rows[r][*idx] = *reply.values[r];
  }
  return {Table(t.columns(), std::move(rows)), std::move(reply.warnings)};
}

// ---------------------------------------------------------------------------
// Mock

MockSemanticExecutor::MockSemanticExecutor(std::vector<MockRule> rules) : rules_(std::move(rules)) {}

MockSemanticExecutor MockSemanticExecutor::from_json(const nlohmann::ordered_json& doc) {
  auto make_rule = [](std::string pattern, const nlohmann::ordered_json& mapping) {
    if (!mapping.is_object()) {
      throw Error(ErrorCode::ConfigError, "mock rule \"" + pattern + "\" must map inputs to outputs");
    }
    auto table = std::make_shared<std::map<std::string, Value>>();
    for (const auto& [in, out] : mapping.items()) {
      (*table)[in] = out.is_null() ? Value()
                                   : Value::from_cell_text(out.is_string() ? out.get<std::string>()
                                                                           : out.dump());
    }
    ValueFunction fn = [table](const Value& input) -> std::optional<Value> {
      auto it = table->find(input.render());
      if (it == table->end()) return std::nullopt;
      return it->second;
    };
    return MockRule{std::move(pattern), std::move(fn)};
  };

  std::vector<MockRule> rules;
  if (doc.is_object()) {
    for (const auto& [pattern, mapping] : doc.items()) {
      rules.push_back(make_rule(pattern, mapping));
    }
  } else if (doc.is_array()) {
    for (const auto& entry : doc) {
      if (!entry.is_object() || !entry.contains("pattern") || !entry["pattern"].is_string()) {
        throw Error(ErrorCode::ConfigError, "mock rule entries need a string \"pattern\"");
      }
      rules.push_back(make_rule(entry["pattern"].get<std::string>(),
                                entry.value("map", nlohmann::ordered_json::object())));
    }
  } else {
    throw Error(ErrorCode::ConfigError, "mock rules must be an object or an array");
  }
  return MockSemanticExecutor(std::move(rules));
}

const MockRule* MockSemanticExecutor::match(std::string_view description) const {
  for (const auto& rule : rules_) {
    if (description.find(rule.pattern) != std::string_view::npos) return &rule;
  }
  return nullptr;
}

SemanticReply MockSemanticExecutor::apply(const Table& t, std::size_t source,
                                          std::string_view description, bool clean) const {
  SemanticReply reply;
  reply.values.resize(t.row_count());
  const MockRule* rule = match(description);
  if (rule == nullptr) {
    reply.warnings.push_back("no mock rule matches \"" + std::string(description) + "\"" +
                             (clean ? "; column left unchanged" : "; column filled with nulls"));
    return reply;
  }
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    try {
      reply.values[r] = rule->fn(t.rows()[r][source]);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ExecutorFailure, "mock rule \"" + rule->pattern + "\" failed: " + e.what());
    }
  }
  return reply;
}

SemanticReply MockSemanticExecutor::derive_column(const Table& t, std::string_view,
                                                  std::string_view description) const {
  if (t.column_count() == 0) {
    return SemanticReply{std::vector<std::optional<Value>>(t.row_count()), {}};
  }
  std::size_t source = 0;
  std::size_t best_len = 0;
  for (std::size_t c = 0; c < t.column_count(); ++c) {
    const auto& name = t.columns()[c];
    if (!name.empty() && name.size() > best_len && description.find(name) != std::string_view::npos) {
      source = c;
      best_len = name.size();
    }
  }
  return apply(t, source, description, false);
}

SemanticReply MockSemanticExecutor::rewrite_column(const Table& t, std::string_view column,
                                                   std::string_view description) const {
  const auto idx = t.column_index(column);
  if (!idx) {
    throw Error(ErrorCode::ColumnNotFound, "column \"" + std::string(column) + "\" not found");
  }
  return apply(t, *idx, description, true);
}

SemanticReply UnavailableExecutor::derive_column(const Table&, std::string_view,
                                                 std::string_view) const {
  throw Error(ErrorCode::ExecutorFailure, "no semantic executor configured");
}

SemanticReply UnavailableExecutor::rewrite_column(const Table&, std::string_view,
                                                  std::string_view) const {
  throw Error(ErrorCode::ExecutorFailure, "no semantic executor configured");
}

// ---------------------------------------------------------------------------
// LLM-backed

namespace {

constexpr int kDerive = 0;
constexpr int kRewrite = 1;

std::vector<std::size_t> mentioned_columns(const Table& t, std::string_view description) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < t.column_count(); ++c) {
    const auto& name = t.columns()[c];
    if (!name.empty() && description.find(name) != std::string_view::npos) out.push_back(c);
  }
  return out;
}

}  // namespace

LlmSemanticExecutor::LlmSemanticExecutor(std::shared_ptr<ChatClient> client)
    : client_(std::move(client)) {}

std::string LlmSemanticExecutor::build_rows_prompt(const Table& t, std::string_view description,
                                                   std::optional<std::size_t> target_column) {
  std::vector<std::size_t> cols = mentioned_columns(t, description);
  if (target_column && std::find(cols.begin(), cols.end(), *target_column) == cols.end()) {
    cols.insert(cols.begin(), *target_column);
  }
  if (cols.empty()) {
    for (std::size_t c = 0; c < t.column_count(); ++c) cols.push_back(c);
  }
  std::string out;
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    json row = json::object();
    for (auto c : cols) row[t.columns()[c]] = t.rows()[r][c].render();
    out += "[" + std::to_string(r) + "] " + row.dump() + "\n";
  }
  return out;
}

SemanticReply LlmSemanticExecutor::ask(const Table& t, int kind, std::string_view column,
                                       std::string_view description) const {
  MemoKey key{table_digest(t), kind, std::string(column), std::string(description)};
  {
    std::lock_guard lock(memo_mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }

  const std::size_t n = t.row_count();
  std::string system;
  std::string user;
  if (kind == kDerive) {
    system =
        "You derive a new table column from existing columns. Reply with only a JSON array of "
        "exactly " + std::to_string(n) + " values, one per row in row order. Use null when a value "
        "cannot be determined.";
    user = "New column: " + std::string(column) + "\nInstruction: " + std::string(description) +
           "\nRows:\n" + build_rows_prompt(t, description, std::nullopt);
  } else {
    system =
        "You normalize the values of one table column. Reply with only a JSON array of exactly " +
        std::to_string(n) + " values, one per row in row order. Repeat a value unchanged if it "
        "needs no cleaning.";
    user = "Column: " + std::string(column) + "\nInstruction: " + std::string(description) +
           "\nRows:\n" + build_rows_prompt(t, description, t.column_index(column));
  }

  std::string raw;
  try {
    raw = client_->complete({{"system", system}, {"user", user}});
  } catch (const Error& e) {
    throw Error(ErrorCode::ExecutorFailure, std::string("semantic executor: ") + e.what());
  }
  auto span = find_first_json_array(raw);
  if (!span) {
    throw Error(ErrorCode::ExecutorFailure, "semantic executor: reply holds no JSON array");
  }
  SemanticReply reply;
  for (const auto& v : json::parse(*span)) {
    if (v.is_null()) {
      reply.values.emplace_back(kind == kDerive ? std::optional<Value>(Value()) : std::nullopt);
    } else if (v.is_string()) {
      reply.values.emplace_back(Value::from_cell_text(v.get<std::string>()));
    } else if (v.is_number_float()) {
      auto d = Decimal::from_double(v.get<double>());
      reply.values.emplace_back(d ? Value::number(*d) : Value());
    } else {
      reply.values.emplace_back(Value::from_cell_text(v.dump()));
    }
  }

  std::lock_guard lock(memo_mutex_);
  memo_.emplace(std::move(key), reply);
  return reply;
}

SemanticReply LlmSemanticExecutor::derive_column(const Table& t, std::string_view new_column,
                                                 std::string_view description) const {
  return ask(t, kDerive, new_column, description);
}

SemanticReply LlmSemanticExecutor::rewrite_column(const Table& t, std::string_view column,
                                                  std::string_view description) const {
  return ask(t, kRewrite, column, description);
}

}  // namespace tableprep
