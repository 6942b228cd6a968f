#include "tableprep/rollback.hpp"

#include "tableprep/error.hpp"
#include "tableprep/llm.hpp"

#include <algorithm>
#include <cctype>

namespace tableprep {

using json = nlohmann::json;

bool detect_no_data(std::string_view response) {
  std::string folded;
  folded.reserve(response.size());
  bool pending_space = false;
  for (unsigned char c : response) {
    if (std::isspace(c)) {
      pending_space = !folded.empty();
      continue;
    }
    if (pending_space) folded.push_back(' ');
    pending_space = false;
    folded.push_back(static_cast<char>(std::tolower(c)));
  }
  return folded.find("no data available") != std::string::npos;
}

// ---------------------------------------------------------------------------
// QA clients

std::string_view qa_system_prompt() {
  return "You answer questions about a table. Use only information in the table. Reply with the "
         "answer only; separate multiple answers with \", \". If the table does not contain the "
         "information needed to answer, reply exactly: No data available";
}

ChatQaClient::ChatQaClient(std::shared_ptr<ChatClient> client) : client_(std::move(client)) {}

std::string ChatQaClient::ask(std::string_view question, std::string_view table_text) {
  std::vector<ChatMessage> messages = {
      {"system", std::string(qa_system_prompt())},
      {"user", "Table:\n" + std::string(table_text) + "\n\nQuestion: " + std::string(question) +
                   "\nAnswer:"}};
  return client_->complete(messages);
}

void ScriptedQaClient::add(std::string question, std::string digest, std::string response) {
  std::lock_guard lock(mutex_);
  responses_[{std::move(question), std::move(digest)}] = std::move(response);
}

std::string ScriptedQaClient::ask(std::string_view question, std::string_view table_text) {
  std::lock_guard lock(mutex_);
  ++calls_;
  const std::string q(question);
  if (auto it = responses_.find({q, text_digest(table_text)}); it != responses_.end()) {
    return it->second;
  }
  if (auto it = responses_.find({q, "*"}); it != responses_.end()) return it->second;
  return fallback_;
}

std::size_t ScriptedQaClient::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::vector<std::string> markdown_cells(std::string_view table_text) {
  std::vector<std::string> cells;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < table_text.size()) {
    auto end = table_text.find('\n', pos);
    if (end == std::string_view::npos) end = table_text.size();
    const auto line = table_text.substr(pos, end - pos);
    pos = end + 1;
    if (line_no++ < 2 || !line.starts_with('|')) continue;

    std::string cell;
    for (std::size_t i = 1; i < line.size(); ++i) {
      const char c = line[i];
      if (c == '\\' && i + 1 < line.size() && line[i + 1] == '|') {
        cell.push_back('|');
        ++i;
      } else if (c == '|') {
        // strip the single padding space on each side
        std::string_view v(cell);
        if (v.starts_with(' ')) v.remove_prefix(1);
        if (v.ends_with(' ')) v.remove_suffix(1);
        std::string text(v);
        for (std::size_t br = text.find("<br>"); br != std::string::npos; br = text.find("<br>", br)) {
          text.replace(br, 4, "\n");
        }
        cells.push_back(std::move(text));
        cell.clear();
      } else {
        cell.push_back(c);
      }
    }
  }
  return cells;
}

LookupQaClient::LookupQaClient(std::map<std::string, Entry> entries)
    : entries_(entries.begin(), entries.end()) {}

LookupQaClient LookupQaClient::from_json(const json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::ConfigError, "lookup QA script must map questions to entries");
  }
  std::map<std::string, Entry> entries;
  for (const auto& [question, e] : doc.items()) {
    if (!e.is_object() || !e.contains("answer")) {
      throw Error(ErrorCode::ConfigError, "lookup QA entry for \"" + question + "\" needs \"answer\"");
    }
    Entry entry;
    entry.answer = e.at("answer").get<std::string>();
    entry.evidence = e.value("evidence", std::vector<std::string>{entry.answer});
    if (e.contains("capacity")) entry.capacity = e.at("capacity").get<std::size_t>();
    entry.distractor = e.value("distractor", entry.distractor);
    entries.emplace(question, std::move(entry));
  }
  return LookupQaClient(std::move(entries));
}

std::string LookupQaClient::ask(std::string_view question, std::string_view table_text) {
  auto it = entries_.find(question);
  if (it == entries_.end()) return "No data available";
  const Entry& e = it->second;
  const auto cells = markdown_cells(table_text);
  const bool has_all = std::all_of(e.evidence.begin(), e.evidence.end(), [&](const std::string& ev) {
    return std::find(cells.begin(), cells.end(), ev) != cells.end();
  });
  if (!has_all) return "No data available";
  if (e.capacity && cells.size() > *e.capacity) return e.distractor;
  return e.answer;
}

// ---------------------------------------------------------------------------
// Rollback

RollbackResult answer_with_rollback(std::string_view question, const Table& t, const Pipeline& p,
                                    QaClient& qa, const SemanticExecutor& ex,
                                    const RollbackOptions& options) {
  RollbackResult result;
  result.trace = execute(p, t, ex);

  auto submit = [&](int state, const Table& table) {
    result.tables_tried.push_back({state, table.row_count(), table.column_count()});
    ++result.qa_calls;
    try {
      result.answer = qa.ask(question, serialize_markdown(table));
    } catch (const std::exception& e) {
      throw QaTransportError(state, e.what());
    }
    result.state_used = state;
    result.submitted = table;
    result.answered = !detect_no_data(result.answer);
    return result.answered;
  };

  if (submit(1, result.trace.final_table)) return result;

  if (p.empty() && options.short_circuit_empty_pipeline) {
    // States 2 and 3 would resubmit the same table.
    result.short_circuited = true;
    result.state_used = 3;
    return result;
  }

  // op_1 output from the State-1 trace; a failed op_1 leaves the original.
  const Table& first_only = p.empty() ? t : result.trace.steps.front().table_after;
  if (submit(2, first_only)) return result;

  submit(3, t);
  return result;
}

}  // namespace tableprep
