#include "tableprep/table.hpp"

#include "tableprep/error.hpp"

#include <cstdint>
#include <cstdio>
#include <unordered_set>

namespace tableprep {

using json = nlohmann::json;

Value Value::from_cell_text(std::string_view raw) {
  if (raw.empty()) {
    return Value();
  }
  if (auto d = Decimal::parse(raw)) {
    return Value(std::move(*d));
  }
  return Value(std::string(raw));
}

std::string Value::render() const {
  if (is_null()) return {};
  if (is_text()) return as_text();
  return as_number().to_string();
}

Table::Table(std::vector<std::string> columns, std::vector<Row> rows)
    : columns_(std::move(columns)), rows_(std::move(rows)) {
  std::unordered_set<std::string> seen;
  for (const auto& name : columns_) {
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::DuplicateColumn, "duplicate column \"" + name + "\"");
    }
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (rows_[i].size() != columns_.size()) {
      throw Error(ErrorCode::RaggedRow, "row " + std::to_string(i) + " has " +
                                            std::to_string(rows_[i].size()) + " cells, expected " +
                                            std::to_string(columns_.size()));
    }
  }
}

std::optional<std::size_t> Table::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == name) return i;
  }
  return std::nullopt;
}

namespace {

// RFC-4180 record splitter. Blank lines are skipped.
std::vector<std::vector<std::string>> split_csv(std::string_view in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;  // distinguishes an empty line from a line with one empty field

  auto end_record = [&] {
    if (field_started || !record.empty()) {
      record.push_back(std::move(field));
      records.push_back(std::move(record));
    }
    record.clear();
    field.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < in.size(); ++i) {
    const char c = in[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < in.size() && in[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < in.size() && in[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) {
    throw Error(ErrorCode::MalformedInput, "unterminated quoted field");
  }
  end_record();
  return records;
}

}  // namespace

Table load_csv(std::string_view bytes) {
  if (bytes.starts_with("\xEF\xBB\xBF")) {
    bytes.remove_prefix(3);
  }
  auto records = split_csv(bytes);
  if (records.empty()) {
    throw Error(ErrorCode::EmptyInput, "CSV input has no header row");
  }
  std::vector<std::string> header = std::move(records.front());
  std::vector<Row> rows;
  rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size()) {
      throw Error(ErrorCode::RaggedRow, "row " + std::to_string(r - 1) + " has " +
                                            std::to_string(records[r].size()) +
                                            " cells, expected " + std::to_string(header.size()));
    }
    Row row;
    row.reserve(header.size());
    for (const auto& cell : records[r]) {
      row.push_back(Value::from_cell_text(cell));
    }
    rows.push_back(std::move(row));
  }
  return Table(std::move(header), std::move(rows));
}

namespace {

std::string cell_string(const json& cell) {
  if (cell.is_string()) return cell.get<std::string>();
  if (cell.is_null()) return {};
  if (cell.is_boolean()) return cell.get<bool>() ? "true" : "false";
  if (cell.is_number_integer() || cell.is_number_unsigned()) return cell.dump();
  if (cell.is_number_float()) {
    if (auto d = Decimal::from_double(cell.get<double>())) return d->to_string();
  }
  throw Error(ErrorCode::MalformedInput, "table cells must be scalars");
}

}  // namespace

Table load_json_table(const json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::MalformedInput, "table must be a JSON object");
  }
  for (const char* key : {"header", "rows"}) {
    if (!doc.contains(key)) {
      throw Error(ErrorCode::MissingKey, std::string("table is missing \"") + key + "\"");
    }
    if (!doc.at(key).is_array()) {
      throw Error(ErrorCode::MalformedInput, std::string("\"") + key + "\" must be an array");
    }
  }
  std::vector<std::string> header;
  for (const auto& h : doc.at("header")) {
    if (!h.is_string()) {
      throw Error(ErrorCode::MalformedInput, "header entries must be strings");
    }
    header.push_back(h.get<std::string>());
  }
  std::vector<Row> rows;
  const auto& raw_rows = doc.at("rows");
  for (std::size_t r = 0; r < raw_rows.size(); ++r) {
    const auto& raw = raw_rows[r];
    if (!raw.is_array()) {
      throw Error(ErrorCode::MalformedInput, "row " + std::to_string(r) + " is not an array");
    }
    if (raw.size() != header.size()) {
      throw Error(ErrorCode::RaggedRow, "row " + std::to_string(r) + " has " +
                                            std::to_string(raw.size()) + " cells, expected " +
                                            std::to_string(header.size()));
    }
    Row row;
    row.reserve(raw.size());
    for (const auto& cell : raw) {
      row.push_back(Value::from_cell_text(cell_string(cell)));
    }
    rows.push_back(std::move(row));
  }
  return Table(std::move(header), std::move(rows));
}

json serialize_json(const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows()) {
    json out = json::array();
    for (const auto& cell : row) out.push_back(cell.render());
    rows.push_back(std::move(out));
  }
  return json{{"header", t.columns()}, {"rows", std::move(rows)}};
}

namespace {

std::string markdown_cell(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '|') {
      out += "\\|";
    } else if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') {
      out += "<br>";
      ++i;
    } else if (c == '\n' || c == '\r') {
      out += "<br>";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

template <typename Range, typename Render>
std::string markdown_line(const Range& cells, Render render) {
  std::string line = "|";
  for (const auto& cell : cells) {
    line += " " + markdown_cell(render(cell)) + " |";
  }
  return line;
}

}  // namespace

std::string serialize_markdown(const Table& t, std::optional<std::size_t> max_rows) {
  std::string out = markdown_line(t.columns(), [](const std::string& s) { return s; });
  out += "\n|";
  for (std::size_t i = 0; i < t.column_count(); ++i) out += " --- |";

  const std::size_t shown = max_rows ? std::min(*max_rows, t.row_count()) : t.row_count();
  for (std::size_t r = 0; r < shown; ++r) {
    out += "\n" + markdown_line(t.rows()[r], [](const Value& v) { return v.render(); });
  }
  if (shown < t.row_count()) {
    out += "\n... (" + std::to_string(t.row_count() - shown) + " rows omitted)";
  }
  return out;
}

std::size_t cell_count(const Table& t) { return t.row_count() * t.column_count(); }

std::string table_digest(const Table& t) { return text_digest(serialize_markdown(t)); }

std::string text_digest(std::string_view text) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace tableprep
