#pragma once

#include "tableprep/decimal.hpp"

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tableprep {

struct Null {
  friend bool operator==(Null, Null) { return true; }
};

/// A single table cell: Null, Text, or an exact Number.
class Value {
 public:
  Value() = default;
  static Value text(std::string s) { return Value(std::move(s)); }
  static Value number(Decimal d) { return Value(std::move(d)); }

  /// Ingestion typing rule: "" -> Null, decimal literal -> Number,
  /// anything else -> Text (verbatim, no trimming).
  static Value from_cell_text(std::string_view raw);

  bool is_null() const { return std::holds_alternative<Null>(v_); }
  bool is_text() const { return std::holds_alternative<std::string>(v_); }
  bool is_number() const { return std::holds_alternative<Decimal>(v_); }

  const std::string& as_text() const { return std::get<std::string>(v_); }
  const Decimal& as_number() const { return std::get<Decimal>(v_); }

  /// String rendering used for matching and display. Null renders as "".
  std::string render() const;

  friend bool operator==(const Value&, const Value&) = default;

 private:
  explicit Value(std::string s) : v_(std::move(s)) {}
  explicit Value(Decimal d) : v_(std::move(d)) {}

  std::variant<Null, std::string, Decimal> v_;
};

using Row = std::vector<Value>;

/// Immutable table: unique column names, rectangular rows.
class Table {
 public:
  Table() = default;

  /// Validates uniqueness of names and row width.
  Table(std::vector<std::string> columns, std::vector<Row> rows);

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<Row>& rows() const { return rows_; }
  std::size_t row_count() const { return rows_.size(); }
  std::size_t column_count() const { return columns_.size(); }

  std::optional<std::size_t> column_index(std::string_view name) const;

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::vector<std::string> columns_;
  std::vector<Row> rows_;
};

Table load_csv(std::string_view bytes);
Table load_json_table(const nlohmann::json& doc);

/// {"header": [...], "rows": [[...]]} with every cell as its rendered string.
nlohmann::json serialize_json(const Table& t);

std::string serialize_markdown(const Table& t, std::optional<std::size_t> max_rows = std::nullopt);

std::size_t cell_count(const Table& t);

/// Stable 64-bit FNV-1a digest of `text`, as 16 hex digits.
std::string text_digest(std::string_view text);

/// text_digest of the full markdown serialization.
std::string table_digest(const Table& t);

}  // namespace tableprep
