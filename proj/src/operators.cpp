#include "tableprep/operators.hpp"

#include "tableprep/error.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace tableprep {

using json = nlohmann::json;

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Select: return "select";
    case OpKind::Filter: return "filter";
    case OpKind::SortBy: return "sort_by";
    case OpKind::GroupBy: return "group_by";
    case OpKind::AddColumn: return "add_column";
    case OpKind::CleanColumn: return "clean_column";
  }
  return "?";
}

std::string_view to_string(Comparator cmp) {
  switch (cmp) {
    case Comparator::Eq: return "==";
    case Comparator::Ne: return "!=";
    case Comparator::Gt: return ">";
    case Comparator::Lt: return "<";
    case Comparator::Ge: return ">=";
    case Comparator::Le: return "<=";
  }
  return "?";
}

std::string_view to_string(SortOrder order) { return order == SortOrder::Asc ? "asc" : "desc"; }

// ---------------------------------------------------------------------------
// Parsing

namespace {

[[noreturn]] void missing(std::string_view op, std::string_view param) {
  throw Error(ErrorCode::MissingParam,
              std::string(op) + ": missing parameter \"" + std::string(param) + "\"");
}

[[noreturn]] void bad_type(std::string_view op, std::string_view param, std::string_view want) {
  throw Error(ErrorCode::BadParamType, std::string(op) + ": parameter \"" + std::string(param) +
                                           "\" must be " + std::string(want));
}

const json& require(const json& doc, std::string_view op, const char* param) {
  auto it = doc.find(param);
  if (it == doc.end() || it->is_null()) missing(op, param);
  return *it;
}

std::string require_string(const json& doc, std::string_view op, const char* param,
                           bool non_empty = false) {
  const auto& v = require(doc, op, param);
  if (!v.is_string()) bad_type(op, param, "a string");
  auto s = v.get<std::string>();
  if (non_empty && s.empty()) bad_type(op, param, "a non-empty string");
  return s;
}

Value scalar_value(const json& v, std::string_view op) {
  if (v.is_null()) return Value();
  if (v.is_string()) {
    // keep the literal text; numeric comparison happens at evaluation time
    return Value::text(v.get<std::string>());
  }
  if (v.is_boolean()) return Value::text(v.get<bool>() ? "true" : "false");
  if (v.is_number_integer() || v.is_number_unsigned()) {
    return Value::number(*Decimal::parse(v.dump()));
  }
  if (v.is_number_float()) {
    if (auto d = Decimal::from_double(v.get<double>())) return Value::number(*d);
  }
  bad_type(op, "value", "a scalar");
}

Comparator parse_comparator(const std::string& s) {
  static const std::map<std::string, Comparator, std::less<>> table = {
      {"==", Comparator::Eq}, {"!=", Comparator::Ne}, {">", Comparator::Gt},
      {"<", Comparator::Lt},  {">=", Comparator::Ge}, {"<=", Comparator::Le}};
  auto it = table.find(s);
  if (it == table.end()) bad_type("filter", "cmp", "one of ==, !=, >, <, >=, <=");
  return it->second;
}

}  // namespace

OperatorSpec parse_operator(const json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::BadParamType, "operator must be a JSON object");
  }
  auto name_it = doc.find("operation");
  if (name_it == doc.end()) missing("operator", "operation");
  if (!name_it->is_string()) bad_type("operator", "operation", "a string");
  const auto name = name_it->get<std::string>();

  OperatorSpec spec;
  if (name == "select") {
    const auto& cols = require(doc, name, "columns");
    if (!cols.is_array() || cols.empty()) bad_type(name, "columns", "a non-empty list of names");
    SelectParams p;
    for (const auto& c : cols) {
      if (!c.is_string()) bad_type(name, "columns", "a non-empty list of names");
      p.columns.push_back(c.get<std::string>());
    }
    spec.params = std::move(p);
  } else if (name == "filter") {
    FilterParams p;
    p.column = require_string(doc, name, "column");
    p.cmp = parse_comparator(require_string(doc, name, "cmp"));
    auto v = doc.find("value");
    if (v == doc.end()) missing(name, "value");
    p.value = scalar_value(*v, name);
    spec.params = std::move(p);
  } else if (name == "sort_by") {
    SortByParams p;
    p.column = require_string(doc, name, "column");
    const auto order = require_string(doc, name, "order");
    if (order == "asc") {
      p.order = SortOrder::Asc;
    } else if (order == "desc") {
      p.order = SortOrder::Desc;
    } else {
      bad_type(name, "order", "\"asc\" or \"desc\"");
    }
    if (auto k = doc.find("k"); k != doc.end() && !k->is_null()) {
      if (!k->is_number_integer() || k->get<long long>() < 1) bad_type(name, "k", "an integer >= 1");
      p.k = static_cast<std::size_t>(k->get<long long>());
    }
    spec.params = std::move(p);
  } else if (name == "group_by") {
    spec.params = GroupByParams{require_string(doc, name, "column")};
  } else if (name == "add_column") {
    spec.params = AddColumnParams{require_string(doc, name, "new_column"),
                                  require_string(doc, name, "description", true)};
  } else if (name == "clean_column") {
    spec.params = CleanColumnParams{require_string(doc, name, "column"),
                                    require_string(doc, name, "description", true)};
  } else {
    throw Error(ErrorCode::UnknownOperator, "unknown operator \"" + name + "\"");
  }

  if (auto e = doc.find("explanation"); e != doc.end() && e->is_string()) {
    spec.explanation = e->get<std::string>();
  }
  return spec;
}

Pipeline parse_pipeline(const json& doc) {
  if (!doc.is_array()) {
    throw Error(ErrorCode::BadParamType, "pipeline must be a JSON array");
  }
  Pipeline out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      out.push_back(parse_operator(doc[i]));
    } catch (const Error& e) {
      throw PipelineParseError(i, e);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization and identity

namespace {

json value_json(const Value& v) {
  if (v.is_null()) return nullptr;
  if (v.is_text()) return v.as_text();
  return json::parse(v.as_number().to_string());
}

// Text that reads as a decimal is canonicalized as a number.
json canonical_value(const Value& v) {
  if (v.is_null()) return json{{"null", true}};
  if (v.is_number()) return json{{"n", v.as_number().to_string()}};
  if (auto d = Decimal::parse(v.as_text())) return json{{"n", d->to_string()}};
  return json{{"t", v.as_text()}};
}

}  // namespace

json to_json(const OperatorSpec& spec) {
  json out = json::object();
  out["operation"] = std::string(to_string(spec.kind()));
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SelectParams>) {
          out["columns"] = p.columns;
        } else if constexpr (std::is_same_v<T, FilterParams>) {
          out["column"] = p.column;
          out["cmp"] = std::string(to_string(p.cmp));
          out["value"] = value_json(p.value);
        } else if constexpr (std::is_same_v<T, SortByParams>) {
          out["column"] = p.column;
          out["order"] = std::string(to_string(p.order));
          if (p.k) out["k"] = *p.k;
        } else if constexpr (std::is_same_v<T, GroupByParams>) {
          out["column"] = p.column;
        } else if constexpr (std::is_same_v<T, AddColumnParams>) {
          out["new_column"] = p.new_column;
          out["description"] = p.description;
        } else {
          out["column"] = p.column;
          out["description"] = p.description;
        }
      },
      spec.params);
  if (spec.explanation) out["explanation"] = *spec.explanation;
  return out;
}

json to_json(const Pipeline& pipeline) {
  json out = json::array();
  for (const auto& op : pipeline) out.push_back(to_json(op));
  return out;
}

std::string canonical_key(const OperatorSpec& spec) {
  json key = to_json(spec);
  key.erase("explanation");
  if (const auto* f = std::get_if<FilterParams>(&spec.params)) {
    key["value"] = canonical_value(f->value);
  } else if (const auto* s = std::get_if<SelectParams>(&spec.params)) {
    std::set<std::string> sorted(s->columns.begin(), s->columns.end());
    key["columns"] = sorted;
  }
  // json objects are key-sorted, so dump() is canonical
  return key.dump();
}

// ---------------------------------------------------------------------------
// Structured execution

namespace {

std::size_t require_column(const Table& t, std::string_view column) {
  auto idx = t.column_index(column);
  if (!idx) {
    throw Error(ErrorCode::ColumnNotFound, "column \"" + std::string(column) + "\" not found");
  }
  return *idx;
}

std::optional<Decimal> numeric_view(const Value& v) {
  if (v.is_number()) return v.as_number();
  if (v.is_text()) return Decimal::parse(v.as_text());
  return std::nullopt;
}

template <typename T>
bool apply_cmp(Comparator cmp, const T& a, const T& b) {
  switch (cmp) {
    case Comparator::Eq: return a == b;
    case Comparator::Ne: return a != b;
    case Comparator::Gt: return a > b;
    case Comparator::Lt: return a < b;
    case Comparator::Ge: return a >= b;
    case Comparator::Le: return a <= b;
  }
  return false;
}

}  // namespace

bool filter_matches(const Value& cell, Comparator cmp, const Value& value) {
  if (cell.is_null()) {
    return cmp == Comparator::Ne && !value.is_null();
  }
  if (value.is_null()) {
    return cmp == Comparator::Ne;
  }
  auto lhs = numeric_view(cell);
  auto rhs = numeric_view(value);
  if (lhs && rhs) {
    return apply_cmp(cmp, *lhs, *rhs);
  }
  return apply_cmp(cmp, cell.render(), value.render());
}

Table exec_select(const Table& t, const std::vector<std::string>& columns) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < t.column_count(); ++i) {
    if (std::find(columns.begin(), columns.end(), t.columns()[i]) != columns.end()) {
      keep.push_back(i);
    }
  }
  if (keep.empty()) {
    throw Error(ErrorCode::NoValidColumns, "select: none of the requested columns exist");
  }
  std::vector<std::string> names;
  for (auto i : keep) names.push_back(t.columns()[i]);
  std::vector<Row> rows;
  rows.reserve(t.row_count());
  for (const auto& row : t.rows()) {
    Row out;
    out.reserve(keep.size());
    for (auto i : keep) out.push_back(row[i]);
    rows.push_back(std::move(out));
  }
  return Table(std::move(names), std::move(rows));
}

Table exec_filter(const Table& t, std::string_view column, Comparator cmp, const Value& value) {
  const auto idx = require_column(t, column);
  std::vector<Row> rows;
  for (const auto& row : t.rows()) {
    if (filter_matches(row[idx], cmp, value)) rows.push_back(row);
  }
  return Table(t.columns(), std::move(rows));
}

Table exec_sort_by(const Table& t, std::string_view column, SortOrder order,
                   std::optional<std::size_t> k) {
  const auto idx = require_column(t, column);
  const bool numeric = std::all_of(t.rows().begin(), t.rows().end(), [&](const Row& r) {
    return r[idx].is_null() || r[idx].is_number();
  });

  std::vector<Row> rows = t.rows();
  auto less = [&](const Value& a, const Value& b) {
    if (numeric) return a.as_number() < b.as_number();
    return a.render() < b.render();
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const Row& ra, const Row& rb) {
    const Value& a = ra[idx];
    const Value& b = rb[idx];
    if (a.is_null() || b.is_null()) return !a.is_null() && b.is_null();
    return order == SortOrder::Asc ? less(a, b) : less(b, a);
  });
  if (k && *k < rows.size()) rows.resize(*k);
  return Table(t.columns(), std::move(rows));
}

Table exec_group_by(const Table& t, std::string_view column) {
  const auto idx = require_column(t, column);
  std::vector<Value> keys;
  std::vector<std::size_t> counts;
  for (const auto& row : t.rows()) {
    const Value& v = row[idx];
    auto it = std::find(keys.begin(), keys.end(), v);
    if (it == keys.end()) {
      keys.push_back(v);
      counts.push_back(1);
    } else {
      ++counts[static_cast<std::size_t>(it - keys.begin())];
    }
  }
  const std::string count_name = column == "count" ? "count_" : "count";
  std::vector<Row> rows;
  rows.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    rows.push_back({keys[i], Value::number(Decimal(static_cast<std::int64_t>(counts[i])))});
  }
  return Table({std::string(column), count_name}, std::move(rows));
}

Table exec_structured(const OperatorSpec& spec, const Table& t) {
  return std::visit(
      [&](const auto& p) -> Table {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SelectParams>) {
          return exec_select(t, p.columns);
        } else if constexpr (std::is_same_v<T, FilterParams>) {
          return exec_filter(t, p.column, p.cmp, p.value);
        } else if constexpr (std::is_same_v<T, SortByParams>) {
          return exec_sort_by(t, p.column, p.order, p.k);
        } else if constexpr (std::is_same_v<T, GroupByParams>) {
          return exec_group_by(t, p.column);
        } else {
          throw Error(ErrorCode::BadParamType,
                      std::string(to_string(spec.kind())) + " is a semantic operator");
        }
      },
      spec.params);
}

}  // namespace tableprep
