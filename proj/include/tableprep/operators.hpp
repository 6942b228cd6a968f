#pragma once

#include "tableprep/table.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tableprep {

enum class OpKind { Select, Filter, SortBy, GroupBy, AddColumn, CleanColumn };
enum class Comparator { Eq, Ne, Gt, Lt, Ge, Le };
enum class SortOrder { Asc, Desc };

/// Wire name ("select", "sort_by", ...).
std::string_view to_string(OpKind kind);
std::string_view to_string(Comparator cmp);
std::string_view to_string(SortOrder order);

struct SelectParams {
  std::vector<std::string> columns;
  friend bool operator==(const SelectParams&, const SelectParams&) = default;
};

struct FilterParams {
  std::string column;
  Comparator cmp = Comparator::Eq;
  Value value;
  friend bool operator==(const FilterParams&, const FilterParams&) = default;
};

struct SortByParams {
  std::string column;
  SortOrder order = SortOrder::Asc;
  std::optional<std::size_t> k;
  friend bool operator==(const SortByParams&, const SortByParams&) = default;
};

struct GroupByParams {
  std::string column;
  friend bool operator==(const GroupByParams&, const GroupByParams&) = default;
};

struct AddColumnParams {
  std::string new_column;
  std::string description;
  friend bool operator==(const AddColumnParams&, const AddColumnParams&) = default;
};

struct CleanColumnParams {
  std::string column;
  std::string description;
  friend bool operator==(const CleanColumnParams&, const CleanColumnParams&) = default;
};

using OperatorParams = std::variant<SelectParams, FilterParams, SortByParams, GroupByParams,
                                    AddColumnParams, CleanColumnParams>;

struct OperatorSpec {
  OperatorParams params;
  std::optional<std::string> explanation;

  OpKind kind() const { return static_cast<OpKind>(params.index()); }
  bool is_semantic() const { return kind() == OpKind::AddColumn || kind() == OpKind::CleanColumn; }

  friend bool operator==(const OperatorSpec&, const OperatorSpec&) = default;
};

/// Ordered operator sequence; empty is the identity pipeline.
using Pipeline = std::vector<OperatorSpec>;

OperatorSpec parse_operator(const nlohmann::json& doc);

/// Throws PipelineParseError carrying the offending index.
Pipeline parse_pipeline(const nlohmann::json& doc);

nlohmann::json to_json(const OperatorSpec& spec);
nlohmann::json to_json(const Pipeline& pipeline);

/// Merge identity of an operator: kind and parameters, explanation
/// excluded, numeric-looking values canonicalized as numbers, select
/// columns sorted.
std::string canonical_key(const OperatorSpec& spec);

Table exec_select(const Table& t, const std::vector<std::string>& columns);
Table exec_filter(const Table& t, std::string_view column, Comparator cmp, const Value& value);
Table exec_sort_by(const Table& t, std::string_view column, SortOrder order,
                   std::optional<std::size_t> k = std::nullopt);
Table exec_group_by(const Table& t, std::string_view column);

/// Predicate used by exec_filter, exposed for testing.
bool filter_matches(const Value& cell, Comparator cmp, const Value& value);

/// Dispatches a structured operator. Semantic specs throw BadParamType.
Table exec_structured(const OperatorSpec& spec, const Table& t);

}  // namespace tableprep
