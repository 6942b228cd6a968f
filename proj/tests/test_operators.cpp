#include "oracles.hpp"

#include "tableprep/error.hpp"
#include "tableprep/operators.hpp"

#include <doctest.h>

#include <random>

using namespace tableprep;
using nlohmann::json;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::ConfigError;
}

OperatorSpec op(const char* text) { return parse_operator(json::parse(text)); }

std::vector<std::string> column_values(const Table& t, std::size_t c) {
  std::vector<std::string> out;
  for (const auto& r : t.rows()) out.push_back(r[c].render());
  return out;
}

}  // namespace

TEST_CASE("parse_operator") {
  const auto f = op(R"({"operation":"filter","column":"Country","cmp":"==","value":"USA"})");
  REQUIRE(f.kind() == OpKind::Filter);
  const auto& fp = std::get<FilterParams>(f.params);
  CHECK(fp.column == "Country");
  CHECK(fp.cmp == Comparator::Eq);
  CHECK(fp.value == Value::text("USA"));

  const auto s = op(R"({"operation":"sort_by","column":"Score","order":"desc"})");
  CHECK(std::get<SortByParams>(s.params).order == SortOrder::Desc);
  CHECK_FALSE(std::get<SortByParams>(s.params).k);

  CHECK(code_of([] { op(R"({"operation":"explode"})"); }) == ErrorCode::UnknownOperator);
  CHECK(code_of([] { op(R"({"operation":"select","columns":[]})"); }) == ErrorCode::BadParamType);
  CHECK(code_of([] { op(R"({"operation":"select"})"); }) == ErrorCode::MissingParam);
  CHECK(code_of([] { op(R"({"operation":"filter","column":"a","cmp":"~","value":1})"); }) ==
        ErrorCode::BadParamType);
  CHECK(code_of([] { op(R"({"operation":"sort_by","column":"a","order":"up"})"); }) == ErrorCode::BadParamType);
  CHECK(code_of([] { op(R"({"operation":"sort_by","column":"a","order":"asc","k":0})"); }) ==
        ErrorCode::BadParamType);
  CHECK(code_of([] { op(R"({"operation":"add_column","new_column":"g","description":""})"); }) ==
        ErrorCode::BadParamType);
  CHECK(code_of([] { op(R"({"column":"a"})"); }) == ErrorCode::MissingParam);

  const auto n = op(R"({"operation":"filter","column":"x","cmp":">","value":5})");
  CHECK(std::get<FilterParams>(n.params).value.is_number());
  const auto g = op(R"({"operation":"group_by","column":"Team","explanation":"count teams"})");
  CHECK(g.explanation == "count teams");
}

TEST_CASE("parse_pipeline and schema round trip") {
  CHECK(parse_pipeline(json::array()).empty());
  const auto p = parse_pipeline(json::parse(
      R"([{"operation":"select","columns":["a","b"]},{"operation":"filter","column":"a","cmp":"!=","value":"x"}])"));
  REQUIRE(p.size() == 2);
  CHECK(p[0].kind() == OpKind::Select);
  CHECK(p[1].kind() == OpKind::Filter);
  CHECK(parse_pipeline(to_json(p)) == p);

  try {
    parse_pipeline(json::parse(R"([{"operation":"select","columns":["a"]},{"operation":"nope"}])"));
    FAIL("expected PipelineParseError");
  } catch (const PipelineParseError& e) {
    CHECK(e.index() == 1);
    CHECK(e.code() == ErrorCode::UnknownOperator);
  }
  CHECK(code_of([] { parse_pipeline(json::object()); }) == ErrorCode::BadParamType);

  const auto all = json::parse(R"([
    {"operation":"select","columns":["a"],"explanation":"why"},
    {"operation":"filter","column":"a","cmp":"<=","value":2.5},
    {"operation":"sort_by","column":"a","order":"asc","k":3},
    {"operation":"group_by","column":"a"},
    {"operation":"add_column","new_column":"g","description":"infer g from a"},
    {"operation":"clean_column","column":"a","description":"tidy"}])");
  CHECK(to_json(parse_pipeline(all)) == all);
}

TEST_CASE("canonical_key") {
  const auto a = op(R"({"operation":"filter","column":"Country","cmp":"==","value":"USA"})");
  const auto b = op(R"({"operation":"filter","column":"Country","cmp":"==","value":"USA","explanation":"x"})");
  CHECK(canonical_key(a) == canonical_key(a));
  CHECK(canonical_key(a) == canonical_key(b));
  CHECK(canonical_key(op(R"({"operation":"filter","column":"x","cmp":">","value":5})")) ==
        canonical_key(op(R"({"operation":"filter","column":"x","cmp":">","value":"5"})")));
  CHECK(canonical_key(op(R"({"operation":"filter","column":"x","cmp":">","value":5})")) !=
        canonical_key(op(R"({"operation":"filter","column":"x","cmp":">=","value":5})")));
  CHECK(canonical_key(op(R"({"operation":"select","columns":["a","b"]})")) ==
        canonical_key(op(R"({"operation":"select","columns":["b","a"]})")));
  CHECK(canonical_key(op(R"({"operation":"filter","column":"x","cmp":"==","value":null})")) !=
        canonical_key(op(R"({"operation":"filter","column":"x","cmp":"==","value":""})")));
}

TEST_CASE("exec_select") {
  const auto t = load_csv("a,b,c\n1,2,3\n4,5,6");
  const auto s = exec_select(t, {"c", "a"});
  CHECK(s.columns() == std::vector<std::string>{"a", "c"});
  CHECK(s.row_count() == 2);
  CHECK(exec_select(load_csv("a,b\n1,2"), {"a", "ghost"}).columns() == std::vector<std::string>{"a"});
  CHECK(code_of([&] { exec_select(t, {"ghost"}); }) == ErrorCode::NoValidColumns);
}

TEST_CASE("exec_filter") {
  const auto t = load_csv("Country,v\nUSA,1\nUK,2\nUSA,3");
  const auto f = exec_filter(t, "Country", Comparator::Eq, Value::text("USA"));
  CHECK(f.row_count() == 2);
  CHECK(f.columns() == t.columns());

  const auto x = load_csv("x\n3\n7\n");
  const auto x_null = Table({"x"}, {{Value::from_cell_text("3")}, {Value::from_cell_text("7")}, {Value()}});
  const auto gt = exec_filter(x_null, "x", Comparator::Gt, Value::number(Decimal(5)));
  REQUIRE(gt.row_count() == 1);
  CHECK(gt.rows()[0][0].render() == "7");

  CHECK(exec_filter(load_csv("x\n"), "x", Comparator::Eq, Value::text("q")).row_count() == 0);
  CHECK(code_of([&] { exec_filter(t, "ghost", Comparator::Eq, Value()); }) == ErrorCode::ColumnNotFound);

  // a numeric string on the value side compares numerically
  CHECK(exec_filter(x, "x", Comparator::Ge, Value::text("7.0")).row_count() == 1);
  // text against number falls back to string comparison
  CHECK(exec_filter(load_csv("x\n10\nab"), "x", Comparator::Lt, Value::text("b")).row_count() == 2);
  CHECK(exec_filter(x_null, "x", Comparator::Ne, Value::text("3")).row_count() == 2);
  CHECK(exec_filter(x_null, "x", Comparator::Eq, Value()).row_count() == 0);
  // a non-null cell differs from a null value; the null cell does not
  CHECK(exec_filter(x_null, "x", Comparator::Ne, Value()).row_count() == 2);
}

TEST_CASE("exec_sort_by") {
  const auto t = load_csv("v\n2\n9\n5");
  const auto top = exec_sort_by(t, "v", SortOrder::Desc, 1);
  REQUIRE(top.row_count() == 1);
  CHECK(top.rows()[0][0].render() == "9");

  const auto sorted = load_csv("v,w\n1,a\n2,b\n2,c\n3,d");
  CHECK(exec_sort_by(sorted, "v", SortOrder::Asc) == sorted);

  const Table nulls({"v"}, {{Value::from_cell_text("5")}, {Value()}, {Value::from_cell_text("1")}});
  CHECK(column_values(exec_sort_by(nulls, "v", SortOrder::Asc), 0) == std::vector<std::string>{"1", "5", ""});
  CHECK(column_values(exec_sort_by(nulls, "v", SortOrder::Desc), 0) == std::vector<std::string>{"5", "1", ""});

  // numbers compare numerically, mixed columns as strings
  CHECK(column_values(exec_sort_by(load_csv("v\n10\n9\n100"), "v", SortOrder::Asc), 0) ==
        std::vector<std::string>{"9", "10", "100"});
  CHECK(column_values(exec_sort_by(load_csv("v\n10\n9\nb"), "v", SortOrder::Asc), 0) ==
        std::vector<std::string>{"10", "9", "b"});
  CHECK(exec_sort_by(t, "v", SortOrder::Asc, 10).row_count() == 3);
}

TEST_CASE("exec_group_by") {
  const auto g = exec_group_by(load_csv("Team,p\nA,1\nB,2\nA,3"), "Team");
  CHECK(g.columns() == std::vector<std::string>{"Team", "count"});
  REQUIRE(g.row_count() == 2);
  CHECK(g.rows()[0][0].render() == "A");
  CHECK(g.rows()[0][1].render() == "2");
  CHECK(g.rows()[1][0].render() == "B");
  CHECK(g.rows()[1][1].render() == "1");

  const auto empty = exec_group_by(load_csv("Team,p\n"), "Team");
  CHECK(empty.row_count() == 0);
  CHECK(empty.column_count() == 2);

  CHECK(exec_group_by(load_csv("count\n1\n1"), "count").columns() == std::vector<std::string>{"count", "count_"});
}

TEST_CASE("exec_structured rejects semantic operators") {
  const auto t = load_csv("a\n1");
  CHECK(code_of([&] { exec_structured(op(R"({"operation":"clean_column","column":"a","description":"d"})"), t); }) ==
        ErrorCode::BadParamType);
  CHECK(exec_structured(op(R"({"operation":"select","columns":["a"]})"), t) == t);
}

TEST_CASE("structured operators agree with the naive reference") {
  std::mt19937_64 rng(1234);
  const std::vector<Comparator> cmps = {Comparator::Eq, Comparator::Ne, Comparator::Gt,
                                        Comparator::Lt, Comparator::Ge, Comparator::Le};
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = oracle::random_table(rng);
    const auto col = std::uniform_int_distribution<std::size_t>(0, t.column_count() - 1)(rng);
    const auto& name = t.columns()[col];

    const auto cmp = cmps[static_cast<std::size_t>(trial) % cmps.size()];
    const std::string raw = oracle::random_cell(rng);
    const Value value = trial % 2 ? Value::from_cell_text(raw) : Value::text(raw);
    CHECK(exec_filter(t, name, cmp, value) == oracle::filter(t, col, cmp, value));

    const bool desc = trial % 3 == 0;
    std::optional<std::size_t> k;
    if (trial % 4 == 0) k = static_cast<std::size_t>(trial % 5 + 1);
    CHECK(exec_sort_by(t, name, desc ? SortOrder::Desc : SortOrder::Asc, k) == oracle::sort_by(t, col, desc, k));

    const auto g = exec_group_by(t, name);
    CHECK(g == oracle::group_by(t, col));
    Rational total = 0;
    for (const auto& r : g.rows()) total += r[1].as_number().to_rational();
    CHECK(total == Rational(static_cast<long long>(t.row_count())));

    std::vector<std::string> want = {name, "ghost"};
    CHECK(exec_select(t, want) == *oracle::select(t, want));
  }
}
