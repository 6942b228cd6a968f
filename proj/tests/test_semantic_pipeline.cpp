#include "tableprep/error.hpp"
#include "tableprep/pipeline.hpp"
#include "tableprep/semantic.hpp"

#include <doctest.h>

#include <atomic>
#include <stdexcept>

using namespace tableprep;
using nlohmann::json;
using nlohmann::ordered_json;

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

ValueFunction mapping(std::map<std::string, std::string> m) {
  return [m = std::move(m)](const Value& in) -> std::optional<Value> {
    auto it = m.find(in.render());
    if (it == m.end()) return std::nullopt;
    return Value::from_cell_text(it->second);
  };
}

// Returns a fixed reply and counts calls.
class FixedExecutor : public SemanticExecutor {
 public:
  explicit FixedExecutor(std::vector<std::optional<Value>> values) : values_(std::move(values)) {}
  SemanticReply derive_column(const Table&, std::string_view, std::string_view) const override {
    ++calls;
    return {values_, {}};
  }
  SemanticReply rewrite_column(const Table&, std::string_view, std::string_view) const override {
    ++calls;
    return {values_, {}};
  }
  mutable std::atomic<int> calls{0};

 private:
  std::vector<std::optional<Value>> values_;
};

}  // namespace

TEST_CASE("add_column with a mock rule") {
  const MockSemanticExecutor ex({{"infer genders from the column Name", mapping({{"Ada", "F"}, {"Bob", "M"}})}});
  const auto t = load_csv("Name\nAda\nBob");
  const auto r = exec_add_column(t, "Gender", "infer genders from the column Name", ex);
  CHECK(r.table.columns() == std::vector<std::string>{"Name", "Gender"});
  CHECK(r.table.rows()[0][1].render() == "F");
  CHECK(r.table.rows()[1][1].render() == "M");
  CHECK(r.warnings.empty());
  CHECK(code_of([&] { exec_add_column(t, "Name", "infer genders from the column Name", ex); }) ==
        ErrorCode::ColumnExists);
}

TEST_CASE("add_column repairs short and long replies") {
  const auto t = load_csv("a\n1\n2");
  const auto short_reply = exec_add_column(t, "n", "d", FixedExecutor({Value::text("v")}));
  CHECK(short_reply.table.rows()[0][1].render() == "v");
  CHECK(short_reply.table.rows()[1][1].is_null());
  CHECK_FALSE(short_reply.warnings.empty());
  const auto long_reply =
      exec_add_column(t, "n", "d", FixedExecutor({Value::text("x"), Value::text("y"), Value::text("z")}));
  CHECK(long_reply.table.row_count() == 2);
  CHECK_FALSE(long_reply.warnings.empty());
}

TEST_CASE("clean_column") {
  const MockSemanticExecutor ex({{"standardize date format", mapping({{"1 Jan 2020", "2020-01-01"}})}});
  const auto t = load_csv("Date,x\n1 Jan 2020,1\n2020-02-02,2");
  const auto r = exec_clean_column(t, "Date", "please standardize date format", ex);
  CHECK(r.table.rows()[0][0].render() == "2020-01-01");
  CHECK(r.table.rows()[1][0].render() == "2020-02-02");

  const auto none = exec_clean_column(t, "Date", "something else", ex);
  CHECK(none.table == t);
  CHECK_FALSE(none.warnings.empty());

  const auto empty = load_csv("Date\n");
  CHECK(exec_clean_column(empty, "Date", "standardize date format", ex).table == empty);
  CHECK(code_of([&] { exec_clean_column(t, "ghost", "standardize date format", ex); }) ==
        ErrorCode::ColumnNotFound);
}

TEST_CASE("mock executor rules") {
  const auto t = load_csv("Name\nAda");
  SUBCASE("empty rules") {
    const MockSemanticExecutor ex;
    const auto r = exec_add_column(t, "G", "anything", ex);
    CHECK(r.table.rows()[0][1].is_null());
    CHECK(exec_clean_column(t, "Name", "anything", ex).table == t);
  }
  SUBCASE("first registered wins") {
    const MockSemanticExecutor ex({{"gender", mapping({{"Ada", "first"}})}, {"infer gender", mapping({{"Ada", "second"}})}});
    CHECK(exec_add_column(t, "G", "infer gender from Name", ex).table.rows()[0][1].render() == "first");
  }
  SUBCASE("throwing rule") {
    const MockSemanticExecutor ex(
        {{"boom", [](const Value&) -> std::optional<Value> { throw std::runtime_error("rule failed"); }}});
    CHECK(code_of([&] { exec_add_column(t, "G", "boom", ex); }) == ErrorCode::ExecutorFailure);
  }
  SUBCASE("source column is the longest mentioned name") {
    const auto two = load_csv("Name,Full Name\nAda,Ada Lovelace");
    const MockSemanticExecutor ex({{"initials", mapping({{"Ada Lovelace", "AL"}, {"Ada", "A"}})}});
    CHECK(exec_add_column(two, "I", "initials of Full Name", ex).table.rows()[0][2].render() == "AL");
  }
  SUBCASE("from_json keeps registration order") {
    const auto ex = MockSemanticExecutor::from_json(
        ordered_json::parse(R"({"zeta rule": {"Ada": "Z"}, "rule": {"Ada": "R"}})"));
    CHECK(exec_add_column(t, "G", "zeta rule", ex).table.rows()[0][1].render() == "Z");
    const auto arr = MockSemanticExecutor::from_json(
        ordered_json::parse(R"([{"pattern": "rule", "map": {"Ada": "R"}}])"));
    CHECK(exec_add_column(t, "G", "rule", arr).table.rows()[0][1].render() == "R");
  }
}

TEST_CASE("unavailable executor fails") {
  const UnavailableExecutor ex;
  CHECK(code_of([&] { exec_add_column(load_csv("a\n1"), "b", "d", ex); }) == ErrorCode::ExecutorFailure);
}

TEST_CASE("execute") {
  const MockSemanticExecutor ex;
  const auto t = load_csv("a,b\nx,1\ny,2");
  SUBCASE("all ok") {
    const auto p = parse_pipeline(json::parse(
        R"([{"operation":"select","columns":["a"]},{"operation":"filter","column":"a","cmp":"==","value":"x"}])"));
    const auto trace = execute(p, t, ex);
    REQUIRE(trace.steps.size() == 2);
    CHECK(trace.ok_count() == 2);
    CHECK(trace.final_table.row_count() == 1);
    CHECK(trace.steps.back().table_after == trace.final_table);
    CHECK_FALSE(trace.truncated_at);
  }
  SUBCASE("truncation") {
    const auto p = parse_pipeline(json::parse(
        R"([{"operation":"filter","column":"ghost","cmp":"==","value":"x"},{"operation":"sort_by","column":"a","order":"asc"}])"));
    const auto trace = execute(p, t, ex);
    CHECK(trace.steps[0].status == StepStatus::Failed);
    CHECK(trace.steps[0].error_code == ErrorCode::ColumnNotFound);
    CHECK(trace.steps[1].status == StepStatus::Skipped);
    CHECK(trace.final_table == t);
    CHECK(trace.truncated_at == 0u);
    const auto j = trace_to_json(trace);
    CHECK(j["steps"][0]["status"] == "failed");
    CHECK(j["steps"][1]["status"] == "skipped");
  }
  SUBCASE("identity") {
    const auto trace = execute({}, t, ex);
    CHECK(trace.final_table == t);
    CHECK(trace.steps.empty());
  }
  SUBCASE("semantic op without executor is a failed step") {
    const auto p = parse_pipeline(json::parse(
        R"([{"operation":"add_column","new_column":"c","description":"d"},{"operation":"select","columns":["a"]}])"));
    const auto trace = execute(p, t, UnavailableExecutor());
    CHECK(trace.steps[0].status == StepStatus::Failed);
    CHECK(trace.steps[0].error_code == ErrorCode::ExecutorFailure);
    CHECK(trace.steps[1].status == StepStatus::Skipped);
    CHECK(trace.final_table == t);
  }
}

TEST_CASE("apply_prefix") {
  const MockSemanticExecutor ex;
  const auto t = load_csv("a,b\nx,1\ny,2\nz,3");
  const auto p = parse_pipeline(json::parse(R"([
    {"operation":"filter","column":"b","cmp":">","value":1},
    {"operation":"sort_by","column":"b","order":"desc"},
    {"operation":"select","columns":["a"]}])"));
  CHECK(apply_prefix(p, t, 0, ex) == t);
  CHECK(apply_prefix(p, t, 1, ex) == exec_filter(t, "b", Comparator::Gt, Value::number(Decimal(1))));
  CHECK(apply_prefix(p, t, 3, ex) == execute(p, t, ex).final_table);
  CHECK(apply_prefix(p, t, 99, ex) == execute(p, t, ex).final_table);
}
