#include "tableprep/error.hpp"
#include "tableprep/reward.hpp"

#include <doctest.h>

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

Table grid(std::size_t rows, std::size_t cols, const std::string& marker = "ans") {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < cols; ++c) names.push_back("c" + std::to_string(c));
  std::vector<Row> body;
  for (std::size_t r = 0; r < rows; ++r) {
    Row row;
    for (std::size_t c = 0; c < cols; ++c) {
      row.push_back(Value::text(r == 0 && c == 0 ? marker : "v" + std::to_string(r) + "_" + std::to_string(c)));
    }
    body.push_back(std::move(row));
  }
  return Table(names, body);
}

TraceStep ok_step(Table after) {
  TraceStep s;
  s.status = StepStatus::Ok;
  s.table_after = std::move(after);
  return s;
}

ExecutionTrace make_trace(Table initial, std::vector<TraceStep> steps) {
  ExecutionTrace t;
  t.initial = initial;
  t.final_table = initial;
  for (const auto& s : steps) {
    if (s.status == StepStatus::Ok) t.final_table = s.table_after;
  }
  t.steps = std::move(steps);
  return t;
}

}  // namespace

TEST_CASE("contains_all_answers") {
  const auto t = load_csv("Country,n\nUSA,7\nUK,3.50");
  CHECK(contains_all_answers(t, AnswerSet({"USA"})));
  CHECK(contains_all_answers(t, AnswerSet({"7"})));
  CHECK(contains_all_answers(t, AnswerSet({"3.5"})));
  CHECK_FALSE(contains_all_answers(t, AnswerSet({"3.50"})));
  CHECK_FALSE(contains_all_answers(t, AnswerSet({"USA", "France"})));
  CHECK_FALSE(contains_all_answers(t, AnswerSet({"usa"})));
  CHECK(contains_all_answers(t, AnswerSet({" usa "}, Matching::NormalizedExact)));
}

TEST_CASE("op_correctness") {
  const AnswerSet a({"ans"});
  CHECK(op_correctness(grid(3, 2), a) == 1);
  CHECK(op_correctness(grid(3, 2, "gone"), a) == 0);
  TraceStep skipped;
  skipped.status = StepStatus::Skipped;
  skipped.table_after = grid(3, 2);
  CHECK(op_correctness(skipped, a) == 0);
  skipped.status = StepStatus::Failed;
  CHECK(op_correctness(skipped, a) == 0);
}

TEST_CASE("accuracy_reward") {
  const AnswerSet a({"ans"});
  const auto keep = grid(4, 3);
  const auto lose = grid(4, 3, "x");
  CHECK(accuracy_reward(make_trace(keep, {ok_step(keep), ok_step(keep)}), a) == 1);
  const auto four = make_trace(keep, {ok_step(keep), ok_step(keep), ok_step(lose), ok_step(lose)});
  CHECK(accuracy_reward(four, a) == Rational(1, 2));
  CHECK(accuracy_reward_prefixes(four, a) ==
        std::vector<Rational>{Rational(1, 4), Rational(1, 2), Rational(1, 2), Rational(1, 2)});
  CHECK(accuracy_reward(make_trace(keep, {ok_step(lose)}), a) == 0);

  std::vector<std::string> warnings;
  CHECK(accuracy_reward(make_trace(keep, {}), a, &warnings) == 0);
  CHECK(warnings.size() == 1);
}

TEST_CASE("compression_reward") {
  const auto big = grid(10, 5);
  CHECK(compression_reward(make_trace(big, {ok_step(grid(2, 2))})) == Rational(3, 10));
  CHECK(compression_reward(make_trace(big, {})) == 1);
  CHECK(compression_reward(make_trace(big, {ok_step(grid(10, 6))})) == Rational(11, 10));
  CHECK(compression_reward(make_trace(big, {ok_step(grid(2, 2))}), CompressionOrientation::Inverted) ==
        Rational(7, 10));
  CHECK(compression_reward(make_trace(big, {ok_step(grid(10, 6))}), CompressionOrientation::Inverted) == 0);
  CHECK(code_of([] { compression_reward(make_trace(load_csv("a\n"), {})); }) == ErrorCode::DegenerateInitialTable);
  CHECK(compression_reward_prefixes(make_trace(big, {ok_step(grid(5, 5)), ok_step(grid(2, 2))})) ==
        std::vector<Rational>{Rational(3, 4), Rational(3, 10)});
}

TEST_CASE("length_reward") {
  CHECK(length_reward(0, 2560, 512) == 0);
  CHECK(length_reward(2048, 2560, 512) == 0);
  CHECK(length_reward(2049, 2560, 512) == Rational(-1, 512));
  CHECK(length_reward(2304, 2560, 512) == Rational(-1, 2));
  CHECK(length_reward(2560, 2560, 512) == -1);
  CHECK(length_reward(3000, 2560, 512) == -1);
  CHECK(code_of([] { length_reward(10, 512, 512); }) == ErrorCode::BadBudget);
  CHECK(code_of([] { length_reward(10, 512, 0); }) == ErrorCode::BadBudget);
  Rational prev = 1;
  for (std::size_t n = 2000; n < 2700; ++n) {
    const auto r = length_reward(n, 2560, 512);
    CHECK(r <= prev);
    CHECK(r >= -1);
    CHECK(r <= 0);
    prev = r;
  }
}

TEST_CASE("total_reward") {
  const AnswerSet a({"ans"});
  const auto big = grid(10, 5);
  const auto small = grid(2, 2);
  const auto bd = total_reward(make_trace(big, {ok_step(small)}), a, 100);
  CHECK(bd.r_acc == 1);
  CHECK(bd.r_compress == Rational(3, 10));
  CHECK(bd.r_length == 0);
  CHECK(bd.total == Rational(23, 20));
  CHECK(bd.per_op_correct == std::vector<int>{1});

  // an empty pipeline earns no accuracy (n = 0 rule)
  const auto identity = total_reward(make_trace(big, {}), a, 10);
  CHECK(identity.r_acc == 0);
  CHECK(identity.total == Rational(1, 2));
  CHECK_FALSE(identity.warnings.empty());

  TraceStep failed;
  failed.status = StepStatus::Failed;
  failed.table_after = big;
  TraceStep skipped = failed;
  skipped.status = StepStatus::Skipped;
  const auto failing = total_reward(make_trace(big, {failed, skipped}), a, 5000);
  CHECK(failing.total == 0);

  // linear in the weights
  RewardConfig cfg;
  cfg.lambda1 = Rational(1, 4);
  cfg.lambda2 = Rational(3, 4);
  const auto w = total_reward(make_trace(big, {ok_step(small)}), a, 2304, cfg);
  CHECK(w.total == 1 + Rational(1, 4) * Rational(3, 10) + Rational(3, 4) * Rational(-1, 2));

  const auto j = bd.to_json();
  CHECK(j["exact"]["total"] == "23/20");
  CHECK(j["total"].get<double>() == doctest::Approx(1.15));
}

TEST_CASE("reward config") {
  const auto cfg = RewardConfig::from_json(json::parse(R"({"lambda1": 0.25, "L_max": 4000, "L_cache": 1000})"));
  CHECK(cfg.lambda1 == Rational(1, 4));
  CHECK(cfg.lambda2 == Rational(1, 2));
  CHECK(cfg.l_max == 4000);
  CHECK(code_of([] { RewardConfig::from_json(json::parse(R"({"compression_orientation": "sideways"})")); }) ==
        ErrorCode::ConfigError);
  CHECK(code_of([] { RewardConfig::from_json(json::parse(R"({"L_max": 100, "L_cache": 100})")); }) ==
        ErrorCode::ConfigError);
  const auto d = RewardConfig::from_json(json::object());
  CHECK(d.l_max == 2560);
  CHECK(d.l_cache == 512);
}

TEST_CASE("cell focus and dataset filter") {
  const auto t = load_csv("City,n\nParis,1\nRome,2");
  CHECK(is_cell_focused(t, AnswerSet({"Paris"})));
  CHECK_FALSE(is_cell_focused(t, AnswerSet({"3"})));
  CHECK(is_cell_focused(t, AnswerSet({"Paris", "Rome"})));
  CHECK_FALSE(is_cell_focused(t, AnswerSet({"paris"}, Matching::NormalizedExact)));

  std::vector<Instance> insts;
  insts.push_back({"short", "Which city?", t, AnswerSet({"Paris"})});
  std::string big_csv = "City,n\nParis,1\n";
  for (int i = 0; i < 2000; ++i) big_csv += "Town" + std::to_string(i) + "," + std::to_string(i) + "\n";
  insts.push_back({"long", "Which city?", load_csv(big_csv), AnswerSet({"Paris"})});
  insts.push_back({"count", "How many?", t, AnswerSet({"3"})});
  insts.push_back({"unlabeled", "?", t, std::nullopt});

  const auto r = filter_dataset(insts, approx_token_count, 2800);
  REQUIRE(r.kept.size() == 1);
  CHECK(r.kept[0].id == "short");
  REQUIRE(r.dropped.size() == 3);
  CHECK(r.dropped[0].reason == DropReason::Length);
  CHECK(r.dropped[1].reason == DropReason::NotCellFocused);
  CHECK(r.dropped[2].reason == DropReason::Unlabeled);
  const auto stats = r.stats_json();
  CHECK(stats["kept"] == 1);
  CHECK(stats["dropped"]["length"] == 1);

  // the limit is exclusive
  const auto tokens = approx_token_count(instance_prompt_text(insts[0]));
  CHECK(filter_dataset(std::span(insts).first(1), approx_token_count, tokens).kept.empty());
  CHECK(filter_dataset(std::span(insts).first(1), approx_token_count, tokens + 1).kept.size() == 1);
  CHECK(approx_token_count("") == 0);
  CHECK(approx_token_count("abcde") == 2);
}
