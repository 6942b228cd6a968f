#include "oracles.hpp"

#include "tableprep/error.hpp"
#include "tableprep/merge.hpp"

#include <doctest.h>

#include <random>

using namespace tableprep;
using nlohmann::json;

namespace {

Pipeline P(const char* text) { return parse_pipeline(json::parse(text)); }

OperatorSpec filter_op(const std::string& col, const std::string& v) {
  return parse_operator(json{{"operation", "filter"}, {"column", col}, {"cmp", "=="}, {"value", v}});
}

OperatorSpec sort_op(const std::string& col) {
  return parse_operator(json{{"operation", "sort_by"}, {"column", col}, {"order", "desc"}});
}

std::vector<std::string> keys(const Pipeline& p) {
  std::vector<std::string> out;
  for (const auto& op : p) out.push_back(canonical_key(op));
  return out;
}

}  // namespace

TEST_CASE("merge examples") {
  const auto fx = filter_op("A", "x");
  const auto fy = filter_op("A", "y");
  const auto sb = sort_op("B");

  SUBCASE("heaviest path wins") {
    const auto merged = merge_pipelines({{fx, sb}, {fx, sb}, {fy}});
    CHECK(merged == Pipeline{fx, sb});
  }
  SUBCASE("single candidate") {
    const auto p = P(R"([{"operation":"select","columns":["a"]},{"operation":"filter","column":"a","cmp":"==","value":"x"}])");
    CHECK(merge_pipelines({p}) == p);
  }
  SUBCASE("longer branch on path sum") {
    const auto g1 = sort_op("G");
    CHECK(merge_pipelines({{fx}, {fx, g1}}) == Pipeline{fx, g1});
  }
  SUBCASE("select union and add_column dedup") {
    const auto merged = merge_pipelines({
        P(R"([{"operation":"select","columns":["b","a"]},{"operation":"add_column","new_column":"g","description":"d"},{"operation":"filter","column":"a","cmp":"==","value":"x"}])"),
        P(R"([{"operation":"add_column","new_column":"g","description":"d"},{"operation":"select","columns":["c","a"]},{"operation":"filter","column":"a","cmp":"==","value":"x"}])"),
        P(R"([{"operation":"add_column","new_column":"h","description":"e"}])"),
    });
    REQUIRE(merged.size() == 4);
    CHECK(std::get<SelectParams>(merged[0].params).columns == std::vector<std::string>{"b", "a", "c"});
    CHECK(std::get<AddColumnParams>(merged[1].params).new_column == "g");
    CHECK(std::get<AddColumnParams>(merged[2].params).new_column == "h");
    CHECK(merged[3].kind() == OpKind::Filter);
  }
  SUBCASE("no select anywhere") {
    CHECK(merge_pipelines({{fx}}) == Pipeline{fx});
  }
  SUBCASE("empty candidates") {
    CHECK_THROWS_AS(merge_pipelines({}), Error);
    CHECK(merge_pipelines({{}, {}}).empty());
  }
}

TEST_CASE("trie structure") {
  const auto fx = filter_op("A", "x");
  const auto fy = filter_op("A", "y");
  const auto sb = sort_op("B");

  const auto same = build_trie({{fx, sb}, {fx, sb}});
  REQUIRE(same.root().children.size() == 1);
  CHECK(same.root().children[0]->weight == 2);
  REQUIRE(same.root().children[0]->children.size() == 1);
  CHECK(same.root().children[0]->children[0]->weight == 2);

  const auto split = build_trie({{fx, sb}, {fx, fy}});
  CHECK(split.root().children[0]->weight == 2);
  REQUIRE(split.root().children[0]->children.size() == 2);
  CHECK(split.root().children[0]->children[0]->weight == 1);
  CHECK(split.root().children[0]->children[1]->weight == 1);
  CHECK(split.total_weight() == 4);

  const auto empty = build_trie({{}, {}});
  CHECK(empty.root().children.empty());
  CHECK(best_path(empty).empty());

  // explanations do not split nodes
  auto fx2 = fx;
  fx2.explanation = "because";
  CHECK(build_trie({{fx}, {fx2}}).root().children.size() == 1);
}

TEST_CASE("best_path tie rules") {
  const auto a = filter_op("A", "1");
  const auto b = filter_op("A", "2");
  // equal weight, equal length: smaller key sequence
  const auto& smaller = canonical_key(a) < canonical_key(b) ? a : b;
  CHECK(best_path(build_trie({{b}, {a}})) == Pipeline{smaller});
  CHECK(best_path(build_trie({{a}, {b}})) == Pipeline{smaller});
  // equal weight, longer wins: [a] twice = 2 vs [b, c] once = 2
  const auto c = sort_op("C");
  CHECK(best_path(build_trie({{a}, {a}, {b, c}})) == Pipeline{b, c});
}

TEST_CASE("best_path matches brute force") {
  std::mt19937_64 rng(42);
  std::vector<OperatorSpec> vocab;
  for (int i = 0; i < 4; ++i) vocab.push_back(filter_op("A", std::to_string(i)));
  for (int i = 0; i < 4; ++i) vocab.push_back(sort_op("S" + std::to_string(i)));
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<Pipeline> cands;
    std::vector<oracle::KeySeq> seqs;
    for (int i = 0; i < n; ++i) {
      Pipeline p;
      const auto len = std::uniform_int_distribution<int>(0, 5)(rng);
      for (int j = 0; j < len; ++j) p.push_back(vocab[std::uniform_int_distribution<std::size_t>(0, 7)(rng)]);
      seqs.push_back(keys(p));
      cands.push_back(std::move(p));
    }
    CHECK(keys(best_path(build_trie(cands))) == oracle::brute_force_best_path(seqs).keys);
  }
}
