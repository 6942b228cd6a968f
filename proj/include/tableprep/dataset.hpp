#pragma once

#include "tableprep/table.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tableprep {

enum class Matching { Exact, NormalizedExact };

/// Gold answers of one question. Never empty.
class AnswerSet {
 public:
  explicit AnswerSet(std::vector<std::string> answers, Matching matching = Matching::Exact);

  const std::vector<std::string>& answers() const { return answers_; }
  Matching matching() const { return matching_; }
  AnswerSet with_matching(Matching m) const { return AnswerSet(answers_, m); }

  /// Compares one answer against one rendered string under this policy.
  bool matches(std::string_view answer, std::string_view candidate) const;

 private:
  std::vector<std::string> answers_;
  Matching matching_;
};

/// Trim plus ASCII case-fold.
std::string normalize_answer(std::string_view s);

struct Instance {
  std::string id;
  std::string question;
  Table table;
  std::optional<AnswerSet> answers;
};

/// One JSONL record: {"id", "question", "table": {"header","rows"}, "answers"?}.
/// Answers may be a string or a list of strings.
Instance parse_instance(const nlohmann::json& doc);
nlohmann::json instance_to_json(const Instance& inst);

struct DatasetLineError {
  std::size_t line;  // 1-based
  std::string message;
};

struct Dataset {
  std::vector<Instance> instances;
  std::vector<DatasetLineError> errors;
};

/// Reads JSONL. Malformed lines and duplicate ids are reported in `errors`
/// and skipped; blank lines are ignored.
Dataset parse_dataset(std::string_view jsonl);

}  // namespace tableprep
