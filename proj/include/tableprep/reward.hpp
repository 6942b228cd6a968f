#pragma once

#include "tableprep/dataset.hpp"
#include "tableprep/decimal.hpp"
#include "tableprep/pipeline.hpp"

#include <json.hpp>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tableprep {

/// True iff every answer matches the rendering of at least one cell.
bool contains_all_answers(const Table& t, const AnswerSet& a);

/// 1 iff `table_after` still holds every answer.
int op_correctness(const Table& table_after, const AnswerSet& a);
/// Failed and Skipped steps score 0.
int op_correctness(const TraceStep& step, const AnswerSet& a);

/// Cumulative accuracy for k = 1..n: (sum of correctness over steps <= k) / n.
/// Empty for an empty trace.
std::vector<Rational> accuracy_reward_prefixes(const ExecutionTrace& trace, const AnswerSet& a);

/// The k = n value. An empty pipeline scores 0 and appends a warning.
Rational accuracy_reward(const ExecutionTrace& trace, const AnswerSet& a,
                         std::vector<std::string>* warnings = nullptr);

enum class CompressionOrientation { AsWritten, Inverted };

/// 0.5 * rows_final / rows_initial + 0.5 * cols_final / cols_initial.
/// AsWritten keeps the ratio form (identity = 1, larger tables > 1);
/// Inverted returns max(0, 1 - as_written). Throws DegenerateInitialTable
/// when the initial table has no rows or no columns.
Rational compression_reward(const ExecutionTrace& trace,
                            CompressionOrientation orientation = CompressionOrientation::AsWritten);

/// Same ratio for each intermediate table T_1..T_n (diagnostics).
std::vector<Rational> compression_reward_prefixes(
    const ExecutionTrace& trace,
    CompressionOrientation orientation = CompressionOrientation::AsWritten);

/// Soft overlong penalty: 0 up to l_max - l_cache, linear down to -1 at
/// l_max, -1 beyond. Throws BadBudget unless 0 < l_cache < l_max.
Rational length_reward(std::size_t token_len, std::size_t l_max, std::size_t l_cache);

struct RewardConfig {
  Rational lambda1{1, 2};
  Rational lambda2{1, 2};
  std::size_t l_max = 2560;
  std::size_t l_cache = 512;
  CompressionOrientation orientation = CompressionOrientation::AsWritten;

  static RewardConfig from_json(const nlohmann::json& doc);
};

struct RewardBreakdown {
  std::vector<int> per_op_correct;
  Rational r_acc;
  Rational r_compress;
  Rational r_length;
  Rational total;
  std::size_t n = 0;
  std::size_t token_len = 0;
  std::vector<std::string> warnings;

  /// Decimal values plus an "exact" object holding p/q fractions.
  nlohmann::json to_json() const;
};

RewardBreakdown total_reward(const ExecutionTrace& trace, const AnswerSet& a, std::size_t token_len,
                             const RewardConfig& cfg = {});

/// Every answer appears verbatim as a cell (Exact matching regardless of
/// the set's configured policy).
bool is_cell_focused(const Table& t, const AnswerSet& a);

using TokenCounter = std::function<std::size_t(std::string_view)>;

/// ceil(utf8 bytes / 4).
std::size_t approx_token_count(std::string_view text);

/// Text whose length the dataset filter measures: question, blank line,
/// markdown table.
std::string instance_prompt_text(const Instance& inst);

enum class DropReason { NotCellFocused, Length, Unlabeled };
std::string_view to_string(DropReason reason);

struct FilterResult {
  std::vector<Instance> kept;
  struct Drop {
    std::string id;
    DropReason reason;
  };
  std::vector<Drop> dropped;

  std::size_t count(DropReason reason) const;
  nlohmann::json stats_json() const;
};

/// Keeps instances that are cell-focused and shorter than `max_tokens`.
/// The cell-focus check runs first and names the drop reason.
FilterResult filter_dataset(std::span<const Instance> instances, const TokenCounter& counter,
                            std::size_t max_tokens = 2800);

}  // namespace tableprep
