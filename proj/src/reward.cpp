#include "tableprep/reward.hpp"

#include "tableprep/error.hpp"

#include <algorithm>

namespace tableprep {

using json = nlohmann::json;

bool contains_all_answers(const Table& t, const AnswerSet& a) {
  std::vector<std::string> rendered;
  rendered.reserve(cell_count(t));
  for (const auto& row : t.rows()) {
    for (const auto& cell : row) rendered.push_back(cell.render());
  }
  return std::all_of(a.answers().begin(), a.answers().end(), [&](const std::string& answer) {
    return std::any_of(rendered.begin(), rendered.end(),
                       [&](const std::string& c) { return a.matches(answer, c); });
  });
}

int op_correctness(const Table& table_after, const AnswerSet& a) {
  return contains_all_answers(table_after, a) ? 1 : 0;
}

int op_correctness(const TraceStep& step, const AnswerSet& a) {
  if (step.status != StepStatus::Ok) return 0;
  return op_correctness(step.table_after, a);
}

std::vector<Rational> accuracy_reward_prefixes(const ExecutionTrace& trace, const AnswerSet& a) {
  const auto n = trace.steps.size();
  std::vector<Rational> out;
  out.reserve(n);
  long long running = 0;
  for (const auto& step : trace.steps) {
    running += op_correctness(step, a);
    out.emplace_back(Rational(running, static_cast<long long>(n)));
  }
  return out;
}

Rational accuracy_reward(const ExecutionTrace& trace, const AnswerSet& a,
                         std::vector<std::string>* warnings) {
  if (trace.steps.empty()) {
    if (warnings) warnings->push_back("empty pipeline: accuracy reward defined as 0");
    return 0;
  }
  return accuracy_reward_prefixes(trace, a).back();
}

namespace {

Rational ratio_reward(const Table& initial, const Table& produced, CompressionOrientation o) {
  if (initial.row_count() == 0 || initial.column_count() == 0) {
    throw Error(ErrorCode::DegenerateInitialTable,
                "compression reward needs an initial table with at least one row and one column");
  }
  const Rational half(1, 2);
  Rational value = half * Rational(static_cast<long long>(produced.row_count()),
                                   static_cast<long long>(initial.row_count())) +
                   half * Rational(static_cast<long long>(produced.column_count()),
                                   static_cast<long long>(initial.column_count()));
  if (o == CompressionOrientation::Inverted) {
    value = 1 - value;
    if (value < 0) value = 0;
  }
  return value;
}

}  // namespace

Rational compression_reward(const ExecutionTrace& trace, CompressionOrientation orientation) {
  return ratio_reward(trace.initial, trace.final_table, orientation);
}

std::vector<Rational> compression_reward_prefixes(const ExecutionTrace& trace,
                                                  CompressionOrientation orientation) {
  std::vector<Rational> out;
  out.reserve(trace.steps.size());
  for (const auto& step : trace.steps) {
    out.push_back(ratio_reward(trace.initial, step.table_after, orientation));
  }
  return out;
}

Rational length_reward(std::size_t token_len, std::size_t l_max, std::size_t l_cache) {
  if (l_cache == 0 || l_cache >= l_max) {
    throw Error(ErrorCode::BadBudget, "length budget requires 0 < L_cache < L_max (got L_max=" +
                                          std::to_string(l_max) + ", L_cache=" +
                                          std::to_string(l_cache) + ")");
  }
  const std::size_t soft = l_max - l_cache;
  if (token_len <= soft) return 0;
  if (token_len <= l_max) {
    return Rational(static_cast<long long>(soft) - static_cast<long long>(token_len),
                    static_cast<long long>(l_cache));
  }
  return -1;
}

namespace {

Rational rational_param(const json& v, const char* name) {
  if (v.is_string()) {
    if (auto r = parse_rational(v.get<std::string>())) return *r;
  } else if (v.is_number_integer()) {
    return Rational(v.get<long long>());
  } else if (v.is_number()) {
    if (auto d = Decimal::from_double(v.get<double>())) return d->to_rational();
  }
  throw Error(ErrorCode::ConfigError, std::string("reward.") + name + " must be a number");
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace

RewardConfig RewardConfig::from_json(const json& doc) {
  RewardConfig cfg;
  if (!doc.is_object()) return cfg;
  if (doc.contains("lambda1")) cfg.lambda1 = rational_param(doc["lambda1"], "lambda1");
  if (doc.contains("lambda2")) cfg.lambda2 = rational_param(doc["lambda2"], "lambda2");
  cfg.l_max = doc.value("L_max", cfg.l_max);
  cfg.l_cache = doc.value("L_cache", cfg.l_cache);
  const auto orientation = doc.value("compression_orientation", std::string("as_written"));
  if (orientation == "as_written") {
    cfg.orientation = CompressionOrientation::AsWritten;
  } else if (orientation == "inverted") {
    cfg.orientation = CompressionOrientation::Inverted;
  } else {
    throw Error(ErrorCode::ConfigError,
                "reward.compression_orientation must be \"as_written\" or \"inverted\"");
  }
  if (cfg.l_cache == 0 || cfg.l_cache >= cfg.l_max) {
    throw Error(ErrorCode::ConfigError, "reward requires 0 < L_cache < L_max");
  }
  return cfg;
}

json RewardBreakdown::to_json() const {
  return json{{"per_op_correct", per_op_correct},
              {"r_acc", to_double(r_acc)},
              {"r_compress", to_double(r_compress)},
              {"r_length", to_double(r_length)},
              {"total", to_double(total)},
              {"n", n},
              {"token_len", token_len},
              {"warnings", warnings},
              {"exact",
               {{"r_acc", rational_to_fraction_string(r_acc)},
                {"r_compress", rational_to_fraction_string(r_compress)},
                {"r_length", rational_to_fraction_string(r_length)},
                {"total", rational_to_fraction_string(total)}}}};
}

RewardBreakdown total_reward(const ExecutionTrace& trace, const AnswerSet& a, std::size_t token_len,
                             const RewardConfig& cfg) {
  RewardBreakdown out;
  out.n = trace.steps.size();
  out.token_len = token_len;
  for (const auto& step : trace.steps) out.per_op_correct.push_back(op_correctness(step, a));
  out.r_acc = accuracy_reward(trace, a, &out.warnings);
  out.r_compress = compression_reward(trace, cfg.orientation);
  out.r_length = length_reward(token_len, cfg.l_max, cfg.l_cache);
  out.total = out.r_acc + cfg.lambda1 * out.r_compress + cfg.lambda2 * out.r_length;
  for (const auto& step : trace.steps) {
    if (step.status == StepStatus::Failed) {
      out.warnings.push_back("operator failed: " + step.error);
    }
  }
  return out;
}

bool is_cell_focused(const Table& t, const AnswerSet& a) {
  return contains_all_answers(t, a.with_matching(Matching::Exact));
}

std::size_t approx_token_count(std::string_view text) { return (text.size() + 3) / 4; }

std::string instance_prompt_text(const Instance& inst) {
  return inst.question + "\n\n" + serialize_markdown(inst.table);
}

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::NotCellFocused: return "not_cell_focused";
    case DropReason::Length: return "length";
    case DropReason::Unlabeled: return "unlabeled";
  }
  return "?";
}

std::size_t FilterResult::count(DropReason reason) const {
  return static_cast<std::size_t>(std::count_if(
      dropped.begin(), dropped.end(), [&](const Drop& d) { return d.reason == reason; }));
}

json FilterResult::stats_json() const {
  json drops = json::array();
  for (const auto& d : dropped) {
    drops.push_back({{"id", d.id}, {"reason", std::string(to_string(d.reason))}});
  }
  return json{{"total", kept.size() + dropped.size()},
              {"kept", kept.size()},
              {"dropped",
               {{"not_cell_focused", count(DropReason::NotCellFocused)},
                {"length", count(DropReason::Length)},
                {"unlabeled", count(DropReason::Unlabeled)}}},
              {"drops", std::move(drops)}};
}

FilterResult filter_dataset(std::span<const Instance> instances, const TokenCounter& counter,
                            std::size_t max_tokens) {
  FilterResult result;
  for (const auto& inst : instances) {
    if (!inst.answers) {
      result.dropped.push_back({inst.id, DropReason::Unlabeled});
    } else if (!is_cell_focused(inst.table, *inst.answers)) {
      result.dropped.push_back({inst.id, DropReason::NotCellFocused});
    } else if (counter(instance_prompt_text(inst)) >= max_tokens) {
      result.dropped.push_back({inst.id, DropReason::Length});
    } else {
      result.kept.push_back(inst);
    }
  }
  return result;
}

}  // namespace tableprep
