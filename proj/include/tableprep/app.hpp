#pragma once

#include "tableprep/dataset.hpp"
#include "tableprep/gate.hpp"
#include "tableprep/llm.hpp"
#include "tableprep/reward.hpp"
#include "tableprep/rollback.hpp"
#include "tableprep/semantic.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tableprep {

/// One backend section of the run configuration.
struct BackendConfig {
  /// generator: "http" | "scripted"; qa: "http" | "scripted" | "lookup";
  /// semantic_executor: "none" | "mock" | "llm".
  std::string type;
  ChatSettings chat;
  /// Inline script / rules, or loaded from "script_path" relative to the
  /// config file.
  nlohmann::ordered_json script;
};

struct AppConfig {
  BackendConfig generator{"http", {}, {}};
  BackendConfig qa{"http", {}, {}};
  BackendConfig semantic_executor{"none", {}, {}};
  RewardConfig reward;
  GateConfig gate;

  std::size_t n = 5;
  std::int64_t seed = 0;
  std::size_t parallelism = 4;
  std::size_t max_concurrent_requests = 16;
  std::size_t prompt_max_rows = 100;
  bool rollback_short_circuit = true;
  Matching eval_matching = Matching::NormalizedExact;
  std::size_t filter_max_tokens = 2800;

  /// Training hyperparameters, carried for consumers of gate records
  /// (max_sequence_length, rollouts, total_batch_size, learning_rate,
  /// lora_rank, validation_fraction). Unknown keys are kept.
  nlohmann::ordered_json training = default_training();

  static nlohmann::ordered_json default_training();

  /// Throws Error(ConfigError).
  static AppConfig from_json(const nlohmann::ordered_json& doc,
                             const std::filesystem::path& base_dir = ".");
  static AppConfig load(const std::filesystem::path& path);
};

/// Live backends built from a config.
struct Runtime {
  std::shared_ptr<const CandidateGenerator> generator;
  std::shared_ptr<QaClient> qa;
  std::shared_ptr<const SemanticExecutor> executor;
};

/// `log_llm_path` enables JSONL logging of every chat request.
Runtime build_runtime(const AppConfig& cfg, const std::optional<std::string>& log_llm_path = std::nullopt);

std::shared_ptr<const SemanticExecutor> build_executor(const AppConfig& cfg,
                                                       std::shared_ptr<RequestLimiter> limiter = nullptr,
                                                       std::shared_ptr<LlmLog> log = nullptr);

struct InstanceRecord {
  std::string id;
  std::string final_answer;
  std::optional<bool> correct;
  int state_used = 0;
  int qa_calls = 0;
  std::size_t ops_executed = 0;
  std::size_t cells_before = 0;
  std::size_t cells_after = 0;
  nlohmann::json pipeline = nlohmann::json::array();
  std::vector<std::string> candidate_errors;
  std::optional<std::string> error;
};

struct RunAggregates {
  std::optional<double> accuracy;
  double mean_compression = 0.0;
  double rollback_rate = 0.0;
  std::map<std::string, std::size_t> op_type_histogram;

  friend bool operator==(const RunAggregates&, const RunAggregates&) = default;
};

struct RunReport {
  std::vector<InstanceRecord> records;  // sorted by id
  std::vector<DatasetLineError> dataset_errors;
  RunAggregates aggregates;

  nlohmann::json to_json() const;
  /// Throws DatasetError if the stored aggregates differ from a
  /// recomputation over the records.
  static RunReport from_json(const nlohmann::json& doc);
};

RunAggregates compute_aggregates(const std::vector<InstanceRecord>& records);

/// Compares a QA answer with the gold set. Several gold answers are
/// compared as a multiset against the comma-separated parts of `answer`.
bool answer_correct(std::string_view answer, const AnswerSet& gold);

struct RunOptions {
  bool no_prep = false;  // identity pipeline, no generation
};

/// generate -> extract -> merge -> execute -> rollback answer -> score, for
/// every instance; instance failures are recorded, not thrown.
RunReport run_dataset(const Dataset& dataset, const AppConfig& cfg, const Runtime& runtime,
                      const RunOptions& options = {});

InstanceRecord run_instance(const Instance& inst, const AppConfig& cfg, const Runtime& runtime,
                            const RunOptions& options = {});

}  // namespace tableprep
