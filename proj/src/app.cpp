#include "tableprep/app.hpp"

#include "tableprep/error.hpp"
#include "tableprep/merge.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

namespace tableprep {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::ConfigError, message);
}

std::string read_file(const std::filesystem::path& path, ErrorCode code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(code, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BackendConfig parse_backend(const ordered_json& doc, const char* section,
                            std::initializer_list<const char*> types, const std::string& fallback,
                            const std::filesystem::path& base_dir) {
  BackendConfig b;
  b.type = fallback;
  if (doc.is_null()) return b;
  if (!doc.is_object()) config_error(std::string(section) + " must be an object");
  b.type = doc.value("type", fallback);
  if (std::none_of(types.begin(), types.end(), [&](const char* t) { return b.type == t; })) {
    config_error(std::string(section) + ".type \"" + b.type + "\" is not supported");
  }
  try {
    b.chat = ChatSettings::from_json(json::parse(doc.dump()));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    config_error(std::string(section) + ": " + e.what());
  }
  if (doc.contains("script_path")) {
    const auto path = base_dir / doc["script_path"].get<std::string>();
    try {
      b.script = ordered_json::parse(read_file(path, ErrorCode::ConfigError));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      config_error(path.string() + ": " + e.what());
    }
  } else if (doc.contains("script")) {
    b.script = doc["script"];
  }
  return b;
}

}  // namespace

ordered_json AppConfig::default_training() {
  return ordered_json{{"max_sequence_length", 5632}, {"rollouts", 12},      {"total_batch_size", 144},
                      {"learning_rate", 7e-7},       {"lora_rank", 32},     {"validation_fraction", 0.05}};
}

AppConfig AppConfig::from_json(const ordered_json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) config_error("config must be a JSON object");
  AppConfig cfg;
  auto section = [&](const char* name) { return doc.contains(name) ? doc[name] : ordered_json(); };
  cfg.generator = parse_backend(section("generator"), "generator", {"http", "scripted"}, "http", base_dir);
  cfg.qa = parse_backend(section("qa"), "qa", {"http", "scripted", "lookup"}, "http", base_dir);
  cfg.semantic_executor = parse_backend(section("semantic_executor"), "semantic_executor",
                                        {"none", "mock", "llm"}, "none", base_dir);
  try {
    cfg.reward = RewardConfig::from_json(json::parse(section("reward").dump()));
    cfg.gate = GateConfig::from_json(json::parse(section("gate").dump()));

    const auto run = section("run");
    if (!run.is_null()) {
      if (!run.is_object()) config_error("run must be an object");
      cfg.n = run.value("n", run.value("N", cfg.n));
      cfg.seed = run.value("seed", cfg.seed);
      cfg.parallelism = run.value("parallelism", cfg.parallelism);
      cfg.max_concurrent_requests = run.value("max_concurrent_requests", cfg.max_concurrent_requests);
      cfg.prompt_max_rows = run.value("prompt_max_rows", cfg.prompt_max_rows);
      cfg.rollback_short_circuit = run.value("rollback_short_circuit", cfg.rollback_short_circuit);
      cfg.filter_max_tokens = run.value("filter_max_tokens", cfg.filter_max_tokens);
      const auto matching = run.value("eval_matching", std::string("normalized_exact"));
      if (matching == "exact") {
        cfg.eval_matching = Matching::Exact;
      } else if (matching == "normalized_exact") {
        cfg.eval_matching = Matching::NormalizedExact;
      } else {
        config_error("run.eval_matching must be \"exact\" or \"normalized_exact\"");
      }
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(e.what());
  } catch (const json::exception& e) {
    config_error(e.what());
  }
  const auto training = section("training");
  if (!training.is_null()) {
    if (!training.is_object()) config_error("training must be an object");
    for (const auto& [key, value] : training.items()) {
      if (!value.is_number()) config_error("training." + key + " must be a number");
      cfg.training[key] = value;
    }
  }
  if (cfg.n < 1) config_error("run.n must be >= 1");
  if (cfg.parallelism < 1) config_error("run.parallelism must be >= 1");
  if (cfg.max_concurrent_requests < 1) config_error("run.max_concurrent_requests must be >= 1");
  return cfg;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
  const auto text = read_file(path, ErrorCode::ConfigError);
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  return from_json(doc, path.parent_path());
}

// ---------------------------------------------------------------------------
// Runtime

namespace {

std::shared_ptr<ChatClient> make_chat(const BackendConfig& b, std::shared_ptr<RequestLimiter> limiter,
                                      std::shared_ptr<LlmLog> log) {
  return std::make_shared<ChatClient>(b.chat, std::make_shared<HttplibTransport>(), std::move(limiter),
                                      std::move(log));
}

std::shared_ptr<QaClient> build_qa(const AppConfig& cfg, std::shared_ptr<RequestLimiter> limiter,
                                   std::shared_ptr<LlmLog> log) {
  const auto& b = cfg.qa;
  if (b.type == "http") return std::make_shared<ChatQaClient>(make_chat(b, limiter, log));
  if (b.type == "lookup") return std::make_shared<LookupQaClient>(LookupQaClient::from_json(json::parse(b.script.dump())));

  const auto& s = b.script;
  auto qa = std::make_shared<ScriptedQaClient>(
      s.is_object() ? s.value("fallback", std::string("No data available")) : "No data available");
  if (s.is_object() && s.contains("responses")) {
    for (const auto& r : s["responses"]) {
      qa->add(r.at("question").get<std::string>(), r.value("digest", std::string("*")),
              r.at("response").get<std::string>());
    }
  }
  return qa;
}

}  // namespace

std::shared_ptr<const SemanticExecutor> build_executor(const AppConfig& cfg,
                                                       std::shared_ptr<RequestLimiter> limiter,
                                                       std::shared_ptr<LlmLog> log) {
  const auto& b = cfg.semantic_executor;
  if (b.type == "mock") {
    return std::make_shared<MockSemanticExecutor>(
        MockSemanticExecutor::from_json(b.script.is_null() ? ordered_json::object() : b.script));
  }
  if (b.type == "llm") return std::make_shared<LlmSemanticExecutor>(make_chat(b, limiter, log));
  return std::make_shared<UnavailableExecutor>();
}

Runtime build_runtime(const AppConfig& cfg, const std::optional<std::string>& log_llm_path) {
  auto limiter = std::make_shared<RequestLimiter>(static_cast<std::ptrdiff_t>(cfg.max_concurrent_requests));
  std::shared_ptr<LlmLog> log;
  if (log_llm_path) log = std::make_shared<LlmLog>(*log_llm_path);

  Runtime rt;
  try {
    if (cfg.generator.type == "http") {
      rt.generator = std::make_shared<ChatCandidateGenerator>(make_chat(cfg.generator, limiter, log),
                                                              cfg.seed, cfg.prompt_max_rows);
    } else {
      rt.generator = std::make_shared<ScriptedCandidateGenerator>(
          ScriptedCandidateGenerator::from_json(json::parse(cfg.generator.script.dump())));
    }
    rt.qa = build_qa(cfg, limiter, log);
    rt.executor = build_executor(cfg, limiter, log);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(e.what());
  } catch (const json::exception& e) {
    config_error(e.what());
  }
  return rt;
}

// ---------------------------------------------------------------------------
// Scoring and report

bool answer_correct(std::string_view answer, const AnswerSet& gold) {
  if (gold.answers().size() == 1) return gold.matches(gold.answers().front(), answer);

  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const auto comma = answer.find(',', pos);
    parts.emplace_back(answer.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  auto key = [&](std::string_view s) {
    return gold.matching() == Matching::Exact ? std::string(s) : normalize_answer(s);
  };
  std::vector<std::string> got;
  for (const auto& p : parts) {
    // the separator is ", "; strip the space it leaves
    std::string_view v(p);
    while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
    got.push_back(key(v));
  }
  std::vector<std::string> want;
  for (const auto& a : gold.answers()) want.push_back(key(a));
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  return got == want;
}

RunAggregates compute_aggregates(const std::vector<InstanceRecord>& records) {
  RunAggregates agg;
  std::size_t labeled = 0;
  std::size_t correct = 0;
  std::size_t rolled_back = 0;
  double compression_sum = 0.0;
  for (const auto& r : records) {
    if (r.correct) {
      ++labeled;
      correct += *r.correct ? 1 : 0;
    }
    if (r.state_used > 1) ++rolled_back;
    if (r.cells_before > 0) {
      compression_sum += 1.0 - static_cast<double>(r.cells_after) / static_cast<double>(r.cells_before);
    }
    for (const auto& op : r.pipeline) {
      ++agg.op_type_histogram[op.value("operation", std::string("?"))];
    }
  }
  if (labeled > 0) agg.accuracy = static_cast<double>(correct) / static_cast<double>(labeled);
  if (!records.empty()) {
    agg.mean_compression = compression_sum / static_cast<double>(records.size());
    agg.rollback_rate = static_cast<double>(rolled_back) / static_cast<double>(records.size());
  }
  return agg;
}

json RunReport::to_json() const {
  json recs = json::array();
  for (const auto& r : records) {
    json j = {{"id", r.id},
              {"final_answer", r.final_answer},
              {"state_used", r.state_used},
              {"qa_calls", r.qa_calls},
              {"ops_executed", r.ops_executed},
              {"cells_before", r.cells_before},
              {"cells_after", r.cells_after},
              {"pipeline", r.pipeline}};
    if (r.correct) j["correct"] = *r.correct;
    if (!r.candidate_errors.empty()) j["candidate_errors"] = r.candidate_errors;
    if (r.error) j["error"] = *r.error;
    recs.push_back(std::move(j));
  }
  json agg = {{"instances", records.size()},
              {"mean_compression", aggregates.mean_compression},
              {"rollback_rate", aggregates.rollback_rate},
              {"op_type_histogram", aggregates.op_type_histogram}};
  if (aggregates.accuracy) agg["accuracy"] = *aggregates.accuracy;
  json errors = json::array();
  for (const auto& e : dataset_errors) errors.push_back({{"line", e.line}, {"message", e.message}});
  return json{{"compression_definition", "mean over instances of 1 - cells_after/cells_before, "
                                         "where cells_after counts the table submitted to QA"},
              {"aggregates", std::move(agg)},
              {"records", std::move(recs)},
              {"errors", std::move(errors)}};
}

RunReport RunReport::from_json(const json& doc) {
  RunReport report;
  try {
    for (const auto& j : doc.at("records")) {
      InstanceRecord r;
      r.id = j.at("id").get<std::string>();
      r.final_answer = j.at("final_answer").get<std::string>();
      if (j.contains("correct")) r.correct = j["correct"].get<bool>();
      r.state_used = j.at("state_used").get<int>();
      r.qa_calls = j.at("qa_calls").get<int>();
      r.ops_executed = j.at("ops_executed").get<std::size_t>();
      r.cells_before = j.at("cells_before").get<std::size_t>();
      r.cells_after = j.at("cells_after").get<std::size_t>();
      r.pipeline = j.value("pipeline", json::array());
      r.candidate_errors = j.value("candidate_errors", std::vector<std::string>{});
      if (j.contains("error")) r.error = j["error"].get<std::string>();
      report.records.push_back(std::move(r));
    }
    for (const auto& e : doc.value("errors", json::array())) {
      report.dataset_errors.push_back({e.at("line").get<std::size_t>(), e.at("message").get<std::string>()});
    }
    const auto& agg = doc.at("aggregates");
    if (agg.contains("accuracy")) report.aggregates.accuracy = agg["accuracy"].get<double>();
    report.aggregates.mean_compression = agg.at("mean_compression").get<double>();
    report.aggregates.rollback_rate = agg.at("rollback_rate").get<double>();
    report.aggregates.op_type_histogram =
        agg.at("op_type_histogram").get<std::map<std::string, std::size_t>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::DatasetError, std::string("malformed report: ") + e.what());
  }
  if (compute_aggregates(report.records) != report.aggregates) {
    throw Error(ErrorCode::DatasetError, "report aggregates do not match its records");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Run

InstanceRecord run_instance(const Instance& inst, const AppConfig& cfg, const Runtime& runtime,
                            const RunOptions& options) {
  InstanceRecord rec;
  rec.id = inst.id;
  rec.cells_before = cell_count(inst.table);

  Pipeline pipeline;
  if (!options.no_prep) {
    std::vector<Pipeline> candidates;
    try {
      const auto batch = runtime.generator->generate(inst.question, inst.table, cfg.n);
      for (const auto& f : batch.failures) {
        rec.candidate_errors.push_back("candidate " + std::to_string(f.index) + ": " + f.message);
      }
      for (std::size_t i = 0; i < batch.slots.size(); ++i) {
        if (!batch.slots[i]) continue;
        try {
          candidates.push_back(extract_pipeline_json(*batch.slots[i]));
        } catch (const Error& e) {
          rec.candidate_errors.push_back("candidate " + std::to_string(i) + ": " +
                                         std::string(to_string(e.code())) + ": " + e.what());
        }
      }
    } catch (const Error& e) {
      rec.candidate_errors.push_back(std::string("generation: ") + e.what());
    }
    // no surviving candidate: identity pipeline
    if (!candidates.empty()) pipeline = merge_pipelines(candidates);
  }
  rec.pipeline = to_json(pipeline);

  RollbackOptions rb;
  rb.short_circuit_empty_pipeline = cfg.rollback_short_circuit;
  try {
    auto result = answer_with_rollback(inst.question, inst.table, pipeline, *runtime.qa,
                                       *runtime.executor, rb);
    rec.final_answer = result.answer;
    rec.state_used = result.state_used;
    rec.qa_calls = result.qa_calls;
    rec.ops_executed = result.trace.ok_count();
    rec.cells_after = cell_count(result.submitted);
  } catch (const QaTransportError& e) {
    rec.error = e.what();
    rec.state_used = e.state();
    rec.qa_calls = e.state();
    rec.cells_after = rec.cells_before;
  }
  if (inst.answers) {
    rec.correct = !rec.error && answer_correct(rec.final_answer, inst.answers->with_matching(cfg.eval_matching));
  }
  return rec;
}

RunReport run_dataset(const Dataset& dataset, const AppConfig& cfg, const Runtime& runtime,
                      const RunOptions& options) {
  RunReport report;
  report.dataset_errors = dataset.errors;
  report.records.resize(dataset.instances.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < dataset.instances.size(); i = next++) {
      report.records[i] = run_instance(dataset.instances[i], cfg, runtime, options);
    }
  };
  const auto workers = std::min(cfg.parallelism, std::max<std::size_t>(dataset.instances.size(), 1));
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();

  std::sort(report.records.begin(), report.records.end(),
            [](const InstanceRecord& a, const InstanceRecord& b) { return a.id < b.id; });
  report.aggregates = compute_aggregates(report.records);
  return report;
}

}  // namespace tableprep
