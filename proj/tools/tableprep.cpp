#include "tableprep/app.hpp"
#include "tableprep/error.hpp"
#include "tableprep/merge.hpp"
#include "tableprep/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace tableprep;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDataset = 3;

std::string read_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::DatasetError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_input(const std::string& path) {
  try {
    return json::parse(read_input(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::DatasetError, path + ": " + e.what());
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::DatasetError, "cannot write " + path);
  out << text;
}

AppConfig load_config(const std::string& path) {
  return path.empty() ? AppConfig{} : AppConfig::load(path);
}

Table load_table_file(const std::string& path) {
  const auto text = read_input(path);
  if (std::filesystem::path(path).extension() == ".csv") return load_csv(text);
  try {
    return load_json_table(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedInput, path + ": " + e.what());
  }
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ConfigError:
    case ErrorCode::AuthMissing:
      return kExitConfig;
    case ErrorCode::DatasetError:
    case ErrorCode::EmptyInput:
    case ErrorCode::DuplicateColumn:
    case ErrorCode::RaggedRow:
    case ErrorCode::MissingKey:
    case ErrorCode::MalformedInput:
    case ErrorCode::UnknownOperator:
    case ErrorCode::MissingParam:
    case ErrorCode::BadParamType:
    case ErrorCode::NoJsonFound:
    case ErrorCode::EmptyCandidates:
    case ErrorCode::EmptyGroup:
    case ErrorCode::GroupTooSmall:
      return kExitDataset;
    default:
      return kExitFailure;
  }
}

// --- run --------------------------------------------------------------------

struct RunArgs {
  std::string dataset;
  std::string config;
  std::string out;
  std::optional<std::int64_t> seed;
  std::optional<std::string> log_llm;
  bool no_prep = false;
};

int cmd_run(const RunArgs& args) {
  auto cfg = load_config(args.config);
  if (args.seed) cfg.seed = *args.seed;
  const auto dataset = parse_dataset(read_input(args.dataset));
  for (const auto& e : dataset.errors) {
    std::cerr << "dataset line " << e.line << ": " << e.message << "\n";
  }
  if (dataset.instances.empty()) {
    throw Error(ErrorCode::DatasetError, args.dataset + " has no valid instances");
  }
  const auto runtime = build_runtime(cfg, args.log_llm);
  const auto report = run_dataset(dataset, cfg, runtime, RunOptions{args.no_prep});
  write_output(args.out, report.to_json().dump(2) + "\n");
  return kExitOk;
}

// --- exec -------------------------------------------------------------------

struct ExecArgs {
  std::string table;
  std::string pipeline;
  std::string config;
  std::string out;
  std::string format = "json";
  bool trace = false;
};

int cmd_exec(const ExecArgs& args) {
  const auto cfg = load_config(args.config);
  const auto table = load_table_file(args.table);
  const auto pipeline = parse_pipeline(read_json_input(args.pipeline));
  const auto executor = build_executor(cfg);
  const auto trace = execute(pipeline, table, *executor);

  std::string text;
  if (args.format == "markdown") {
    text = serialize_markdown(trace.final_table) + "\n";
    if (args.trace) std::cerr << trace_to_json(trace).dump(2) << "\n";
  } else {
    json out = serialize_json(trace.final_table);
    if (args.trace) out = json{{"table", out}, {"trace", trace_to_json(trace)}};
    text = out.dump(2) + "\n";
  }
  write_output(args.out, text);
  return kExitOk;
}

// --- merge ------------------------------------------------------------------

// Candidates file: a JSON array whose items are operator arrays or raw
// model outputs (strings). Invalid items are dropped with a warning.
int cmd_merge(const std::string& path, const std::string& out_path) {
  const auto doc = read_json_input(path);
  if (!doc.is_array()) throw Error(ErrorCode::DatasetError, path + ": expected a JSON array of candidates");

  std::vector<Pipeline> candidates;
  json dropped = json::array();
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      candidates.push_back(doc[i].is_string() ? extract_pipeline_json(doc[i].get<std::string>())
                                              : parse_pipeline(doc[i]));
    } catch (const Error& e) {
      std::cerr << "warning: candidate " << i << " dropped: " << e.what() << "\n";
      dropped.push_back({{"index", i}, {"error", std::string(to_string(e.code()))}, {"message", e.what()}});
    }
  }
  const auto merged = merge_pipelines(candidates);
  write_output(out_path,
               json{{"pipeline", to_json(merged)}, {"candidates", candidates.size()}, {"dropped", dropped}}.dump(2) +
                   "\n");
  return kExitOk;
}

// --- reward -----------------------------------------------------------------

// Bundle: {question, table, answers, output_text, pipeline?}.
int cmd_reward(const std::string& path, const std::string& config, const std::string& out_path) {
  const auto cfg = load_config(config);
  const auto bundle = read_json_input(path);
  Instance inst;
  try {
    inst = parse_instance(json{{"id", bundle.value("id", std::string("bundle"))},
                               {"question", bundle.at("question")},
                               {"table", bundle.at("table")},
                               {"answers", bundle.at("answers")}});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::DatasetError, path + ": " + e.what());
  }
  if (!inst.answers) throw Error(ErrorCode::DatasetError, path + ": bundle needs answers");
  const auto output_text = bundle.value("output_text", std::string());
  const auto pipeline = bundle.contains("pipeline") ? parse_pipeline(bundle["pipeline"])
                                                    : extract_pipeline_json(output_text);
  const auto executor = build_executor(cfg);
  const auto trace = execute(pipeline, inst.table, *executor);
  const auto breakdown = total_reward(trace, *inst.answers, approx_token_count(output_text), cfg.reward);
  write_output(out_path, breakdown.to_json().dump(2) + "\n");
  return kExitOk;
}

// --- gate -------------------------------------------------------------------

std::vector<Rational> rational_list(const json& values) {
  std::vector<Rational> out;
  for (const auto& v : values) {
    std::optional<Rational> r;
    if (v.is_string()) {
      r = parse_rational(v.get<std::string>());
    } else if (v.is_number_integer()) {
      r = Rational(v.get<long long>());
    } else if (v.is_number()) {
      if (auto d = Decimal::from_double(v.get<double>())) r = d->to_rational();
    }
    if (!r) throw Error(ErrorCode::DatasetError, "reward values must be numbers: " + v.dump());
    out.push_back(*r);
  }
  return out;
}

// Input JSONL: {"instance_id", "groups": [[r...], ...]} or {"instance_id",
// "rewards": [r...]}. Each record replays its groups through the gate.
int cmd_gate(const std::string& path, const std::string& config, const std::string& out_path) {
  const auto cfg = load_config(config);
  const auto text = read_input(path);

  std::ostringstream accepted;
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t line_no = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::DatasetError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    std::vector<std::vector<Rational>> groups;
    if (rec.contains("groups")) {
      for (const auto& g : rec["groups"]) groups.push_back(rational_list(g));
    } else if (rec.contains("rewards")) {
      groups.push_back(rational_list(rec["rewards"]));
    } else {
      throw Error(ErrorCode::DatasetError, "line " + std::to_string(line_no) + ": needs groups or rewards");
    }
    const auto id = rec.value("instance_id", std::to_string(line_no));
    const auto size = std::max<std::size_t>(2, groups.empty() ? 0 : groups.front().size());
    ReplaySource source(std::move(groups));
    const auto outcome = sample_accepted_group(source, size, cfg.gate);
    ++total;
    const auto record = group_record(id, outcome);
    if (!outcome.exhausted()) {
      ++kept;
      accepted << record.dump() << "\n";
    } else {
      std::cerr << "rejected " << id << ": " << record["rejected_reasons"].dump() << "\n";
    }
  }
  write_output(out_path, accepted.str());
  std::cerr << json{{"records", total}, {"accepted", kept}, {"rejected", total - kept}}.dump() << "\n";
  return kExitOk;
}

// --- filter-dataset ---------------------------------------------------------

int cmd_filter(const std::string& in, const std::string& out_path, std::optional<std::size_t> max_tokens,
               const std::string& config, const std::string& stats_path) {
  const auto cfg = load_config(config);
  const auto dataset = parse_dataset(read_input(in));
  for (const auto& e : dataset.errors) {
    std::cerr << "dataset line " << e.line << ": " << e.message << "\n";
  }
  if (dataset.instances.empty() && !dataset.errors.empty()) {
    throw Error(ErrorCode::DatasetError, in + " has no valid instances");
  }
  const auto result =
      filter_dataset(dataset.instances, approx_token_count, max_tokens.value_or(cfg.filter_max_tokens));
  std::string kept;
  for (const auto& inst : result.kept) kept += instance_to_json(inst).dump() + "\n";
  write_output(out_path, kept);
  const auto stats = result.stats_json().dump(2) + "\n";
  if (stats_path.empty()) {
    std::cerr << stats;
  } else {
    write_output(stats_path, stats);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Table preparation pipelines for table question answering"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Generate, merge and execute pipelines, then answer with rollback");
  run_cmd->add_option("dataset", run.dataset, "JSONL dataset")->required();
  run_cmd->add_option("--config", run.config, "Config JSON")->required();
  run_cmd->add_option("--out", run.out, "Report path (stdout if omitted)");
  run_cmd->add_option("--seed", run.seed, "Override run.seed");
  run_cmd->add_option("--log-llm", run.log_llm, "Append every chat request to this JSONL file");
  run_cmd->add_flag("--no-prep", run.no_prep, "Answer on the original tables");

  ExecArgs ex;
  auto* exec_cmd = app.add_subcommand("exec", "Execute a pipeline on a table");
  exec_cmd->add_option("table", ex.table, "Table (.csv or JSON {header, rows})")->required();
  exec_cmd->add_option("pipeline", ex.pipeline, "Pipeline JSON array")->required();
  exec_cmd->add_option("--config", ex.config, "Config JSON (semantic executor)");
  exec_cmd->add_option("--out", ex.out, "Output path");
  exec_cmd->add_option("--format", ex.format, "json or markdown")->check(CLI::IsMember({"json", "markdown"}));
  exec_cmd->add_flag("--trace", ex.trace, "Include the execution trace");

  std::string merge_in;
  std::string merge_out;
  auto* merge_cmd = app.add_subcommand("merge", "Merge candidate pipelines into one");
  merge_cmd->add_option("candidates", merge_in, "JSON array of candidates")->required();
  merge_cmd->add_option("--out", merge_out, "Output path");

  std::string reward_in;
  std::string reward_config;
  std::string reward_out;
  auto* reward_cmd = app.add_subcommand("reward", "Score one output against its instance");
  reward_cmd->add_option("bundle", reward_in, "Bundle JSON")->required();
  reward_cmd->add_option("--config", reward_config, "Config JSON");
  reward_cmd->add_option("--out", reward_out, "Output path");

  std::string gate_in;
  std::string gate_config;
  std::string gate_out;
  auto* gate_cmd = app.add_subcommand("gate", "Apply variance-aware resampling to reward groups");
  gate_cmd->add_option("rewards", gate_in, "JSONL reward groups")->required();
  gate_cmd->add_option("--config", gate_config, "Config JSON");
  gate_cmd->add_option("--out", gate_out, "Accepted group records (JSONL)");

  std::string filter_in;
  std::string filter_out;
  std::string filter_config;
  std::string filter_stats;
  std::optional<std::size_t> filter_max_tokens;
  auto* filter_cmd = app.add_subcommand("filter-dataset", "Keep cell-focused, short instances");
  filter_cmd->add_option("input", filter_in, "JSONL dataset")->required();
  filter_cmd->add_option("--out", filter_out, "Kept instances (JSONL)")->required();
  filter_cmd->add_option("--max-tokens", filter_max_tokens, "Token limit (default 2800)");
  filter_cmd->add_option("--config", filter_config, "Config JSON");
  filter_cmd->add_option("--stats", filter_stats, "Write stats JSON here instead of stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*exec_cmd) return cmd_exec(ex);
    if (*merge_cmd) return cmd_merge(merge_in, merge_out);
    if (*reward_cmd) return cmd_reward(reward_in, reward_config, reward_out);
    if (*gate_cmd) return cmd_gate(gate_in, gate_config, gate_out);
    if (*filter_cmd) return cmd_filter(filter_in, filter_out, filter_max_tokens, filter_config, filter_stats);
  } catch (const PipelineParseError& e) {
    std::cerr << "error: operator " << e.index() << ": " << e.what() << "\n";
    return kExitDataset;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
