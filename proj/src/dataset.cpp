#include "tableprep/dataset.hpp"

#include "tableprep/error.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace tableprep {

using json = nlohmann::json;

AnswerSet::AnswerSet(std::vector<std::string> answers, Matching matching)
    : answers_(std::move(answers)), matching_(matching) {
  if (answers_.empty()) {
    throw Error(ErrorCode::MalformedInput, "answer set must not be empty");
  }
}

std::string normalize_answer(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool AnswerSet::matches(std::string_view answer, std::string_view candidate) const {
  if (matching_ == Matching::Exact) return answer == candidate;
  return normalize_answer(answer) == normalize_answer(candidate);
}

Instance parse_instance(const json& doc) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::MalformedInput, "instance must be a JSON object");
  }
  for (const char* key : {"id", "question", "table"}) {
    if (!doc.contains(key)) {
      throw Error(ErrorCode::MissingKey, std::string("instance is missing \"") + key + "\"");
    }
  }
  Instance inst;
  const auto& id = doc.at("id");
  if (!id.is_string() && !id.is_number_integer()) {
    throw Error(ErrorCode::MalformedInput, "\"id\" must be a string or integer");
  }
  inst.id = id.is_string() ? id.get<std::string>() : id.dump();
  if (!doc.at("question").is_string()) {
    throw Error(ErrorCode::MalformedInput, "\"question\" must be a string");
  }
  inst.question = doc.at("question").get<std::string>();
  inst.table = load_json_table(doc.at("table"));

  if (auto it = doc.find("answers"); it != doc.end() && !it->is_null()) {
    std::vector<std::string> answers;
    auto push = [&](const json& a) {
      if (a.is_string()) {
        answers.push_back(a.get<std::string>());
      } else if (a.is_number()) {
        answers.push_back(a.dump());
      } else {
        throw Error(ErrorCode::MalformedInput, "answers must be strings");
      }
    };
    if (it->is_array()) {
      for (const auto& a : *it) push(a);
    } else {
      push(*it);
    }
    inst.answers = AnswerSet(std::move(answers));
  }
  return inst;
}

json instance_to_json(const Instance& inst) {
  json out = {{"id", inst.id}, {"question", inst.question}, {"table", serialize_json(inst.table)}};
  if (inst.answers) out["answers"] = inst.answers->answers();
  return out;
}

Dataset parse_dataset(std::string_view jsonl) {
  Dataset ds;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = jsonl.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == jsonl.size()) break;
      continue;
    }
    try {
      auto doc = json::parse(line);
      auto inst = parse_instance(doc);
      if (!ids.insert(inst.id).second) {
        throw Error(ErrorCode::DatasetError, "duplicate instance id \"" + inst.id + "\"");
      }
      ds.instances.push_back(std::move(inst));
    } catch (const std::exception& e) {
      ds.errors.push_back({line_no, e.what()});
    }
    if (end == jsonl.size()) break;
  }
  return ds;
}

}  // namespace tableprep
