#include "tableprep/gate.hpp"

#include "tableprep/error.hpp"
#include "tableprep/llm.hpp"
#include "tableprep/semantic.hpp"

#include <algorithm>
#include <cmath>

namespace tableprep {

using json = nlohmann::json;

GroupStats group_stats(std::span<const Rational> rewards) {
  if (rewards.empty()) {
    throw Error(ErrorCode::EmptyGroup, "group statistics need at least one reward");
  }
  GroupStats s;
  const Rational size(static_cast<long long>(rewards.size()));
  Rational sum = 0;
  s.max = rewards.front();
  for (const auto& r : rewards) {
    sum += r;
    s.max = std::max(s.max, r);
  }
  s.mean = sum / size;
  Rational sq = 0;
  for (const auto& r : rewards) {
    const Rational d = r - s.mean;
    sq += d * d;
  }
  s.variance = sq / size;
  s.stddev = std::sqrt(s.variance.convert_to<double>());
  return s;
}

std::vector<Rational> advantages(std::span<const Rational> rewards, double epsilon) {
  if (rewards.size() < 2) {
    throw Error(ErrorCode::GroupTooSmall, "advantages need a group of at least two rewards");
  }
  const auto stats = group_stats(rewards);
  const auto divisor = Decimal::from_double(stats.stddev + epsilon);
  const Rational scale = 1 / divisor->to_rational();
  std::vector<Rational> out;
  out.reserve(rewards.size());
  for (const auto& r : rewards) out.push_back((r - stats.mean) * scale);
  return out;
}

void GateConfig::validate() const {
  if (variance_threshold < 0) throw Error(ErrorCode::ConfigError, "variance threshold must be >= 0");
  if (!(advantage_epsilon > 0)) throw Error(ErrorCode::ConfigError, "advantage epsilon must be > 0");
  if (max_resample_attempts < 1) {
    throw Error(ErrorCode::ConfigError, "max_resample_attempts must be >= 1");
  }
  if (group_size < 2) throw Error(ErrorCode::ConfigError, "group_size must be >= 2");
}

namespace {

Rational rational_field(const json& v, const char* name) {
  if (v.is_string()) {
    if (auto r = parse_rational(v.get<std::string>())) return *r;
  } else if (v.is_number_integer()) {
    return Rational(v.get<long long>());
  } else if (v.is_number()) {
    if (auto d = Decimal::from_double(v.get<double>())) return d->to_rational();
  }
  throw Error(ErrorCode::ConfigError, std::string("gate.") + name + " must be a number");
}

}  // namespace

GateConfig GateConfig::from_json(const json& doc) {
  GateConfig cfg;
  if (doc.is_object()) {
    // short aliases: epsilon_var, tau, epsilon_adv
    for (const char* key : {"variance_threshold", "epsilon_var"}) {
      if (doc.contains(key)) cfg.variance_threshold = rational_field(doc[key], key);
    }
    for (const char* key : {"quality_threshold", "tau"}) {
      if (doc.contains(key)) cfg.quality_threshold = rational_field(doc[key], key);
    }
    for (const char* key : {"advantage_epsilon", "epsilon_adv"}) {
      if (doc.contains(key)) {
        if (!doc[key].is_number()) throw Error(ErrorCode::ConfigError, std::string("gate.") + key + " must be a number");
        cfg.advantage_epsilon = doc[key].get<double>();
      }
    }
    auto count = [&](const char* key, std::size_t& out) {
      if (!doc.contains(key)) return;
      if (!doc[key].is_number_integer() || doc[key].get<long long>() < 1) {
        throw Error(ErrorCode::ConfigError, std::string("gate.") + key + " must be a positive integer");
      }
      out = doc[key].get<std::size_t>();
    };
    count("max_resample_attempts", cfg.max_resample_attempts);
    count("group_size", cfg.group_size);
  }
  cfg.validate();
  return cfg;
}

std::string_view to_string(GateVerdict verdict) {
  switch (verdict) {
    case GateVerdict::Accepted: return "Accepted";
    case GateVerdict::LowVariance: return "LowVariance";
    case GateVerdict::LowQuality: return "LowQuality";
  }
  return "?";
}

GateVerdict vgr_accept(std::span<const Rational> rewards, const GateConfig& cfg) {
  const auto stats = group_stats(rewards);
  if (stats.variance < cfg.variance_threshold) return GateVerdict::LowVariance;
  if (stats.max < cfg.quality_threshold) return GateVerdict::LowQuality;
  return GateVerdict::Accepted;
}

std::vector<Rational> CandidateGroup::rewards() const {
  std::vector<Rational> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(m.reward);
  return out;
}

SampleOutcome sample_accepted_group(CandidateSource& source, std::size_t group_size,
                                    const GateConfig& cfg) {
  if (group_size < 2) {
    throw Error(ErrorCode::GroupTooSmall, "group size must be at least 2");
  }
  cfg.validate();
  SampleOutcome outcome;
  while (outcome.rejected.size() < cfg.max_resample_attempts) {
    ++outcome.attempts;
    CandidateGroup group = source.draw(group_size);
    const auto rewards = group.rewards();
    if (rewards.empty()) {
      throw Error(ErrorCode::EmptyGroup, "candidate source returned an empty group");
    }
    const auto verdict = vgr_accept(rewards, cfg);
    if (verdict == GateVerdict::Accepted && rewards.size() >= 2) {
      outcome.advantages = advantages(rewards, cfg.advantage_epsilon);
      outcome.group = std::move(group);
      return outcome;
    }
    // a single surviving member cannot carry advantages; count it as collapsed
    outcome.rejected.push_back(verdict == GateVerdict::Accepted ? GateVerdict::LowVariance : verdict);
  }
  return outcome;
}

json group_record(std::string_view instance_id, const SampleOutcome& outcome) {
  json rewards = json::array();
  json advs = json::array();
  if (outcome.group) {
    for (const auto& r : outcome.group->rewards()) rewards.push_back(r.convert_to<double>());
  }
  for (const auto& a : outcome.advantages) advs.push_back(a.convert_to<double>());
  json reasons = json::array();
  for (auto v : outcome.rejected) reasons.push_back(std::string(to_string(v)));
  return json{{"instance_id", instance_id},
              {"rewards", std::move(rewards)},
              {"advantages", std::move(advs)},
              {"attempts", outcome.attempts},
              {"rejected_reasons", std::move(reasons)}};
}

ReplaySource::ReplaySource(std::vector<std::vector<Rational>> groups) : groups_(std::move(groups)) {
  if (groups_.empty()) {
    throw Error(ErrorCode::EmptyGroup, "replay source needs at least one group");
  }
}

CandidateGroup ReplaySource::draw(std::size_t) {
  const auto& rewards = groups_[std::min(next_, groups_.size() - 1)];
  ++next_;
  CandidateGroup group;
  for (const auto& r : rewards) group.members.push_back({std::string(), Pipeline{}, r});
  return group;
}

GeneratingSource::GeneratingSource(const Instance& instance,
                                   std::shared_ptr<const CandidateGenerator> generator,
                                   std::shared_ptr<const SemanticExecutor> executor,
                                   RewardConfig reward_cfg, TokenCounter counter)
    : instance_(instance),
      generator_(std::move(generator)),
      executor_(std::move(executor)),
      reward_cfg_(std::move(reward_cfg)),
      counter_(std::move(counter)) {
  if (!instance_.answers) {
    throw Error(ErrorCode::DatasetError, "instance " + instance_.id + " has no answers to score against");
  }
}

CandidateGroup GeneratingSource::draw(std::size_t group_size) {
  const auto batch = generator_->generate(instance_.question, instance_.table, group_size);
  CandidateGroup group;
  for (const auto& slot : batch.slots) {
    ScoredCandidate c;
    c.output_text = slot.value_or(std::string());
    const auto tokens = counter_(c.output_text);
    const Rational length_term =
        reward_cfg_.lambda2 * length_reward(tokens, reward_cfg_.l_max, reward_cfg_.l_cache);
    if (!slot) {
      c.reward = length_term;
      group.members.push_back(std::move(c));
      continue;
    }
    try {
      c.pipeline = extract_pipeline_json(*slot);
    } catch (const Error&) {
      c.reward = length_term;
      group.members.push_back(std::move(c));
      continue;
    }
    const auto trace = execute(c.pipeline, instance_.table, *executor_);
    c.reward = total_reward(trace, *instance_.answers, tokens, reward_cfg_).total;
    group.members.push_back(std::move(c));
  }
  return group;
}

}  // namespace tableprep
