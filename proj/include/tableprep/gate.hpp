#pragma once

#include "tableprep/dataset.hpp"
#include "tableprep/decimal.hpp"
#include "tableprep/operators.hpp"
#include "tableprep/reward.hpp"

#include <json.hpp>

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tableprep {

class CandidateGenerator;
class SemanticExecutor;

/// Population statistics of a reward group (divide by |G|).
struct GroupStats {
  Rational mean;
  Rational variance;
  double stddev = 0.0;
  Rational max;
};

GroupStats group_stats(std::span<const Rational> rewards);

/// A_i = (R_i - mean) / (stddev + epsilon). The divisor is rounded to the
/// nearest double once, so the returned advantages are exact multiples of
/// the deviations: they sum to exactly zero and are exactly zero for a
/// constant group. Throws GroupTooSmall below two members.
std::vector<Rational> advantages(std::span<const Rational> rewards, double epsilon = 1e-6);

struct GateConfig {
  Rational variance_threshold{1, 10};
  Rational quality_threshold{1, 2};
  double advantage_epsilon = 1e-6;
  std::size_t max_resample_attempts = 4;
  std::size_t group_size = 12;  // rollouts per question

  /// Throws ConfigError on violated invariants.
  void validate() const;
  static GateConfig from_json(const nlohmann::json& doc);
};

enum class GateVerdict { Accepted, LowVariance, LowQuality };
std::string_view to_string(GateVerdict verdict);

/// Variance is checked first; the first failing constraint names the
/// rejection.
GateVerdict vgr_accept(std::span<const Rational> rewards, const GateConfig& cfg);

struct ScoredCandidate {
  std::string output_text;
  Pipeline pipeline;
  Rational reward;
};

struct CandidateGroup {
  std::vector<ScoredCandidate> members;

  std::vector<Rational> rewards() const;
  std::size_t size() const { return members.size(); }
};

/// Supplies freshly scored candidates, one whole group per draw.
class CandidateSource {
 public:
  virtual ~CandidateSource() = default;
  virtual CandidateGroup draw(std::size_t group_size) = 0;
};

struct SampleOutcome {
  std::optional<CandidateGroup> group;  // empty when exhausted
  std::vector<Rational> advantages;
  std::size_t attempts = 0;
  std::vector<GateVerdict> rejected;

  bool exhausted() const { return !group.has_value(); }
};

/// Draws whole groups until one passes vgr_accept, giving up after
/// max_resample_attempts rejections. Throws GroupTooSmall for
/// group_size < 2.
SampleOutcome sample_accepted_group(CandidateSource& source, std::size_t group_size,
                                    const GateConfig& cfg);

/// {instance_id, rewards[], advantages[], attempts, rejected_reasons[]}.
nlohmann::json group_record(std::string_view instance_id, const SampleOutcome& outcome);

/// Replays pre-recorded reward groups in order; an exhausted replay
/// repeats its last group.
class ReplaySource : public CandidateSource {
 public:
  explicit ReplaySource(std::vector<std::vector<Rational>> groups);
  CandidateGroup draw(std::size_t group_size) override;

 private:
  std::vector<std::vector<Rational>> groups_;
  std::size_t next_ = 0;
};

/// Generates candidates for one labeled instance and scores each with
/// total_reward. Output without an extractable pipeline (and failed
/// requests) earns only the weighted length term.
class GeneratingSource : public CandidateSource {
 public:
  GeneratingSource(const Instance& instance, std::shared_ptr<const CandidateGenerator> generator,
                   std::shared_ptr<const SemanticExecutor> executor, RewardConfig reward_cfg,
                   TokenCounter counter = approx_token_count);

  CandidateGroup draw(std::size_t group_size) override;

 private:
  Instance instance_;
  std::shared_ptr<const CandidateGenerator> generator_;
  std::shared_ptr<const SemanticExecutor> executor_;
  RewardConfig reward_cfg_;
  TokenCounter counter_;
};

}  // namespace tableprep
