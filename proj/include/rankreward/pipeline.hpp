#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankreward/judge_gateway.hpp"
#include "rankreward/reward_engine.hpp"
#include "rankreward/reward_io.hpp"
#include "rankreward/step_splitter.hpp"
#include "rankreward/verifier.hpp"

namespace rankreward {

struct GroupResult {
  GroupScore score;
  std::optional<TierRanking> ranking;  // rank mode with K >= 2 and a usable judge reply
  std::vector<std::uint64_t> transcript_ids;
  int judge_calls = 0;
  int parse_failures = 0;      // judge interactions that ended unparsed
  int transport_failures = 0;  // judge interactions that ended without a reply
  bool ranking_failed = false; // rank mode: group zeroed after judge failure
  JudgeFailure ranking_failure = JudgeFailure::kNone;

  GroupRewards rewards() const { return {score.prompt_id, score.rewards}; }
};

nlohmann::ordered_json to_json(const GroupResult& r);

/// verify -> judge (per aux_kind) -> score_group, for one group at a time.
/// Safe to call from many threads; the gateway bounds judge concurrency.
class RewardPipeline {
 public:
  RewardPipeline(VerifierConfig verifier, RewardConfig reward, JudgeGateway& gateway,
                 StepSplitter splitter = StepSplitter::kBlankLine);

  GroupResult score(const RolloutGroup& group) const;

  const RewardConfig& reward_config() const { return reward_; }
  const VerifierConfig& verifier_config() const { return verifier_; }
  JudgeGateway& gateway() const { return gateway_; }

 private:
  JudgeVerdicts judge_rank(const RolloutGroup& verified, GroupResult& out) const;
  JudgeVerdicts judge_pointwise(const RolloutGroup& verified, GroupResult& out) const;
  JudgeVerdicts judge_prm(const RolloutGroup& verified, GroupResult& out) const;

  template <class T>
  void track(const JudgeOutcome<T>& o, GroupResult& out) const;

  VerifierConfig verifier_;
  RewardConfig reward_;
  JudgeGateway& gateway_;
  StepSplitter splitter_;
};

}  // namespace rankreward
