#include "rankreward/pipeline.hpp"

#include <spdlog/spdlog.h>

namespace rankreward {

RewardPipeline::RewardPipeline(VerifierConfig verifier, RewardConfig reward, JudgeGateway& gateway,
                               StepSplitter splitter)
    : verifier_(std::move(verifier)), reward_(std::move(reward)), gateway_(gateway), splitter_(splitter) {
  verifier_.validate();
  reward_.validate();
}

template <class T>
void RewardPipeline::track(const JudgeOutcome<T>& o, GroupResult& out) const {
  ++out.judge_calls;
  out.transcript_ids.push_back(o.transcript_id);
  if (o.failure == JudgeFailure::kParse) ++out.parse_failures;
  if (o.failure == JudgeFailure::kTransport || o.failure == JudgeFailure::kTimeout) ++out.transport_failures;
}

JudgeVerdicts RewardPipeline::judge_rank(const RolloutGroup& verified, GroupResult& out) const {
  std::vector<Candidate> candidates;
  for (const auto& r : verified.rollouts) {
    if (*r.verifier_pass) candidates.push_back({r.rollout_id, textualize_response(r.trajectory, r.boxed_answer)});
  }
  if (candidates.size() < 2) {
    // Nothing to compare: the single passed rollout (if any) gets rank reward 0.
    if (candidates.size() == 1) return RankVerdict{TierRanking::from_tiers({{candidates[0].rollout_id}}), false};
    return RankVerdict{};
  }
  const auto prompt = render_groupwise_prompt(textualize_question(verified.prompt), verified.prompt.reference_answer,
                                              candidates);
  const int k = static_cast<int>(candidates.size());
  const auto outcome = gateway_.ask(JudgeRequest::single_user(RequestKind::kGroupwise, prompt.text),
                                    [&](const std::string& raw) { return parse_groupwise_ranking(raw, k, prompt.index_map); });
  track(outcome, out);
  if (!outcome.ok()) {
    out.ranking_failed = true;
    out.ranking_failure = outcome.failure;
    spdlog::warn("group {}: ranking unusable ({}), rank rewards zeroed", verified.prompt.prompt_id, outcome.error);
    return RankVerdict{std::nullopt, true};
  }
  out.ranking = *outcome.value;
  return RankVerdict{*outcome.value, false};
}

JudgeVerdicts RewardPipeline::judge_pointwise(const RolloutGroup& verified, GroupResult& out) const {
  PointwiseVerdicts v;
  const std::string question = textualize_question(verified.prompt);
  for (const auto& r : verified.rollouts) {
    if (reward_.pointwise_passed_only && !*r.verifier_pass) {
      v.per_rollout.emplace_back();
      continue;
    }
    const auto prompt = render_pointwise_prompt(question, textualize_response(r.trajectory, r.boxed_answer));
    const auto outcome = gateway_.ask(JudgeRequest::single_user(RequestKind::kPointwise, prompt),
                                      [](const std::string& raw) { return parse_pointwise_score(raw); });
    track(outcome, out);
    if (outcome.ok()) {
      if (outcome.value->clamped) gateway_.transcripts().add_flag(outcome.transcript_id, "score_clamped");
      v.per_rollout.emplace_back(outcome.value->score);
    } else {
      gateway_.transcripts().add_flag(outcome.transcript_id, "fallback_score");
      v.per_rollout.emplace_back();
    }
  }
  return v;
}

JudgeVerdicts RewardPipeline::judge_prm(const RolloutGroup& verified, GroupResult& out) const {
  PrmVerdicts v;
  const std::string question = textualize_question(verified.prompt);
  for (const auto& r : verified.rollouts) {
    const auto steps = split_steps(r.trajectory, splitter_);
    std::optional<std::vector<int>> scores;
    if (!steps.empty()) {
      scores.emplace();
      for (std::size_t t = 1; t <= steps.size(); ++t) {
        const std::vector<std::string> prefix(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(t));
        const auto outcome = gateway_.ask(JudgeRequest{RequestKind::kPrmStep, render_prm_turns(question, prefix)},
                                          [](const std::string& raw) { return parse_prm_token(raw); });
        track(outcome, out);
        if (!outcome.ok()) {
          scores.reset();
          break;
        }
        scores->push_back(*outcome.value);
      }
    }
    v.per_rollout.push_back(std::move(scores));
  }
  return v;
}

GroupResult RewardPipeline::score(const RolloutGroup& group) const {
  const RolloutGroup verified = verify_group(group, verifier_);
  GroupResult out;
  JudgeVerdicts verdicts;
  switch (reward_.aux_kind) {
    case AuxKind::kRankGroupwise: verdicts = judge_rank(verified, out); break;
    case AuxKind::kGrPointwise: verdicts = judge_pointwise(verified, out); break;
    case AuxKind::kPrm: verdicts = judge_prm(verified, out); break;
  }
  out.score = score_group(verified, verdicts, reward_);
  return out;
}

nlohmann::ordered_json to_json(const GroupResult& r) {
  nlohmann::ordered_json j = to_json(r.rewards());
  nlohmann::ordered_json status = nlohmann::ordered_json::array();
  for (auto s : r.score.status) status.push_back(to_string(s));
  j["aux_status"] = std::move(status);
  j["ranking"] = r.ranking ? nlohmann::ordered_json(r.ranking->tiers()) : nlohmann::ordered_json(nullptr);
  j["ranking_failed"] = r.ranking_failed;
  if (r.ranking_failed) j["ranking_failure"] = to_string(r.ranking_failure);
  j["judge_calls"] = r.judge_calls;
  j["parse_failures"] = r.parse_failures;
  j["transport_failures"] = r.transport_failures;
  j["transcript_ids"] = r.transcript_ids;
  return j;
}

}  // namespace rankreward
