#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankreward/judge_gateway.hpp"
#include "rankreward/mock_judge.hpp"
#include "rankreward/reward_engine.hpp"
#include "rankreward/rollout.hpp"

namespace rankreward {

struct StabilityRunConfig {
  std::size_t n_prompts = 500;
  std::size_t rollouts_per_prompt = 8;
  std::size_t repeats = 4;
  double temperature = 0.7;
  std::vector<AuxKind> schemes{AuxKind::kGrPointwise, AuxKind::kRankGroupwise};
  std::uint64_t seed = 0;
  int workers = 4;

  void validate() const;
};

/// Stand-in for a stochastic judge. Each rollout has a latent quality in [0, 1].
struct SyntheticJudgeModel {
  double sigma_p = 0.15;           // pointwise: score = clamp(q + N(0, sigma_p))
  double p_swap = 0.1;             // groupwise: per adjacent tier pair, per call
  double pass_probability = 0.75;  // chance each synthetic rollout answers correctly
  double quality_step = 0.1;       // latent qualities are multiples of this (creates ties)
  std::uint64_t seed = 0;

  void validate() const;
};

/// Fixed groups plus the latent quality of every rollout, keyed by the
/// marker embedded in its text ("synthetic-<prompt>-<rollout>").
struct SyntheticWorld {
  std::vector<RolloutGroup> groups;
  std::map<std::string, double> quality;
};

SyntheticWorld make_synthetic_world(std::size_t n_prompts, std::size_t rollouts, const SyntheticJudgeModel& model);

/// Answers pointwise and groupwise prompts built from a SyntheticWorld.
/// The noise for a call depends only on (seed, request fingerprint, how many
/// times that fingerprint was seen), so a fixed call order per prompt gives
/// identical output regardless of thread interleaving across prompts.
class SyntheticJudgeClient final : public InstrumentedJudgeClient {
 public:
  SyntheticJudgeClient(SyntheticJudgeModel model, std::map<std::string, double> quality);

 protected:
  std::string reply(const JudgeRequest& request, const JudgeEndpointConfig& config) override;

 private:
  std::uint64_t next_stream(const std::string& fingerprint);
  double quality_of(const std::string& text) const;

  SyntheticJudgeModel model_;
  std::map<std::string, double> quality_;
  std::mutex mu_;
  std::map<std::string, std::uint64_t> seen_;
};

/// r_aux per [prompt x rollout x repeat]; nullopt marks a failed judge cell.
class RewardTensor {
 public:
  RewardTensor() = default;
  RewardTensor(AuxKind scheme, std::vector<std::string> prompt_ids, std::size_t rollouts, std::size_t repeats);

  AuxKind scheme() const { return scheme_; }
  const std::vector<std::string>& prompt_ids() const { return prompt_ids_; }
  std::size_t prompts() const { return prompt_ids_.size(); }
  std::size_t rollouts() const { return rollouts_; }
  std::size_t repeats() const { return repeats_; }

  std::optional<double>& at(std::size_t p, std::size_t r, std::size_t k);
  const std::optional<double>& at(std::size_t p, std::size_t r, std::size_t k) const;
  std::size_t failed_cells() const;

  bool operator==(const RewardTensor&) const = default;

 private:
  AuxKind scheme_ = AuxKind::kGrPointwise;
  std::vector<std::string> prompt_ids_;
  std::size_t rollouts_ = 0;
  std::size_t repeats_ = 0;
  std::vector<std::optional<double>> cells_;
};

/// Runs the full reward pipeline `config.repeats` times per group on the same rollouts.
/// Groups must all have `config.rollouts_per_prompt` rollouts.
RewardTensor run_repeats(const std::vector<RolloutGroup>& groups, AuxKind scheme, const StabilityRunConfig& config,
                         JudgeGateway& gateway, RewardConfig reward = {});

double population_variance(const std::vector<double>& values);

struct VarianceSummary {
  double mean_variance = 0.0;
  std::size_t valid_cells = 0;
  std::size_t excluded_cells = 0;  // fewer than two valid repeats
};

/// Mean over (prompt, rollout) of the population variance across repeats.
/// Throws std::invalid_argument when every cell is excluded.
VarianceSummary mean_reward_variance(const RewardTensor& tensor);

struct StabilityReport {
  std::map<std::string, VarianceSummary> per_scheme;  // keyed by scheme name
  std::optional<double> reduction;                    // (v_point - v_group) / v_point
  std::size_t n_prompts = 0, rollouts = 0, repeats = 0;
  std::uint64_t seed = 0;
};

/// Builds the report from tensors over the same groups; throws on mismatched shapes or prompt ids.
StabilityReport summarize_stability(const std::vector<RewardTensor>& tensors, std::uint64_t seed);

struct StabilityRun {
  StabilityReport report;
  std::vector<RewardTensor> tensors;
};

/// Runs every configured scheme on identical groups through one client.
StabilityRun compare_schemes(const std::vector<RolloutGroup>& groups, const StabilityRunConfig& config,
                             std::shared_ptr<JudgeClient> client, JudgeEndpointConfig endpoint);

/// Synthetic world + synthetic judge, end to end.
StabilityRun run_synthetic_stability(const StabilityRunConfig& config, const SyntheticJudgeModel& model);

nlohmann::ordered_json to_json(const StabilityReport& r);
std::string format_table(const StabilityReport& r);

/// One line per (scheme, prompt, rollout): {"scheme","prompt_id","rollout","repeats":[...|null]}.
void write_tensor_jsonl(const RewardTensor& t, std::ostream& out);
std::vector<RewardTensor> read_tensor_jsonl(std::istream& in);

}  // namespace rankreward
