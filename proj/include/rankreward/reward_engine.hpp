#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rankreward/rollout.hpp"

namespace rankreward {

enum class AuxKind { kPrm, kGrPointwise, kRankGroupwise };

std::string_view to_string(AuxKind kind);
/// Accepts "prm", "gr_pointwise", "rank_groupwise". Throws std::invalid_argument otherwise.
AuxKind parse_aux_kind(std::string_view name);

/// Raised when a TierRanking or a verdict set violates its contract.
class RankingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered tie-aware tiers over verifier-passed rollout ids; tiers()[0] is the best tier.
class TierRanking {
 public:
  /// Passed set is the union of the tiers.
  static TierRanking from_tiers(std::vector<std::vector<int>> tiers);

  /// Validates: at least one tier, no empty tier, tiers disjoint, union == passed_set.
  TierRanking(std::vector<std::vector<int>> tiers, std::vector<int> passed_set);

  const std::vector<std::vector<int>>& tiers() const { return tiers_; }
  /// Sorted ascending.
  const std::vector<int>& passed_set() const { return passed_; }
  std::size_t tier_count() const { return tiers_.size(); }
  std::size_t size() const { return passed_.size(); }
  /// 0-based tier position of `id`; throws RankingError if absent.
  std::size_t tier_of(int id) const;

  bool operator==(const TierRanking&) const = default;

 private:
  std::vector<std::vector<int>> tiers_;  // each tier sorted ascending
  std::vector<int> passed_;
};

/// Rank-to-score mapping applied to a TierRanking before centering.
struct Mapping {
  enum class Kind { kPcs, kEdn, kTrs, kIrn };
  Kind kind = Kind::kPcs;
  double edn_gamma = 0.5;  // decay base for kEdn, strictly inside (0, 1)

  static Mapping pcs() { return {Kind::kPcs, 0.5}; }
  static Mapping edn(double gamma = 0.5) { return {Kind::kEdn, gamma}; }
  static Mapping trs() { return {Kind::kTrs, 0.5}; }
  static Mapping irn() { return {Kind::kIrn, 0.5}; }

  void validate() const;
  bool operator==(const Mapping&) const = default;
};

std::string_view to_string(Mapping::Kind kind);
/// "pcs" | "edn" | "trs" | "irn"; throws std::invalid_argument otherwise.
Mapping::Kind parse_mapping_kind(std::string_view name);

struct RewardConfig {
  double lambda = 1.0;
  double eps_a = 1e-4;
  Mapping mapping;
  AuxKind aux_kind = AuxKind::kRankGroupwise;
  bool pointwise_passed_only = false;     // gr_pointwise: leave verifier-failed rollouts at r_aux = 0
  double pointwise_fallback_score = 0.0;  // used when the judge never produced a score

  void validate() const;
};

/// Per-rollout reward record exchanged with the trainer.
struct RewardBreakdown {
  int rollout_id = 0;
  int r_ver = 0;
  double r_aux = 0.0;
  AuxKind aux_kind = AuxKind::kRankGroupwise;
  double r_total = 0.0;
  double advantage = 0.0;

  bool operator==(const RewardBreakdown&) const = default;
};

/// Mean of binary step scores. Throws std::invalid_argument on an empty list
/// or a score outside {0, 1}.
double prm_aggregate(std::span<const int> step_scores);

/// Raw scores in [0, 1] for every id in ranking.passed_set(). Requires K >= 2.
std::map<int, double> raw_scores(const TierRanking& ranking, const Mapping& mapping);

/// Subtracts the mean over `passed_set`. Returns a map over `passed_set` that is
/// all zeros when |passed_set| < 2. Throws RankingError if raw's keys differ from passed_set.
std::map<int, double> center_rewards(const std::map<int, double>& raw, std::span<const int> passed_set);

/// centered(raw_scores(...)), or zeros when K < 2.
std::map<int, double> rank_rewards(const TierRanking& ranking, const Mapping& mapping);

/// r_ver + lambda * r_aux. Throws std::invalid_argument on non-finite input,
/// r_ver outside {0, 1} or negative lambda.
double combine_reward(int r_ver, double r_aux, double lambda);

/// (R_i - mean) / (population std + eps_a), order preserved.
std::vector<double> grpo_advantages(std::span<const double> totals, double eps_a);

/// Where a rollout's auxiliary reward came from.
enum class AuxStatus {
  kScored,        // judge verdict used
  kNotApplicable, // rank mode: failed verifier, or K < 2
  kFallback,      // judge exhausted; configured fallback used
  kParseFailed,   // rank mode: ranking unusable, group zeroed
};

std::string_view to_string(AuxStatus status);

/// Per-rollout verdict lists are aligned with group.rollouts.
struct PrmVerdicts {
  std::vector<std::optional<std::vector<int>>> per_rollout;  // nullopt: judge failed or no steps
};
struct PointwiseVerdicts {
  std::vector<std::optional<double>> per_rollout;  // nullopt: judge failed or not requested
};
struct RankVerdict {
  std::optional<TierRanking> ranking;  // nullopt: K < 2, or judge output unusable
  bool parse_failed = false;
};
using JudgeVerdicts = std::variant<PrmVerdicts, PointwiseVerdicts, RankVerdict>;

struct GroupScore {
  std::string prompt_id;
  std::vector<RewardBreakdown> rewards;  // same order as group.rollouts
  std::vector<AuxStatus> status;
};

/// Combines verifier outcomes (group.rollouts[i].verifier_pass, required) with the
/// auxiliary verdicts and standardizes totals into advantages.
GroupScore score_group(const RolloutGroup& group, const JudgeVerdicts& verdicts, const RewardConfig& config);

}  // namespace rankreward
