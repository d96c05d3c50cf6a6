#include "rankreward/reward_engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace rankreward {

namespace {

// Neumaier-compensated sum; keeps group means stable for long tails of small values.
double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string_view to_string(AuxKind kind) {
  switch (kind) {
    case AuxKind::kPrm: return "prm";
    case AuxKind::kGrPointwise: return "gr_pointwise";
    case AuxKind::kRankGroupwise: return "rank_groupwise";
  }
  return "unknown";
}

AuxKind parse_aux_kind(std::string_view name) {
  if (name == "prm") return AuxKind::kPrm;
  if (name == "gr_pointwise") return AuxKind::kGrPointwise;
  if (name == "rank_groupwise") return AuxKind::kRankGroupwise;
  throw std::invalid_argument("unknown aux_kind '" + std::string(name) +
                              "' (expected prm, gr_pointwise or rank_groupwise)");
}

std::string_view to_string(Mapping::Kind kind) {
  switch (kind) {
    case Mapping::Kind::kPcs: return "pcs";
    case Mapping::Kind::kEdn: return "edn";
    case Mapping::Kind::kTrs: return "trs";
    case Mapping::Kind::kIrn: return "irn";
  }
  return "unknown";
}

Mapping::Kind parse_mapping_kind(std::string_view name) {
  if (name == "pcs") return Mapping::Kind::kPcs;
  if (name == "edn") return Mapping::Kind::kEdn;
  if (name == "trs") return Mapping::Kind::kTrs;
  if (name == "irn") return Mapping::Kind::kIrn;
  throw std::invalid_argument("unknown mapping '" + std::string(name) + "' (expected pcs, edn, trs or irn)");
}

std::string_view to_string(AuxStatus status) {
  switch (status) {
    case AuxStatus::kScored: return "scored";
    case AuxStatus::kNotApplicable: return "not_applicable";
    case AuxStatus::kFallback: return "fallback";
    case AuxStatus::kParseFailed: return "parse_failed";
  }
  return "unknown";
}

void Mapping::validate() const {
  if (kind == Kind::kEdn && !(edn_gamma > 0.0 && edn_gamma < 1.0)) {
    throw std::invalid_argument("edn_gamma must lie strictly inside (0, 1)");
  }
}

void RewardConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) throw std::invalid_argument("lambda must be finite and >= 0");
  if (!std::isfinite(eps_a) || eps_a <= 0.0) throw std::invalid_argument("eps_A must be finite and > 0");
  if (!std::isfinite(pointwise_fallback_score) || pointwise_fallback_score < 0.0 ||
      pointwise_fallback_score > 1.0) {
    throw std::invalid_argument("pointwise_fallback_score must lie in [0, 1]");
  }
  mapping.validate();
}

// ---------------------------------------------------------------------------
// TierRanking

TierRanking TierRanking::from_tiers(std::vector<std::vector<int>> tiers) {
  std::vector<int> all;
  for (const auto& t : tiers) all.insert(all.end(), t.begin(), t.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return TierRanking(std::move(tiers), std::move(all));
}

TierRanking::TierRanking(std::vector<std::vector<int>> tiers, std::vector<int> passed_set)
    : tiers_(std::move(tiers)), passed_(std::move(passed_set)) {
  if (tiers_.empty()) throw RankingError("ranking has no tiers");
  std::set<int> seen;
  for (auto& t : tiers_) {
    if (t.empty()) throw RankingError("ranking contains an empty tier");
    std::sort(t.begin(), t.end());
    for (int id : t) {
      if (!seen.insert(id).second) throw RankingError("rollout " + std::to_string(id) + " appears in two tiers");
    }
  }
  std::sort(passed_.begin(), passed_.end());
  if (std::adjacent_find(passed_.begin(), passed_.end()) != passed_.end()) {
    throw RankingError("passed set contains duplicates");
  }
  if (!std::equal(seen.begin(), seen.end(), passed_.begin(), passed_.end())) {
    throw RankingError("union of tiers differs from the passed set");
  }
}

std::size_t TierRanking::tier_of(int id) const {
  for (std::size_t m = 0; m < tiers_.size(); ++m) {
    if (std::binary_search(tiers_[m].begin(), tiers_[m].end(), id)) return m;
  }
  throw RankingError("rollout " + std::to_string(id) + " is not ranked");
}

// ---------------------------------------------------------------------------
// Numerical core

double prm_aggregate(std::span<const int> step_scores) {
  if (step_scores.empty()) throw std::invalid_argument("prm_aggregate: trajectory has no scored steps");
  long long passed = 0;
  for (int s : step_scores) {
    if (s != 0 && s != 1) throw std::invalid_argument("prm_aggregate: step score must be 0 or 1");
    passed += s;
  }
  return static_cast<double>(passed) / static_cast<double>(step_scores.size());
}

std::map<int, double> raw_scores(const TierRanking& ranking, const Mapping& mapping) {
  mapping.validate();
  const std::size_t k = ranking.size();
  if (k < 2) throw RankingError("raw_scores requires at least two verifier-passed rollouts");

  const auto& tiers = ranking.tiers();
  const std::size_t m_count = tiers.size();
  std::map<int, double> out;

  // Rollouts strictly below tier m, accumulated from the bottom.
  std::vector<std::size_t> below(m_count, 0);
  for (std::size_t m = m_count - 1; m > 0; --m) below[m - 1] = below[m] + tiers[m].size();

  for (std::size_t m = 0; m < m_count; ++m) {
    double score = 0.0;
    switch (mapping.kind) {
      case Mapping::Kind::kPcs: {
        // (b + c/2) / (K - 1) as a single rounding of (2b + c) / (2(K - 1)).
        const double twice_points = 2.0 * static_cast<double>(below[m]) + static_cast<double>(tiers[m].size() - 1);
        score = twice_points / (2.0 * static_cast<double>(k - 1));
        break;
      }
      case Mapping::Kind::kEdn: {
        if (m_count == 1) {
          score = 0.5;
        } else {
          const double lowest = std::pow(mapping.edn_gamma, static_cast<double>(m_count - 1));
          const double value = std::pow(mapping.edn_gamma, static_cast<double>(m));
          score = (value - lowest) / (1.0 - lowest);
        }
        break;
      }
      case Mapping::Kind::kTrs: {
        score = m_count == 1 ? 0.5
                             : static_cast<double>(m_count - 1 - m) / static_cast<double>(m_count - 1);
        break;
      }
      case Mapping::Kind::kIrn: {
        // (1/r - 1/M) / (1 - 1/M) with r = m + 1, reduced to (M - r) / (r (M - 1)).
        const double r = static_cast<double>(m + 1);
        const double M = static_cast<double>(m_count);
        score = m_count == 1 ? 0.5 : (M - r) / (r * (M - 1.0));
        break;
      }
    }
    for (int id : tiers[m]) out[id] = score;
  }
  return out;
}

std::map<int, double> center_rewards(const std::map<int, double>& raw, std::span<const int> passed_set) {
  std::set<int> passed(passed_set.begin(), passed_set.end());
  if (passed.size() != passed_set.size()) throw RankingError("passed set contains duplicates");
  if (raw.size() != passed.size() ||
      !std::equal(raw.begin(), raw.end(), passed.begin(), [](const auto& kv, int id) { return kv.first == id; })) {
    throw RankingError("raw scores must be defined exactly on the passed set");
  }

  std::map<int, double> out;
  if (passed.size() < 2) {
    for (int id : passed) out[id] = 0.0;
    return out;
  }

  std::vector<double> values;
  values.reserve(raw.size());
  for (const auto& [id, v] : raw) values.push_back(v);
  const bool all_equal = std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
  const double mean = all_equal ? values.front() : compensated_sum(values) / static_cast<double>(values.size());
  for (const auto& [id, v] : raw) out[id] = v - mean;
  return out;
}

std::map<int, double> rank_rewards(const TierRanking& ranking, const Mapping& mapping) {
  if (ranking.size() < 2) {
    std::map<int, double> zeros;
    for (int id : ranking.passed_set()) zeros[id] = 0.0;
    return zeros;
  }
  return center_rewards(raw_scores(ranking, mapping), ranking.passed_set());
}

double combine_reward(int r_ver, double r_aux, double lambda) {
  if (r_ver != 0 && r_ver != 1) throw std::invalid_argument("r_ver must be 0 or 1");
  if (!std::isfinite(r_aux) || !std::isfinite(lambda)) {
    throw std::invalid_argument("combine_reward: non-finite input");
  }
  if (lambda < 0.0) throw std::invalid_argument("combine_reward: lambda must be >= 0");
  return static_cast<double>(r_ver) + lambda * r_aux;
}

std::vector<double> grpo_advantages(std::span<const double> totals, double eps_a) {
  if (totals.empty()) throw std::invalid_argument("grpo_advantages: empty reward list");
  if (!(eps_a > 0.0)) throw std::invalid_argument("grpo_advantages: eps_A must be > 0");
  for (double r : totals) {
    if (!std::isfinite(r)) throw std::invalid_argument("grpo_advantages: non-finite reward");
  }

  std::vector<double> out(totals.size(), 0.0);
  const auto [lo, hi] = std::minmax_element(totals.begin(), totals.end());
  if (*lo == *hi) return out;

  const double n = static_cast<double>(totals.size());
  const double mean = compensated_sum(totals) / n;
  std::vector<double> centered(totals.size());
  std::vector<double> squares(totals.size());
  for (std::size_t i = 0; i < totals.size(); ++i) {
    centered[i] = totals[i] - mean;
    squares[i] = centered[i] * centered[i];
  }
  const double stdev = std::sqrt(compensated_sum(squares) / n);
  for (std::size_t i = 0; i < totals.size(); ++i) out[i] = centered[i] / (stdev + eps_a);
  return out;
}

// ---------------------------------------------------------------------------
// Group composition

GroupScore score_group(const RolloutGroup& group, const JudgeVerdicts& verdicts, const RewardConfig& config) {
  config.validate();
  const std::size_t n = group.rollouts.size();
  if (n == 0) throw std::invalid_argument("score_group: group has no rollouts");

  std::vector<int> r_ver(n);
  std::vector<int> passed_ids;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = group.rollouts[i];
    if (!r.verifier_pass) {
      throw std::invalid_argument("score_group: rollout " + std::to_string(r.rollout_id) + " was not verified");
    }
    r_ver[i] = *r.verifier_pass ? 1 : 0;
    if (r_ver[i] == 1) passed_ids.push_back(r.rollout_id);
  }
  std::sort(passed_ids.begin(), passed_ids.end());

  std::vector<double> r_aux(n, 0.0);
  std::vector<AuxStatus> status(n, AuxStatus::kNotApplicable);

  auto expect_kind = [&](AuxKind kind) {
    if (config.aux_kind != kind) {
      throw std::invalid_argument("score_group: verdicts do not match aux_kind " +
                                  std::string(to_string(config.aux_kind)));
    }
  };
  auto expect_size = [&](std::size_t size) {
    if (size != n) throw std::invalid_argument("score_group: verdict count differs from rollout count");
  };

  std::visit(overloaded{
                 [&](const PrmVerdicts& v) {
                   expect_kind(AuxKind::kPrm);
                   expect_size(v.per_rollout.size());
                   for (std::size_t i = 0; i < n; ++i) {
                     if (v.per_rollout[i]) {
                       r_aux[i] = prm_aggregate(*v.per_rollout[i]);
                       status[i] = AuxStatus::kScored;
                     } else {
                       status[i] = AuxStatus::kFallback;
                     }
                   }
                 },
                 [&](const PointwiseVerdicts& v) {
                   expect_kind(AuxKind::kGrPointwise);
                   expect_size(v.per_rollout.size());
                   for (std::size_t i = 0; i < n; ++i) {
                     if (config.pointwise_passed_only && r_ver[i] == 0) continue;
                     if (const auto& s = v.per_rollout[i]) {
                       if (!std::isfinite(*s) || *s < 0.0 || *s > 1.0) {
                         throw std::invalid_argument("score_group: pointwise score outside [0, 1]");
                       }
                       r_aux[i] = *s;
                       status[i] = AuxStatus::kScored;
                     } else {
                       r_aux[i] = config.pointwise_fallback_score;
                       status[i] = AuxStatus::kFallback;
                     }
                   }
                 },
                 [&](const RankVerdict& v) {
                   expect_kind(AuxKind::kRankGroupwise);
                   if (v.parse_failed) {
                     for (std::size_t i = 0; i < n; ++i) {
                       if (r_ver[i] == 1 && passed_ids.size() >= 2) status[i] = AuxStatus::kParseFailed;
                     }
                     return;
                   }
                   if (!v.ranking) {
                     if (passed_ids.size() >= 2) throw RankingError("score_group: ranking missing for K >= 2");
                     return;
                   }
                   if (v.ranking->passed_set() != passed_ids) {
                     throw RankingError("score_group: ranking does not cover exactly the verifier-passed rollouts");
                   }
                   const auto rewards = rank_rewards(*v.ranking, config.mapping);
                   for (std::size_t i = 0; i < n; ++i) {
                     if (r_ver[i] == 0) continue;
                     r_aux[i] = rewards.at(group.rollouts[i].rollout_id);
                     if (passed_ids.size() >= 2) status[i] = AuxStatus::kScored;
                   }
                 },
             },
             verdicts);

  GroupScore out;
  out.prompt_id = group.prompt.prompt_id;
  std::vector<double> totals(n);
  for (std::size_t i = 0; i < n; ++i) totals[i] = combine_reward(r_ver[i], r_aux[i], config.lambda);
  const auto adv = grpo_advantages(totals, config.eps_a);
  out.rewards.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.rewards.push_back({group.rollouts[i].rollout_id, r_ver[i], r_aux[i], config.aux_kind, totals[i], adv[i]});
  }
  out.status = std::move(status);
  return out;
}

}  // namespace rankreward
