#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "rankreward/reward_engine.hpp"
#include "rankreward/templates.hpp"

namespace rankreward {

/// Judge output that does not satisfy the expected contract. Retried upstream.
class JudgeParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// First JSON object in `raw` for which `accept` holds. The whole text is tried
/// as strict JSON first, then every balanced {...} span left to right (so code
/// fences and prose around the object are ignored), then the same scan after a
/// repair pass for trailing commas and typographic quotes.
std::optional<nlohmann::json> find_json_object(std::string_view raw,
                                               const std::function<bool(const nlohmann::json&)>& accept);

/// Tiers over rollout ids. Every index 1..K must appear once with an integer
/// rank; equal ranks tie, lower ranks are better, gaps are allowed.
TierRanking parse_groupwise_ranking(std::string_view raw, int k, const IndexMap& index_map);

/// Inverse of parse_groupwise_ranking for a ranking over indices 1..K
/// (tier m gets rank m + 1).
std::string serialize_ranking(const TierRanking& ranking_over_indices);

struct PointwiseScore {
  double score = 0.0;  // in [0, 1]
  bool clamped = false;
  std::string feedback;
};

PointwiseScore parse_pointwise_score(std::string_view raw);

/// '+' -> 1; '-' or U+2212 -> 0, judged on the first non-whitespace character.
int parse_prm_token(std::string_view raw);

enum class ConsistencyVerdict { kConsistent, kInconsistent, kAbstain };

std::string_view to_string(ConsistencyVerdict v);
/// "consistent" | "inconsistent" | "abstain" (also accepts "na").
ConsistencyVerdict parse_consistency_name(std::string_view name);

/// Reads {"verdict": "consistent" | "inconsistent" | "na"}; "na" is abstain.
ConsistencyVerdict parse_consistency_verdict(std::string_view raw);

}  // namespace rankreward
