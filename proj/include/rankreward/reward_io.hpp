#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankreward/reward_engine.hpp"

namespace rankreward {

/// One output line of the reward JSONL exchange format.
struct GroupRewards {
  std::string prompt_id;
  std::vector<RewardBreakdown> rewards;

  bool operator==(const GroupRewards&) const = default;
};

nlohmann::ordered_json to_json(const RewardBreakdown& b);
nlohmann::ordered_json to_json(const GroupRewards& g);
GroupRewards group_rewards_from_json(const nlohmann::json& j);

/// Serializes one group without a trailing newline. Throws std::domain_error on non-finite values.
std::string reward_line(const GroupRewards& g);

/// Validates the whole batch first, so a rejected batch writes nothing.
void write_reward_jsonl(std::span<const GroupRewards> batch, std::ostream& out);

/// Inverse of write_reward_jsonl. Throws SchemaError naming the line on malformed input.
std::vector<GroupRewards> read_reward_jsonl(std::istream& in);

}  // namespace rankreward
