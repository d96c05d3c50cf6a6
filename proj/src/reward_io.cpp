#include "rankreward/reward_io.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "rankreward/text.hpp"

namespace rankreward {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_finite(const GroupRewards& g) {
  for (const auto& b : g.rewards) {
    if (!std::isfinite(b.r_aux) || !std::isfinite(b.r_total) || !std::isfinite(b.advantage)) {
      throw std::domain_error("non-finite reward for prompt '" + g.prompt_id + "' rollout " +
                              std::to_string(b.rollout_id));
    }
  }
}

double number_field(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) throw SchemaError(path + "." + key, "expected a number");
  return it->get<double>();
}

}  // namespace

ordered_json to_json(const RewardBreakdown& b) {
  ordered_json j;
  j["rollout_id"] = b.rollout_id;
  j["r_ver"] = b.r_ver;
  j["r_aux"] = b.r_aux;
  j["aux_kind"] = std::string(to_string(b.aux_kind));
  j["r_total"] = b.r_total;
  j["advantage"] = b.advantage;
  return j;
}

ordered_json to_json(const GroupRewards& g) {
  ordered_json j;
  j["prompt_id"] = g.prompt_id;
  ordered_json rs = ordered_json::array();
  for (const auto& b : g.rewards) rs.push_back(to_json(b));
  j["rewards"] = std::move(rs);
  return j;
}

GroupRewards group_rewards_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("$", "expected an object");
  GroupRewards g;
  auto pid = j.find("prompt_id");
  if (pid == j.end() || !pid->is_string()) throw SchemaError(".prompt_id", "expected a string");
  g.prompt_id = pid->get<std::string>();
  auto rs = j.find("rewards");
  if (rs == j.end() || !rs->is_array()) throw SchemaError(".rewards", "expected an array");
  for (std::size_t i = 0; i < rs->size(); ++i) {
    const json& r = (*rs)[i];
    const std::string path = ".rewards[" + std::to_string(i) + "]";
    if (!r.is_object()) throw SchemaError(path, "expected an object");
    RewardBreakdown b;
    auto id = r.find("rollout_id");
    if (id == r.end() || !id->is_number_integer()) throw SchemaError(path + ".rollout_id", "expected an integer");
    b.rollout_id = id->get<int>();
    auto ver = r.find("r_ver");
    if (ver == r.end() || !ver->is_number_integer() || (ver->get<int>() != 0 && ver->get<int>() != 1)) {
      throw SchemaError(path + ".r_ver", "expected 0 or 1");
    }
    b.r_ver = ver->get<int>();
    b.r_aux = number_field(r, "r_aux", path);
    auto kind = r.find("aux_kind");
    if (kind == r.end() || !kind->is_string()) throw SchemaError(path + ".aux_kind", "expected a string");
    try {
      b.aux_kind = parse_aux_kind(kind->get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw SchemaError(path + ".aux_kind", e.what());
    }
    b.r_total = number_field(r, "r_total", path);
    b.advantage = number_field(r, "advantage", path);
    g.rewards.push_back(b);
  }
  return g;
}

std::string reward_line(const GroupRewards& g) {
  check_finite(g);
  return to_json(g).dump();
}

void write_reward_jsonl(std::span<const GroupRewards> batch, std::ostream& out) {
  for (const auto& g : batch) check_finite(g);
  for (const auto& g : batch) out << to_json(g).dump() << '\n';
}

std::vector<GroupRewards> read_reward_jsonl(std::istream& in) {
  std::vector<GroupRewards> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(group_rewards_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw SchemaError("line " + std::to_string(line_no), e.what());
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + e.path(), e.what());
    }
  }
  return out;
}

}  // namespace rankreward
