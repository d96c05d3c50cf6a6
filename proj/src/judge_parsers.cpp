#include "rankreward/judge_parsers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "rankreward/text.hpp"

namespace rankreward {

using nlohmann::json;

namespace {

// End of the balanced object starting at text[open] == '{', honoring JSON strings.
std::optional<std::size_t> balanced_end(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return i;
    }
  }
  return std::nullopt;
}

std::optional<json> try_parse_object(std::string_view s) {
  json j = json::parse(s, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

std::optional<json> scan(std::string_view text, const std::function<bool(const json&)>& accept) {
  for (std::size_t pos = text.find('{'); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
    const auto end = balanced_end(text, pos);
    if (!end) continue;
    if (auto j = try_parse_object(text.substr(pos, *end - pos + 1)); j && accept(*j)) return j;
  }
  return std::nullopt;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string repair(std::string_view raw) {
  std::string s(raw);
  replace_all(s, "\xE2\x80\x9C", "\"");  // left double quotation mark
  replace_all(s, "\xE2\x80\x9D", "\"");  // right double quotation mark
  std::string out;
  out.reserve(s.size());
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      out.push_back(c);
      if (c == '\\' && i + 1 < s.size()) {
        out.push_back(s[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && text::is_space(s[j])) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
    }
    out.push_back(c);
  }
  return out;
}

std::optional<long long> as_integer(const json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && std::floor(d) == d && std::abs(d) < 1e15) return static_cast<long long>(d);
  }
  return std::nullopt;
}

std::optional<double> as_number(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = text::trim(v.get_ref<const std::string&>());
    double d = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (ec == std::errc() && ptr == s.data() + s.size()) return d;
  }
  return std::nullopt;
}

}  // namespace

std::optional<json> find_json_object(std::string_view raw, const std::function<bool(const json&)>& accept) {
  if (auto j = try_parse_object(text::trim(raw)); j && accept(*j)) return j;
  if (auto j = scan(raw, accept)) return j;
  const std::string repaired = repair(raw);
  if (repaired != raw) {
    if (auto j = try_parse_object(text::trim(repaired)); j && accept(*j)) return j;
    return scan(repaired, accept);
  }
  return std::nullopt;
}

TierRanking parse_groupwise_ranking(std::string_view raw, int k, const IndexMap& index_map) {
  if (k < 2) throw std::invalid_argument("parse_groupwise_ranking: K must be at least 2");
  if (index_map.size() != static_cast<std::size_t>(k)) {
    throw std::invalid_argument("parse_groupwise_ranking: index map size differs from K");
  }
  const auto obj = find_json_object(raw, [](const json& j) {
    auto it = j.find("solutions");
    return it != j.end() && it->is_array();
  });
  if (!obj) throw JudgeParseError("no JSON object with a \"solutions\" array");

  std::map<long long, std::vector<int>> by_rank;
  std::vector<bool> seen(k + 1, false);
  for (const auto& entry : obj->at("solutions")) {
    if (!entry.is_object()) throw JudgeParseError("solutions entry is not an object");
    auto idx_it = entry.find("index");
    auto rank_it = entry.find("rank");
    if (idx_it == entry.end()) throw JudgeParseError("solutions entry without index");
    if (rank_it == entry.end()) throw JudgeParseError("solutions entry without rank");
    const auto index = as_integer(*idx_it);
    if (!index) throw JudgeParseError("non-integer index " + idx_it->dump());
    const auto rank = as_integer(*rank_it);
    if (!rank) throw JudgeParseError("non-integer rank " + rank_it->dump() + " for index " + std::to_string(*index));
    if (*index < 1 || *index > k) throw JudgeParseError("index " + std::to_string(*index) + " outside 1.." + std::to_string(k));
    if (seen[*index]) throw JudgeParseError("index " + std::to_string(*index) + " listed more than once");
    seen[*index] = true;
    by_rank[*rank].push_back(index_map.rollout_id(static_cast<int>(*index)));
  }
  for (int i = 1; i <= k; ++i) {
    if (!seen[i]) throw JudgeParseError("candidate " + std::to_string(i) + " missing from ranking");
  }
  std::vector<std::vector<int>> tiers;
  for (auto& [rank, ids] : by_rank) tiers.push_back(std::move(ids));
  return TierRanking::from_tiers(std::move(tiers));
}

std::string serialize_ranking(const TierRanking& ranking_over_indices) {
  std::vector<std::pair<int, int>> rows;
  for (std::size_t m = 0; m < ranking_over_indices.tier_count(); ++m) {
    for (int index : ranking_over_indices.tiers()[m]) rows.emplace_back(index, static_cast<int>(m + 1));
  }
  std::sort(rows.begin(), rows.end());
  nlohmann::ordered_json solutions = nlohmann::ordered_json::array();
  for (const auto& [index, rank] : rows) {
    solutions.push_back({{"index", index}, {"rank", rank}, {"justification", "tier " + std::to_string(rank)}});
  }
  return nlohmann::ordered_json{{"solutions", solutions}}.dump();
}

PointwiseScore parse_pointwise_score(std::string_view raw) {
  const auto obj = find_json_object(raw, [](const json& j) { return j.contains("judge_score"); });
  if (!obj) throw JudgeParseError("no JSON object with judge_score");
  const auto value = as_number(obj->at("judge_score"));
  if (!value || std::isnan(*value)) throw JudgeParseError("judge_score is not numeric: " + obj->at("judge_score").dump());

  PointwiseScore out;
  out.score = std::clamp(*value, 0.0, 1.0);
  out.clamped = out.score != *value;
  if (auto it = obj->find("reasoning_feedback"); it != obj->end() && it->is_string()) out.feedback = it->get<std::string>();
  return out;
}

int parse_prm_token(std::string_view raw) {
  const auto s = text::trim(raw);
  if (s.empty()) throw JudgeParseError("empty PRM reply");
  if (s.front() == '+') return 1;
  if (s.front() == '-') return 0;
  if (s.substr(0, 3) == "\xE2\x88\x92") return 0;  // U+2212 minus sign
  throw JudgeParseError("PRM reply must start with + or -, got '" + std::string(s.substr(0, 16)) + "'");
}

std::string_view to_string(ConsistencyVerdict v) {
  switch (v) {
    case ConsistencyVerdict::kConsistent: return "consistent";
    case ConsistencyVerdict::kInconsistent: return "inconsistent";
    case ConsistencyVerdict::kAbstain: return "abstain";
  }
  return "abstain";
}

ConsistencyVerdict parse_consistency_name(std::string_view name) {
  const std::string s = text::to_lower_ascii(text::trim(name));
  if (s == "consistent") return ConsistencyVerdict::kConsistent;
  if (s == "inconsistent") return ConsistencyVerdict::kInconsistent;
  if (s == "abstain" || s == "na" || s == "n/a") return ConsistencyVerdict::kAbstain;
  throw std::invalid_argument("unknown consistency verdict '" + std::string(name) + "'");
}

ConsistencyVerdict parse_consistency_verdict(std::string_view raw) {
  const auto obj = find_json_object(raw, [](const json& j) {
    auto it = j.find("verdict");
    return it != j.end() && it->is_string();
  });
  if (!obj) throw JudgeParseError("no JSON object with a verdict string");
  const std::string s = text::to_lower_ascii(text::trim(obj->at("verdict").get_ref<const std::string&>()));
  if (s == "consistent") return ConsistencyVerdict::kConsistent;
  if (s == "inconsistent") return ConsistencyVerdict::kInconsistent;
  if (s == "na" || s == "n/a") return ConsistencyVerdict::kAbstain;
  throw JudgeParseError("verdict must be consistent, inconsistent or na, got '" + s + "'");
}

}  // namespace rankreward
