#include "rankreward/rollout.hpp"

#include <istream>
#include <set>
#include <unordered_map>

#include "rankreward/text.hpp"

namespace rankreward {

using nlohmann::json;

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kBoxed = "\\boxed";

struct BoxSpan {
  std::size_t start;          // index of the backslash
  std::size_t content_begin;  // one past the opening brace
  std::size_t content_end;    // index of the matching closing brace
};

// Every balanced \boxed{...} at top level, left to right. Escaped braces
// (\{ and \}) are literal and do not change depth.
std::vector<BoxSpan> find_boxed_spans(std::string_view text, bool& unbalanced) {
  std::vector<BoxSpan> spans;
  std::size_t pos = 0;
  while ((pos = text.find(kBoxed, pos)) != std::string_view::npos) {
    std::size_t i = pos + kBoxed.size();
    while (i < text.size() && text[i] == ' ') ++i;
    if (i >= text.size() || text[i] != '{') {
      pos += kBoxed.size();
      continue;
    }
    int depth = 0;
    std::size_t j = i;
    bool closed = false;
    for (; j < text.size(); ++j) {
      const char c = text[j];
      if (c == '\\' && j + 1 < text.size() && (text[j + 1] == '{' || text[j + 1] == '}')) {
        ++j;
        continue;
      }
      if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        closed = true;
        break;
      }
    }
    if (!closed) {
      unbalanced = true;
      pos += kBoxed.size();
      continue;
    }
    spans.push_back({pos, i + 1, j});
    pos = j + 1;
  }
  return spans;
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key, "required field missing");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path,
                           bool nonempty) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) throw SchemaError(path + "." + key, "expected a string");
  std::string s = v.get<std::string>();
  if (nonempty && text::trim(s).empty()) throw SchemaError(path + "." + key, "must be nonempty");
  return s;
}

}  // namespace

std::string_view to_string(TrajectorySource source) {
  switch (source) {
    case TrajectorySource::kThinkBlock: return "think_block";
    case TrajectorySource::kBeforeBoxed: return "before_boxed";
    case TrajectorySource::kWholeText: return "whole_text";
  }
  return "unknown";
}

SplitResponse split_response(std::string_view raw_text) {
  if (raw_text.empty()) throw std::invalid_argument("split_response: empty response text");

  SplitResponse out;
  const auto spans = find_boxed_spans(raw_text, out.unbalanced_boxed);
  if (!spans.empty()) {
    const BoxSpan& last = spans.back();
    auto inner = text::trim(raw_text.substr(last.content_begin, last.content_end - last.content_begin));
    if (!inner.empty()) out.boxed_answer = std::string(inner);
  }

  const std::size_t open = raw_text.find(kThinkOpen);
  if (open != std::string_view::npos) {
    const std::size_t body = open + kThinkOpen.size();
    const std::size_t close = raw_text.find(kThinkClose, body);
    if (close != std::string_view::npos) {
      out.trajectory = std::string(text::trim(raw_text.substr(body, close - body)));
      out.source = TrajectorySource::kThinkBlock;
      return out;
    }
    out.unclosed_think = true;
  }

  if (!spans.empty()) {
    out.trajectory = std::string(text::trim(raw_text.substr(0, spans.back().start)));
    out.source = TrajectorySource::kBeforeBoxed;
  } else {
    out.trajectory = std::string(text::trim(raw_text));
    out.source = TrajectorySource::kWholeText;
  }
  return out;
}

Rollout Rollout::from_raw(int rollout_id, std::string raw_text) {
  SplitResponse split = split_response(raw_text);
  Rollout r;
  r.rollout_id = rollout_id;
  r.raw_text = std::move(raw_text);
  r.trajectory = std::move(split.trajectory);
  r.boxed_answer = std::move(split.boxed_answer);
  r.source = split.source;
  r.malformed = split.unclosed_think || split.unbalanced_boxed;
  return r;
}

const Rollout* RolloutGroup::find(int rollout_id) const {
  for (const auto& r : rollouts) {
    if (r.rollout_id == rollout_id) return &r;
  }
  return nullptr;
}

PromptRecord parse_prompt_record(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path.empty() ? "$" : path, "expected an object");
  PromptRecord p;
  p.prompt_id = require_string(j, "prompt_id", path, true);
  p.question = require_string(j, "question", path, false);
  p.reference_answer = require_string(j, "reference_answer", path, true);
  if (auto it = j.find("image_ref"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError(path + ".image_ref", "expected a string");
    p.image_ref = it->get<std::string>();
  }
  if (auto it = j.find("options"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw SchemaError(path + ".options", "expected an array of [letter, content]");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& pair = (*it)[i];
      const std::string ipath = path + ".options[" + std::to_string(i) + "]";
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
        throw SchemaError(ipath, "expected [letter, content] strings");
      }
      OptionEntry e{pair[0].get<std::string>(), pair[1].get<std::string>()};
      if (text::trim(e.letter).empty()) throw SchemaError(ipath, "empty option letter");
      if (!seen.insert(text::to_lower_ascii(text::trim(e.letter))).second) {
        throw SchemaError(ipath, "duplicate option letter '" + e.letter + "'");
      }
      p.options.push_back(std::move(e));
    }
  }
  return p;
}

RolloutGroup parse_rollout_group(const json& j, const ReadOptions& options) {
  RolloutGroup g;
  g.prompt = parse_prompt_record(j, "");
  const json& rollouts = require(j, "rollouts", "");
  if (!rollouts.is_array() || rollouts.empty()) {
    throw SchemaError(".rollouts", "expected a nonempty array");
  }
  const std::size_t n = rollouts.size();
  if (options.rollout_budget && n != *options.rollout_budget) {
    throw SchemaError(".rollouts", "group has " + std::to_string(n) + " rollouts, budget is " +
                                       std::to_string(*options.rollout_budget));
  }
  std::set<int> ids;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string path = ".rollouts[" + std::to_string(i) + "]";
    const json& r = rollouts[i];
    if (!r.is_object()) throw SchemaError(path, "expected an object");
    const json& id = require(r, "rollout_id", path);
    if (!id.is_number_integer()) throw SchemaError(path + ".rollout_id", "expected an integer");
    const auto value = id.get<long long>();
    if (value < 1 || value > static_cast<long long>(n)) {
      throw SchemaError(path + ".rollout_id", "rollout_id " + std::to_string(value) +
                                                  " outside 1.." + std::to_string(n));
    }
    const int rid = static_cast<int>(value);
    if (!ids.insert(rid).second) {
      throw SchemaError(path + ".rollout_id", "duplicate rollout_id " + std::to_string(rid));
    }
    std::string raw = require_string(r, "raw_text", path, false);
    if (raw.empty()) throw SchemaError(path + ".raw_text", "must be nonempty");
    g.rollouts.push_back(Rollout::from_raw(rid, std::move(raw)));
  }
  return g;
}

json to_json(const RolloutGroup& group) {
  json j;
  j["prompt_id"] = group.prompt.prompt_id;
  j["question"] = group.prompt.question;
  if (group.prompt.image_ref) j["image_ref"] = *group.prompt.image_ref;
  j["reference_answer"] = group.prompt.reference_answer;
  if (group.prompt.has_options()) {
    json opts = json::array();
    for (const auto& o : group.prompt.options) opts.push_back({o.letter, o.content});
    j["options"] = std::move(opts);
  }
  json rs = json::array();
  for (const auto& r : group.rollouts) rs.push_back({{"rollout_id", r.rollout_id}, {"raw_text", r.raw_text}});
  j["rollouts"] = std::move(rs);
  return j;
}

RolloutReadResult read_rollout_jsonl(std::istream& in, const ReadOptions& options) {
  RolloutReadResult result;
  std::unordered_map<std::string, std::size_t> first_seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      result.errors.push_back({line_no, std::string("invalid JSON: ") + e.what()});
      continue;
    }
    try {
      RolloutGroup g = parse_rollout_group(j, options);
      auto [it, inserted] = first_seen.emplace(g.prompt.prompt_id, line_no);
      if (!inserted) {
        result.errors.push_back({line_no, "duplicate prompt_id '" + g.prompt.prompt_id +
                                              "' (first seen on line " + std::to_string(it->second) + ")"});
        continue;
      }
      result.groups.push_back(std::move(g));
    } catch (const SchemaError& e) {
      result.errors.push_back({line_no, e.what()});
    }
  }
  return result;
}

}  // namespace rankreward
