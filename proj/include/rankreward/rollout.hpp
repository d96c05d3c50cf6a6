#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace rankreward {

struct OptionEntry {
  std::string letter;
  std::string content;

  bool operator==(const OptionEntry&) const = default;
};

/// One prompt x = (image, question) with its reference answer.
/// `image_ref` is carried for bookkeeping only; nothing in the judge path reads it.
struct PromptRecord {
  std::string prompt_id;
  std::string question;
  std::optional<std::string> image_ref;
  std::string reference_answer;
  std::vector<OptionEntry> options;  // empty for free-form questions

  bool has_options() const { return !options.empty(); }
  bool operator==(const PromptRecord&) const = default;
};

/// Which rule produced the trajectory text of a response.
enum class TrajectorySource {
  kThinkBlock,   // inner content of the first <think>...</think>
  kBeforeBoxed,  // everything preceding the last \boxed{...}
  kWholeText,    // neither marker present
};

std::string_view to_string(TrajectorySource source);

struct SplitResponse {
  std::string trajectory;
  std::optional<std::string> boxed_answer;
  TrajectorySource source = TrajectorySource::kWholeText;
  bool unclosed_think = false;    // an opening tag with no closing tag
  bool unbalanced_boxed = false;  // a \boxed{ whose braces never close

  bool well_formed() const {
    return source == TrajectorySource::kThinkBlock && boxed_answer.has_value() && !unclosed_think &&
           !unbalanced_boxed;
  }
};

/// Decomposes a raw response into (trajectory, boxed answer).
/// Throws std::invalid_argument on empty input.
SplitResponse split_response(std::string_view raw_text);

struct Rollout {
  int rollout_id = 0;
  std::string raw_text;
  std::string trajectory;
  std::optional<std::string> boxed_answer;
  TrajectorySource source = TrajectorySource::kWholeText;
  bool malformed = false;
  std::optional<bool> verifier_pass;

  static Rollout from_raw(int rollout_id, std::string raw_text);
};

struct RolloutGroup {
  PromptRecord prompt;
  std::vector<Rollout> rollouts;

  const Rollout* find(int rollout_id) const;
};

/// Raised by the JSON → model conversion; `path()` names the offending field.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ReadOptions {
  std::optional<std::size_t> rollout_budget;  // enforced group size when set
};

struct RolloutReadResult {
  std::vector<RolloutGroup> groups;
  std::vector<LineError> errors;

  bool ok() const { return errors.empty(); }
};

PromptRecord parse_prompt_record(const nlohmann::json& j, const std::string& path = "");
RolloutGroup parse_rollout_group(const nlohmann::json& j, const ReadOptions& options = {});
nlohmann::json to_json(const RolloutGroup& group);

/// Reads one group per line. Blank lines are skipped; malformed lines and
/// duplicate prompt ids are collected in `errors` with their line numbers.
RolloutReadResult read_rollout_jsonl(std::istream& in, const ReadOptions& options = {});

}  // namespace rankreward
