#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rankreward/rollout.hpp"

namespace rankreward {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

/// A judge prompt template with a stable identifier; bump the id when the text changes.
struct PromptTemplate {
  std::string_view id;
  std::string_view text;
};

const PromptTemplate& pointwise_template();
const PromptTemplate& groupwise_template();
const PromptTemplate& prm_system_template();
const PromptTemplate& prm_first_user_template();
const PromptTemplate& prm_next_user_template();
/// Authored for this project; the four-step audit is spelled out in the prompt.
const PromptTemplate& consistency_template();

using Slot = std::pair<std::string_view, std::string_view>;

/// Replaces each `{name}` for the given slots in one left-to-right pass.
/// Inserted values are never rescanned; unknown `{...}` text stays literal.
std::string fill_slots(std::string_view tmpl, const std::vector<Slot>& slots);

/// Question text for judges; multiple-choice options are listed after it.
std::string textualize_question(const PromptRecord& prompt);

/// Text shown to a judge for one rollout: the trajectory followed by the boxed answer.
std::string textualize_response(std::string_view trajectory, const std::optional<std::string>& answer);

/// Throws std::invalid_argument on an empty question.
std::string render_pointwise_prompt(std::string_view question, std::string_view response);

/// Presentation index (1-based) to rollout id, and back.
class IndexMap {
 public:
  IndexMap() = default;
  /// rollout_ids[i] is shown as candidate i + 1. Ids must be unique.
  explicit IndexMap(std::vector<int> rollout_ids);

  int rollout_id(int index) const;
  int index_of(int rollout_id) const;
  std::size_t size() const { return ids_.size(); }
  const std::vector<int>& rollout_ids() const { return ids_; }

  bool operator==(const IndexMap&) const = default;

 private:
  std::vector<int> ids_;
};

struct Candidate {
  int rollout_id = 0;
  std::string text;
};

struct GroupwisePrompt {
  std::string text;
  IndexMap index_map;
};

/// Candidates are numbered in the order given. Throws std::invalid_argument when fewer than 2.
GroupwisePrompt render_groupwise_prompt(std::string_view question, std::string_view reference_answer,
                                        const std::vector<Candidate>& candidates);

/// Messages for judging the last element of `steps`: system, then each earlier
/// step as a user turn answered "+", then the current step.
std::vector<ChatMessage> render_prm_turns(std::string_view question, const std::vector<std::string>& steps);

std::string render_consistency_prompt(std::string_view question, const std::vector<OptionEntry>& options,
                                      std::string_view trajectory, std::string_view boxed_answer);

}  // namespace rankreward
