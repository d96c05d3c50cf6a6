#include "rankreward/templates.hpp"

#include <stdexcept>

namespace rankreward {

namespace {

constexpr std::string_view kPointwise = R"tmpl(You are an expert evaluator for reasoning quality.
Evaluate the assistant response based on reasoning-quality assessment.

---

## Scoring Rubric
Score the overall reasoning quality on a scalar in [0, 1], where:
- 1.0: clear, logically coherent, and mathematically sound derivation.
- 0.8: mostly solid reasoning with only minor slips that do not break the core logic.
- 0.5: partially valid reasoning; noticeable gaps or mistakes reduce reliability.
- 0.2: largely flawed reasoning with major logical/calculation issues.
- 0.0: reasoning is missing, nonsensical, or clearly fails to solve the task.

---

## Evaluation Guidance
When assigning the single score, consider the overall logical coherence of
the steps, correct use of given conditions or visual facts, calculation and
transformation quality, clarity/completeness of the conclusion, and whether
uncertainty is handled honestly without unsupported guessing.

Note. The original problem may include image input, but you cannot
access the image. If the reasoning references information that could
plausibly come from the image and is not contradicted by available text, do
not treat that as an error by itself; score based on textual reasoning
quality.

---

## Output Schema
Return JSON only with this schema:
{"reasoning_feedback":
  "<short explanation of strengths, weaknesses, and key issues>",
 "judge_score": <float between 0 and 1>
}
Generate "reasoning_feedback" first and place
"judge_score" last.

If some information is missing, still provide the best-effort score from
available text.

---

## Problem
{problem}

## Response
{response}
)tmpl";

constexpr std::string_view kGroupwise = R"tmpl(You are ranking multiple candidate solutions to the same geometry problem.

## Problem
{problem}

## Reference Answer
{reference_answer}

## Candidate Solutions
{candidate_solutions}

---

## Ranking Principles
1. Audit the reasoning steps, not just the final answer; flag leaps, contradictions, or missing justification.
2. Prioritise solutions whose final answers align with the reference answer.
3. If solutions are equally correct and use materially similar reasoning, give them the same rank; do not force an ordering without a clear qualitative difference. If all are equally correct, all ranks must be 1.
4. When reasoning differs, choose the mathematically valid, well-supported argument even if multiple solutions reach the same final answer.
5. Penalise calculation mistakes, invalid assumptions, or logical gaps relative to error-free solutions.
6. Keep the comparison focused on mathematical correctness and clarity.

---

## Output Format
Return strict JSON with no commentary:
{"solutions": [
  {
   "index": 1,
   "rank": 1,
   "justification": "Short comparison that explains the placement.",
   "agreement_with_reference":
    "match" | "different" | "unknown",
   "errors": ["optional list of key mistakes"]},
  ...
 ]}

## Rules
- Lower rank numbers correspond to better solutions.
- Use the same rank for tied solutions that should be treated equally.
- Include every candidate exactly once.
- If you assign the same rank, the numeric rank fields must be identical (e.g., all 1s for a full tie); do not output 1,2,3... when you describe them as equal.
- Keep the justification concise, citing key reasoning differences or errors that justify the rank.
)tmpl";

constexpr std::string_view kPrmSystem = R"tmpl(You are a process reward model. Given the current reasoning step and prior
context, output exactly one token: + or -. Use +
only if the current step is valid and consistent with the question/context.)tmpl";

constexpr std::string_view kPrmFirstUser = R"tmpl(## Question
{question}

## Solution Process
{step})tmpl";

constexpr std::string_view kPrmNextUser = R"tmpl(## Solution Process
{step})tmpl";

constexpr std::string_view kConsistency = R"tmpl(You are auditing whether a model's reasoning supports the final answer it gave.
Judge agreement between the two, not whether the answer is right.

## Question
{question}

## Options
{options}

## Reasoning Trajectory
{trajectory}

## Final Boxed Answer
{boxed_answer}

---

## Procedure
1. Work out which final answer the reasoning itself arrives at, ignoring the boxed answer.
2. Normalize that conclusion and the boxed answer: drop formatting, and translate option letters to option content (or content to letters) with the option table when one is given.
3. Compare the two. Treat them as the same when they differ only by a missing unit, numeric formatting, or a letter versus its option content.
4. If there is no usable final answer to compare, answer "na".

## Output Format
Return JSON only:
{"conclusion": "<answer the reasoning arrives at>", "verdict": "consistent" | "inconsistent" | "na"}
)tmpl";

const PromptTemplate kPointwiseTemplate{"pointwise-gr/1", kPointwise};
const PromptTemplate kGroupwiseTemplate{"groupwise-rank/1", kGroupwise};
const PromptTemplate kPrmSystemTemplate{"prm-system/1", kPrmSystem};
const PromptTemplate kPrmFirstUserTemplate{"prm-user-first/1", kPrmFirstUser};
const PromptTemplate kPrmNextUserTemplate{"prm-user-next/1", kPrmNextUser};
const PromptTemplate kConsistencyTemplate{"consistency/1", kConsistency};

}  // namespace

const PromptTemplate& pointwise_template() { return kPointwiseTemplate; }
const PromptTemplate& groupwise_template() { return kGroupwiseTemplate; }
const PromptTemplate& prm_system_template() { return kPrmSystemTemplate; }
const PromptTemplate& prm_first_user_template() { return kPrmFirstUserTemplate; }
const PromptTemplate& prm_next_user_template() { return kPrmNextUserTemplate; }
const PromptTemplate& consistency_template() { return kConsistencyTemplate; }

std::string fill_slots(std::string_view tmpl, const std::vector<Slot>& slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string_view name = tmpl.substr(i + 1, close - i - 1);
        bool replaced = false;
        for (const auto& [key, value] : slots) {
          if (key == name) {
            out.append(value);
            replaced = true;
            break;
          }
        }
        if (replaced) {
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

std::string textualize_question(const PromptRecord& prompt) {
  std::string out = prompt.question;
  if (prompt.has_options()) {
    out += "\n\nOptions:";
    for (const auto& o : prompt.options) out += "\n" + o.letter + ". " + o.content;
  }
  return out;
}

std::string textualize_response(std::string_view trajectory, const std::optional<std::string>& answer) {
  std::string out(trajectory);
  if (!out.empty()) out += "\n\n";
  out += "Final answer: ";
  out += answer ? "\\boxed{" + *answer + "}" : std::string("(none)");
  return out;
}

std::string render_pointwise_prompt(std::string_view question, std::string_view response) {
  if (question.empty()) throw std::invalid_argument("render_pointwise_prompt: empty question");
  return fill_slots(kPointwise, {{"problem", question}, {"response", response}});
}

IndexMap::IndexMap(std::vector<int> rollout_ids) : ids_(std::move(rollout_ids)) {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (ids_[i] == ids_[j]) {
        throw std::invalid_argument("IndexMap: rollout id " + std::to_string(ids_[i]) + " listed twice");
      }
    }
  }
}

int IndexMap::rollout_id(int index) const {
  if (index < 1 || index > static_cast<int>(ids_.size())) {
    throw std::out_of_range("IndexMap: index " + std::to_string(index) + " out of range");
  }
  return ids_[index - 1];
}

int IndexMap::index_of(int rollout_id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == rollout_id) return static_cast<int>(i + 1);
  }
  throw std::out_of_range("IndexMap: rollout id " + std::to_string(rollout_id) + " not present");
}

GroupwisePrompt render_groupwise_prompt(std::string_view question, std::string_view reference_answer,
                                        const std::vector<Candidate>& candidates) {
  if (candidates.size() < 2) {
    throw std::invalid_argument("render_groupwise_prompt: need at least 2 candidates, got " +
                                std::to_string(candidates.size()));
  }
  std::string block;
  std::vector<int> ids;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i > 0) block += "\n\n";
    block += "[Candidate " + std::to_string(i + 1) + "]\n";
    block += candidates[i].text;
    ids.push_back(candidates[i].rollout_id);
  }
  GroupwisePrompt out;
  out.text = fill_slots(kGroupwise, {{"problem", question},
                                     {"reference_answer", reference_answer},
                                     {"candidate_solutions", block}});
  out.index_map = IndexMap(std::move(ids));
  return out;
}

std::vector<ChatMessage> render_prm_turns(std::string_view question, const std::vector<std::string>& steps) {
  if (steps.empty()) throw std::invalid_argument("render_prm_turns: no steps");
  std::vector<ChatMessage> messages;
  messages.push_back({"system", std::string(kPrmSystem)});
  for (std::size_t t = 0; t < steps.size(); ++t) {
    if (t == 0) {
      messages.push_back({"user", fill_slots(kPrmFirstUser, {{"question", question}, {"step", steps[t]}})});
    } else {
      messages.push_back({"user", fill_slots(kPrmNextUser, {{"step", steps[t]}})});
    }
    if (t + 1 < steps.size()) messages.push_back({"assistant", "+"});
  }
  return messages;
}

std::string render_consistency_prompt(std::string_view question, const std::vector<OptionEntry>& options,
                                      std::string_view trajectory, std::string_view boxed_answer) {
  std::string table;
  for (const auto& o : options) {
    if (!table.empty()) table += "\n";
    table += o.letter + ". " + o.content;
  }
  if (table.empty()) table = "(none)";
  return fill_slots(kConsistency, {{"question", question},
                                   {"options", table},
                                   {"trajectory", trajectory},
                                   {"boxed_answer", boxed_answer}});
}

}  // namespace rankreward
