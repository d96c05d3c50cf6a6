#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "rankreward/reward_io.hpp"
#include "rankreward/rollout.hpp"
#include "rankreward/text.hpp"

using namespace rankreward;

namespace {

std::string fixture(const std::string& name) { return std::string(RANKREWARD_FIXTURES) + "/" + name; }

// Scans every balanced \boxed{...} independently of the library and returns the last inner text.
std::optional<std::string> last_boxed_oracle(const std::string& s) {
  std::optional<std::string> last;
  for (std::size_t pos = s.find("\\boxed{"); pos != std::string::npos; pos = s.find("\\boxed{", pos + 1)) {
    int depth = 0;
    for (std::size_t j = pos + 6; j < s.size(); ++j) {
      if (s[j] == '{') ++depth;
      if (s[j] == '}' && --depth == 0) {
        last = s.substr(pos + 7, j - pos - 7);
        pos = j;
        break;
      }
    }
  }
  return last;
}

std::optional<std::string> oracle_answer(const std::string& raw) {
  auto last = last_boxed_oracle(raw);
  if (!last) return std::nullopt;
  auto inner = text::trim(*last);
  if (inner.empty()) return std::nullopt;
  return std::string(inner);
}

}  // namespace

TEST(SplitResponse, ThinkBlockAndBoxedAnswer) {
  auto s = split_response("<think>derive X=-11</think> \\boxed{10}");
  EXPECT_EQ(s.trajectory, "derive X=-11");
  ASSERT_TRUE(s.boxed_answer);
  EXPECT_EQ(*s.boxed_answer, "10");
  EXPECT_EQ(s.source, TrajectorySource::kThinkBlock);
  EXPECT_TRUE(s.well_formed());
}

TEST(SplitResponse, BoxOnlyGivesEmptyTrajectory) {
  auto s = split_response("\\boxed{7}");
  EXPECT_EQ(s.trajectory, "");
  EXPECT_EQ(s.boxed_answer.value_or("?"), "7");
  EXPECT_EQ(s.source, TrajectorySource::kBeforeBoxed);
}

TEST(SplitResponse, LastBoxWins) {
  const std::string raw = "a \\boxed{1} then revised \\boxed{2}";
  auto s = split_response(raw);
  EXPECT_EQ(s.boxed_answer, last_boxed_oracle(raw));
  EXPECT_EQ(s.boxed_answer.value_or("?"), "2");
  EXPECT_EQ(s.trajectory, "a \\boxed{1} then revised");
}

TEST(SplitResponse, NestedBracesAndEscapes) {
  auto s = split_response("so \\boxed{\\frac{1}{2}} and set \\boxed{\\{1,2\\}}");
  EXPECT_EQ(s.boxed_answer.value_or("?"), "\\{1,2\\}");
  auto t = split_response("<think>t</think>\\boxed{\\frac{a}{b}}");
  EXPECT_EQ(t.boxed_answer.value_or("?"), "\\frac{a}{b}");
}

TEST(SplitResponse, MissingMarkersDegrade) {
  auto none = split_response("  just prose, no answer  ");
  EXPECT_EQ(none.trajectory, "just prose, no answer");
  EXPECT_FALSE(none.boxed_answer);
  EXPECT_EQ(none.source, TrajectorySource::kWholeText);

  auto unclosed = split_response("<think>still thinking \\boxed{4}");
  EXPECT_TRUE(unclosed.unclosed_think);
  EXPECT_EQ(unclosed.source, TrajectorySource::kBeforeBoxed);
  EXPECT_EQ(unclosed.trajectory, "<think>still thinking");

  auto open_box = split_response("<think>x</think> \\boxed{4");
  EXPECT_TRUE(open_box.unbalanced_boxed);
  EXPECT_FALSE(open_box.boxed_answer);
  EXPECT_FALSE(open_box.well_formed());

  auto empty_box = split_response("<think>x</think> \\boxed{  }");
  EXPECT_FALSE(empty_box.boxed_answer);
}

TEST(SplitResponse, EmptyInputRejected) { EXPECT_THROW(split_response(""), std::invalid_argument); }

// Trajectory and answer are substrings of the raw text; re-splitting a marker-free
// trajectory returns it unchanged with no answer.
TEST(SplitResponse, SubstringAndIdempotenceProperties) {
  std::mt19937 rng(20240611);
  const std::vector<std::string> words = {"let", "x", "=", "3", "so", "\\frac{1}{2}", "{a}", "step", "\n\n", "  ",
                                          "therefore", "10", "cm", "(B)", "-11"};
  const std::vector<std::string> markers = {"<think>", "</think>", "\\boxed{", "}", "\\boxed{5}"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string raw;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      if (rng() % 4 == 0) {
        raw += markers[rng() % markers.size()];
      } else {
        raw += words[rng() % words.size()];
      }
      raw += ' ';
    }
    auto s = split_response(raw);
    EXPECT_NE(raw.find(s.trajectory), std::string::npos) << raw;
    if (s.boxed_answer) {
      EXPECT_NE(raw.find(*s.boxed_answer), std::string::npos) << raw;
      EXPECT_EQ(s.boxed_answer, oracle_answer(raw))
          << raw;
    }
    const bool marker_free = s.trajectory.find("\\boxed") == std::string::npos &&
                             s.trajectory.find("<think>") == std::string::npos;
    if (marker_free && !s.trajectory.empty()) {
      auto again = split_response(s.trajectory);
      EXPECT_EQ(again.trajectory, s.trajectory);
      EXPECT_FALSE(again.boxed_answer);
    }
  }
}

TEST(ReadRolloutJsonl, SingleGroupOfEight) {
  std::ifstream in(fixture("rollouts_single_group.jsonl"));
  ASSERT_TRUE(in);
  auto result = read_rollout_jsonl(in, {.rollout_budget = 8});
  ASSERT_TRUE(result.ok()) << result.errors.front().message;
  ASSERT_EQ(result.groups.size(), 1u);
  const auto& g = result.groups[0];
  EXPECT_EQ(g.rollouts.size(), 8u);
  EXPECT_EQ(g.prompt.image_ref.value_or(""), "images/mv-0001.png");
  EXPECT_EQ(g.rollouts[0].trajectory, "Step 1: compute the sum.");
  EXPECT_EQ(g.rollouts[0].boxed_answer.value_or(""), "10");
  EXPECT_EQ(g.rollouts[1].boxed_answer.value_or(""), "11");
}

TEST(ReadRolloutJsonl, EmptyStream) {
  std::istringstream in("");
  auto result = read_rollout_jsonl(in);
  EXPECT_TRUE(result.ok());
  EXPECT_TRUE(result.groups.empty());
}

TEST(ReadRolloutJsonl, CollectsLineErrors) {
  std::ifstream in(fixture("rollouts_duplicate_id.jsonl"));
  auto result = read_rollout_jsonl(in);
  ASSERT_EQ(result.groups.size(), 1u);
  EXPECT_EQ(result.groups[0].prompt.prompt_id, "ok-1");
  ASSERT_EQ(result.errors.size(), 3u);
  EXPECT_EQ(result.errors[0].line, 2u);
  EXPECT_NE(result.errors[0].message.find("duplicate rollout_id 2"), std::string::npos);
  EXPECT_NE(result.errors[0].message.find(".rollouts[2].rollout_id"), std::string::npos);
  EXPECT_EQ(result.errors[1].line, 3u);
  EXPECT_NE(result.errors[1].message.find("invalid JSON"), std::string::npos);
  EXPECT_EQ(result.errors[2].line, 4u);
  EXPECT_NE(result.errors[2].message.find("duplicate prompt_id 'ok-1'"), std::string::npos);
}

TEST(ReadRolloutJsonl, SchemaViolationsNameTheField) {
  auto check = [](const std::string& line, const std::string& path) {
    try {
      parse_rollout_group(nlohmann::json::parse(line));
      ADD_FAILURE() << "accepted " << line;
    } catch (const SchemaError& e) {
      EXPECT_EQ(e.path(), path) << e.what();
    }
  };
  check(R"({"question":"q","reference_answer":"1","rollouts":[{"rollout_id":1,"raw_text":"x"}]})", ".prompt_id");
  check(R"({"prompt_id":"p","question":"q","reference_answer":" ","rollouts":[{"rollout_id":1,"raw_text":"x"}]})",
        ".reference_answer");
  check(R"({"prompt_id":"p","question":"q","reference_answer":"1","rollouts":[]})", ".rollouts");
  check(R"({"prompt_id":"p","question":"q","reference_answer":"1","rollouts":[{"rollout_id":"1","raw_text":"x"}]})",
        ".rollouts[0].rollout_id");
  check(R"({"prompt_id":"p","question":"q","reference_answer":"1","rollouts":[{"rollout_id":1,"raw_text":""}]})",
        ".rollouts[0].raw_text");
  check(R"({"prompt_id":"p","question":"q","reference_answer":"1","options":[["A","x"],["a","y"]],)"
        R"("rollouts":[{"rollout_id":1,"raw_text":"x"}]})",
        ".options[1]");
}

TEST(ReadRolloutJsonl, BudgetEnforced) {
  std::istringstream in(R"({"prompt_id":"p","question":"q","reference_answer":"1","rollouts":[{"rollout_id":1,"raw_text":"x"}]})");
  auto result = read_rollout_jsonl(in, {.rollout_budget = 8});
  ASSERT_EQ(result.errors.size(), 1u);
  EXPECT_NE(result.errors[0].message.find("budget is 8"), std::string::npos);
}

TEST(RewardJsonl, RoundTripIsBitExact) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<GroupRewards> batch;
  for (int g = 0; g < 50; ++g) {
    GroupRewards gr{"p" + std::to_string(g), {}};
    for (int i = 1; i <= 8; ++i) {
      gr.rewards.push_back({i, static_cast<int>(rng() % 2), u(rng), AuxKind::kRankGroupwise, u(rng), u(rng)});
    }
    batch.push_back(gr);
  }
  batch[0].rewards[0].r_aux = -0.0;
  batch[0].rewards[1].advantage = std::numeric_limits<double>::denorm_min();
  batch[0].rewards[2].r_total = 1.0 / 3.0;
  std::stringstream ss;
  write_reward_jsonl(batch, ss);
  auto back = read_reward_jsonl(ss);
  ASSERT_EQ(back.size(), batch.size());
  for (std::size_t g = 0; g < batch.size(); ++g) {
    ASSERT_EQ(back[g].rewards.size(), batch[g].rewards.size());
    for (std::size_t i = 0; i < batch[g].rewards.size(); ++i) {
      const auto& a = batch[g].rewards[i];
      const auto& b = back[g].rewards[i];
      EXPECT_EQ(std::signbit(a.r_aux), std::signbit(b.r_aux));
      EXPECT_EQ(a, b);
    }
  }
}

TEST(RewardJsonl, FieldOrderMatchesExchangeFormat) {
  GroupRewards g{"p1", {{1, 1, 0.5, AuxKind::kRankGroupwise, 1.5, 1.0}}};
  EXPECT_EQ(reward_line(g),
            R"({"prompt_id":"p1","rewards":[{"rollout_id":1,"r_ver":1,"r_aux":0.5,"aux_kind":"rank_groupwise",)"
            R"("r_total":1.5,"advantage":1.0}]})");
}

TEST(RewardJsonl, NonFiniteRejectedBeforeWriting) {
  std::vector<GroupRewards> batch = {{"ok", {{1, 1, 0.0, AuxKind::kPrm, 1.0, 0.0}}},
                                     {"bad", {{1, 1, 0.0, AuxKind::kPrm, 1.0, std::nan("")}}}};
  std::stringstream ss;
  EXPECT_THROW(write_reward_jsonl(batch, ss), std::domain_error);
  EXPECT_TRUE(ss.str().empty());
}

TEST(RewardJsonl, LargeBatchPreservesOrder) {
  std::vector<GroupRewards> batch;
  for (int g = 0; g < 500; ++g) batch.push_back({"prompt-" + std::to_string(g), {{1, 0, 0.0, AuxKind::kGrPointwise, 0.0, 0.0}}});
  std::stringstream ss;
  write_reward_jsonl(batch, ss);
  std::string line;
  int count = 0;
  std::istringstream lines(ss.str());
  while (std::getline(lines, line)) {
    EXPECT_EQ(nlohmann::json::parse(line)["prompt_id"], "prompt-" + std::to_string(count));
    ++count;
  }
  EXPECT_EQ(count, 500);
}
