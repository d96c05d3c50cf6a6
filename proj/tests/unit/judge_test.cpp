#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "../support/partitions.hpp"
#include "rankreward/http_judge_client.hpp"
#include "rankreward/judge_gateway.hpp"
#include "rankreward/judge_parsers.hpp"
#include "rankreward/mock_judge.hpp"
#include "rankreward/step_splitter.hpp"
#include "rankreward/templates.hpp"

using namespace rankreward;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in) << path;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string golden(const std::string& name) { return slurp(std::string(RANKREWARD_GOLDEN) + "/" + name); }

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

const std::string kQuestion = "In triangle ABC, angle A = 50 degrees and angle B = 60 degrees. Find angle C.";

JudgeEndpointConfig fast_config(int retry_budget = 2, int max_concurrent = 4) {
  JudgeEndpointConfig c;
  c.retry_budget = retry_budget;
  c.max_concurrent_requests = max_concurrent;
  c.backoff_base = std::chrono::milliseconds(0);
  c.timeout = std::chrono::milliseconds(200);
  return c;
}

MockScript script(const std::string& text) { return MockScript::from_json(json::parse(text)); }

}  // namespace

TEST(Templates, PointwiseMatchesGolden) {
  const std::string response =
      textualize_response("The angles of a triangle sum to 180.\n180 - 50 - 60 = 70.", std::string("70"));
  EXPECT_EQ(render_pointwise_prompt(kQuestion, response), golden("pointwise_prompt.txt"));
  EXPECT_EQ(render_pointwise_prompt(kQuestion, response), render_pointwise_prompt(kQuestion, response));
}

TEST(Templates, PointwiseEmptyResponseAndSlotMarkers) {
  const auto empty = render_pointwise_prompt(kQuestion, "");
  EXPECT_TRUE(empty.ends_with("## Response\n\n"));
  EXPECT_NE(empty.find("## Problem\n" + kQuestion + "\n"), std::string::npos);

  const std::string tricky = "I wrote {response} and {problem} here.";
  const auto out = render_pointwise_prompt(kQuestion, tricky);
  EXPECT_EQ(count_of(out, tricky), 1u);
  EXPECT_EQ(count_of(out, "{response}"), 1u);
  EXPECT_EQ(count_of(out, "{problem}"), 1u);
  EXPECT_EQ(count_of(out, kQuestion), 1u);
  EXPECT_THROW(render_pointwise_prompt("", "x"), std::invalid_argument);
}

TEST(Templates, FillSlotsIsSinglePass) {
  EXPECT_EQ(fill_slots("{a}-{b}-{c}", {{"a", "{b}"}, {"b", "B"}}), "{b}-B-{c}");
  EXPECT_EQ(fill_slots("{\"json\": 1} {a}", {{"a", "x"}}), "{\"json\": 1} x");
  EXPECT_EQ(fill_slots("{a", {{"a", "x"}}), "{a");
}

TEST(Templates, GroupwiseMatchesGolden) {
  const auto p = render_groupwise_prompt(
      kQuestion, "70",
      {{3, textualize_response("180 - 50 - 60 = 70.", std::string("70"))},
       {7, textualize_response("Guessing from the figure.", std::string("70"))}});
  EXPECT_EQ(p.text, golden("groupwise_prompt.txt"));
  EXPECT_EQ(p.index_map.rollout_ids(), (std::vector<int>{3, 7}));
  EXPECT_NE(p.text.find("same geometry problem"), std::string::npos);
}

TEST(Templates, GroupwiseNumberingAndIndexMap) {
  std::vector<Candidate> four = {{1, "a"}, {2, "b"}, {3, "c"}, {4, "d"}};
  const auto p = render_groupwise_prompt("q", "r", four);
  for (int i = 1; i <= 4; ++i) EXPECT_EQ(count_of(p.text, "[Candidate " + std::to_string(i) + "]"), 1u);
  EXPECT_EQ(p.text.find("[Candidate 5]"), std::string::npos);

  const auto dup = render_groupwise_prompt("q", "r", {{1, "same text"}, {2, "same text"}});
  EXPECT_EQ(count_of(dup.text, "same text"), 2u);

  EXPECT_THROW(render_groupwise_prompt("q", "r", {{1, "only"}}), std::invalid_argument);
  EXPECT_THROW(render_groupwise_prompt("q", "r", {}), std::invalid_argument);

  std::mt19937 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Candidate> c;
    const int k = 2 + trial % 7;
    for (int i = 1; i <= k; ++i) c.push_back({i * 11, "c" + std::to_string(i)});
    std::shuffle(c.begin(), c.end(), rng);
    const auto g = render_groupwise_prompt("q", "r", c);
    for (int index = 1; index <= k; ++index) ASSERT_EQ(g.index_map.index_of(g.index_map.rollout_id(index)), index);
    for (const auto& cand : c) ASSERT_EQ(g.index_map.rollout_id(g.index_map.index_of(cand.rollout_id)), cand.rollout_id);
    ASSERT_EQ(g.index_map.rollout_id(1), c.front().rollout_id);
  }
  EXPECT_THROW(IndexMap({1, 1}), std::invalid_argument);
}

TEST(Templates, PrmTurns) {
  const auto one = render_prm_turns("What is 1+1?", {"1+1=2"});
  ASSERT_EQ(one.size(), 2u);
  EXPECT_EQ(one[0].role, "system");
  EXPECT_EQ(one[1].role, "user");
  EXPECT_EQ(one[1].content, "## Question\nWhat is 1+1?\n\n## Solution Process\n1+1=2");

  const json g = json::parse(golden("prm_turns_3.json"));
  const auto turns = render_prm_turns(g["question"].get<std::string>(), g["steps"].get<std::vector<std::string>>());
  ASSERT_EQ(turns.size(), g["messages"].size());
  for (std::size_t i = 0; i < turns.size(); ++i) {
    EXPECT_EQ(turns[i].role, g["messages"][i]["role"].get<std::string>());
    EXPECT_EQ(turns[i].content, g["messages"][i]["content"].get<std::string>()) << i;
  }
  int assistants = 0;
  for (const auto& m : turns) assistants += m.role == "assistant";
  EXPECT_EQ(assistants, 2);
  EXPECT_THROW(render_prm_turns("q", {}), std::invalid_argument);
}

TEST(Templates, ConsistencyPromptCarriesInputs) {
  const auto p = render_consistency_prompt("Pick one", {{"A", "3 cm"}, {"B", "4 cm"}}, "so it is 4 cm", "B");
  EXPECT_NE(p.find("A. 3 cm\nB. 4 cm"), std::string::npos);
  EXPECT_NE(p.find("## Reasoning Trajectory\nso it is 4 cm\n"), std::string::npos);
  EXPECT_NE(p.find("## Final Boxed Answer\nB\n"), std::string::npos);
  EXPECT_NE(render_consistency_prompt("q", {}, "t", "1").find("## Options\n(none)\n"), std::string::npos);
  EXPECT_EQ(consistency_template().id, "consistency/1");
}

TEST(GroupwiseParser, Examples) {
  const IndexMap ids({1, 2, 3, 4});
  const auto r = parse_groupwise_ranking(
      R"({"solutions":[{"index":1,"rank":1},{"index":2,"rank":2},{"index":3,"rank":2},{"index":4,"rank":4}]})", 4, ids);
  EXPECT_EQ(r.tiers(), (std::vector<std::vector<int>>{{1}, {2, 3}, {4}}));

  const auto tie = parse_groupwise_ranking(
      R"({"solutions":[{"index":1,"rank":1},{"index":2,"rank":1},{"index":3,"rank":1}]})", 3, IndexMap({1, 2, 3}));
  EXPECT_EQ(tie.tier_count(), 1u);
  EXPECT_EQ(tie.size(), 3u);

  const auto mapped = parse_groupwise_ranking(
      "Sure, here it is:\n```json\n{\"solutions\": [{\"index\": 2, \"rank\": 1, \"justification\": \"best {really}\"},"
      " {\"index\": 1, \"rank\": 3}]}\n```",
      2, IndexMap({8, 5}));
  EXPECT_EQ(mapped.tiers(), (std::vector<std::vector<int>>{{5}, {8}}));
}

TEST(GroupwiseParser, ContractViolations) {
  const IndexMap ids({1, 2, 3, 4});
  EXPECT_THROW(parse_groupwise_ranking(
                   R"({"solutions":[{"index":1,"rank":1},{"index":2,"rank":2},{"index":4,"rank":3}]})", 4, ids),
               JudgeParseError);
  EXPECT_THROW(parse_groupwise_ranking(
                   R"({"solutions":[{"index":1,"rank":1},{"index":2,"rank":2},{"index":2,"rank":2},{"index":3,"rank":3},{"index":4,"rank":4}]})",
                   4, ids),
               JudgeParseError);
  EXPECT_THROW(parse_groupwise_ranking(
                   R"({"solutions":[{"index":1,"rank":1.5},{"index":2,"rank":2},{"index":3,"rank":3},{"index":4,"rank":4}]})",
                   4, ids),
               JudgeParseError);
  EXPECT_THROW(parse_groupwise_ranking(
                   R"({"solutions":[{"index":1,"rank":"1"},{"index":2,"rank":2},{"index":3,"rank":3},{"index":4,"rank":4}]})",
                   4, ids),
               JudgeParseError);
  EXPECT_THROW(parse_groupwise_ranking("I think candidate 1 is best.", 4, ids), JudgeParseError);
  EXPECT_THROW(parse_groupwise_ranking(
                   R"({"solutions":[{"index":0,"rank":1},{"index":1,"rank":1},{"index":2,"rank":1},{"index":3,"rank":1},{"index":4,"rank":1}]})",
                   4, ids),
               JudgeParseError);
  EXPECT_THROW(parse_groupwise_ranking("{}", 1, IndexMap({1})), std::invalid_argument);
}

TEST(GroupwiseParser, RoundTripOverAllPartitions) {
  for (int k = 2; k <= 6; ++k) {
    std::vector<int> identity(k);
    std::iota(identity.begin(), identity.end(), 1);
    const IndexMap ids(identity);
    for (const auto& tiers : rankreward::testing::all_tier_partitions(k)) {
      const auto ranking = TierRanking::from_tiers(tiers);
      ASSERT_EQ(parse_groupwise_ranking(serialize_ranking(ranking), k, ids), ranking);

      // Gapped ranks in shuffled entry order parse to the same tiers.
      json sol = json::array();
      for (std::size_t m = tiers.size(); m-- > 0;) {
        for (int i : tiers[m]) sol.push_back({{"index", i}, {"rank", 10 + 7 * static_cast<int>(m)}});
      }
      ASSERT_EQ(parse_groupwise_ranking(json{{"solutions", sol}}.dump(), k, ids), ranking);
    }
  }
}

TEST(PointwiseParser, Examples) {
  const auto s = parse_pointwise_score(R"({"reasoning_feedback":"ok","judge_score":0.8})");
  EXPECT_EQ(s.score, 0.8);
  EXPECT_FALSE(s.clamped);
  EXPECT_EQ(s.feedback, "ok");

  const auto hi = parse_pointwise_score(R"({"reasoning_feedback":"great","judge_score":1.3})");
  EXPECT_EQ(hi.score, 1.0);
  EXPECT_TRUE(hi.clamped);
  const auto lo = parse_pointwise_score(R"({"judge_score":-0.2})");
  EXPECT_EQ(lo.score, 0.0);
  EXPECT_TRUE(lo.clamped);

  const auto fenced = parse_pointwise_score("My verdict below.\n```json\n{\"reasoning_feedback\":\"x\",\"judge_score\":0.5}\n```");
  EXPECT_EQ(fenced.score, 0.5);

  EXPECT_THROW(parse_pointwise_score("no json here"), JudgeParseError);
  EXPECT_THROW(parse_pointwise_score(R"({"reasoning_feedback":"x"})"), JudgeParseError);
  EXPECT_THROW(parse_pointwise_score(R"({"judge_score":"high"})"), JudgeParseError);
  EXPECT_THROW(parse_pointwise_score(R"({"judge_score":null})"), JudgeParseError);
}

TEST(PointwiseParser, MessyCorpusAgreement) {
  std::ifstream in(std::string(RANKREWARD_FIXTURES) + "/pointwise_messy.jsonl");
  ASSERT_TRUE(in);
  int total = 0;
  int agree = 0;
  int errored = 0;
  std::string line;
  while (std::getline(in, line)) {
    const json c = json::parse(line);
    ++total;
    try {
      const double got = parse_pointwise_score(c["raw"].get<std::string>()).score;
      // A wrong number is never acceptable, only an error.
      EXPECT_NEAR(got, c["label"].get<double>(), 1e-12) << c["raw"];
      agree += std::abs(got - c["label"].get<double>()) <= 1e-12;
    } catch (const JudgeParseError&) {
      ++errored;
    }
  }
  EXPECT_EQ(total, 20);
  EXPECT_GE(agree, 19);
  EXPECT_EQ(agree + errored, total);
}

TEST(PrmTokenParser, ContractTable) {
  EXPECT_EQ(parse_prm_token("+"), 1);
  EXPECT_EQ(parse_prm_token(" -\n"), 0);
  EXPECT_EQ(parse_prm_token("\xE2\x88\x92"), 0);
  EXPECT_EQ(parse_prm_token("\t+ valid"), 1);
  EXPECT_THROW(parse_prm_token("true"), JudgeParseError);
  EXPECT_THROW(parse_prm_token(""), JudgeParseError);
  EXPECT_THROW(parse_prm_token("  \n"), JudgeParseError);
  EXPECT_THROW(parse_prm_token("positive"), JudgeParseError);
}

TEST(ConsistencyParser, Verdicts) {
  EXPECT_EQ(parse_consistency_verdict(R"({"verdict":"inconsistent"})"), ConsistencyVerdict::kInconsistent);
  EXPECT_EQ(parse_consistency_verdict(R"({"conclusion":"10","verdict":"consistent"})"), ConsistencyVerdict::kConsistent);
  EXPECT_EQ(parse_consistency_verdict(R"({"verdict":"na"})"), ConsistencyVerdict::kAbstain);
  EXPECT_EQ(parse_consistency_verdict("```json\n{\"verdict\": \"Consistent\"}\n```"), ConsistencyVerdict::kConsistent);
  EXPECT_THROW(parse_consistency_verdict("garbage"), JudgeParseError);
  EXPECT_THROW(parse_consistency_verdict(R"({"verdict":"maybe"})"), JudgeParseError);
}

TEST(JsonExtraction, RepairsAndOrder) {
  auto any = [](const json&) { return true; };
  EXPECT_EQ(find_json_object(R"({"a":1,})", any)->at("a"), 1);
  EXPECT_EQ(find_json_object("x {\"a\": [1,2,],} y", any)->at("a").size(), 2u);
  EXPECT_EQ(find_json_object(R"(pre {"a":1} mid {"a":2})", any)->at("a"), 1);
  EXPECT_FALSE(find_json_object("{ unbalanced", any));
  EXPECT_FALSE(find_json_object("[1,2,3]", any));
}

TEST(StepSplitter, Modes) {
  const std::string t = "First we note x.\nStill first.\n\n\nSecond paragraph.\n\n";
  EXPECT_EQ(split_steps(t, StepSplitter::kBlankLine),
            (std::vector<std::string>{"First we note x.\nStill first.", "Second paragraph."}));
  EXPECT_EQ(split_steps(t, StepSplitter::kLine),
            (std::vector<std::string>{"First we note x.", "Still first.", "Second paragraph."}));
  const std::string o = "Setup.\nStep 1: add.\nmore\nStep 2: divide.\n3. check\n3.5 is not a marker";
  EXPECT_EQ(split_steps(o, StepSplitter::kOrdinal),
            (std::vector<std::string>{"Setup.", "Step 1: add.\nmore", "Step 2: divide.", "3. check\n3.5 is not a marker"}));
  EXPECT_TRUE(split_steps("   \n\n ", StepSplitter::kBlankLine).empty());
  EXPECT_EQ(parse_step_splitter("ordinal"), StepSplitter::kOrdinal);
  EXPECT_THROW(parse_step_splitter("sentences"), std::invalid_argument);
}

TEST(Gateway, ScriptedReplyAndRetries) {
  auto mock = std::make_shared<ScriptedMockJudge>(script(R"({
    "rules": [
      {"kind": "pointwise", "contains": "flaky", "fail_first": 2, "reply": "{\"judge_score\": 0.5}"},
      {"kind": "pointwise", "contains": "down", "fail_first": 99, "reply": "x"},
      {"kind": "pointwise", "contains": "slow", "delay_ms": 1000, "reply": "x"},
      {"kind": "pointwise", "contains": "bad json", "replies": ["nope", "still nope", "{\"judge_score\": 0.9}"]}
    ],
    "defaults": {"pointwise": "{\"judge_score\": 0.8}"}
  })"));
  JudgeGateway gw(mock, fast_config(2));

  auto ok = gw.ask(JudgeRequest::single_user(RequestKind::kPointwise, "plain"),
                   [](const std::string& r) { return parse_pointwise_score(r); });
  ASSERT_TRUE(ok.ok());
  EXPECT_EQ(ok.value->score, 0.8);
  EXPECT_EQ(ok.attempts, 1);

  auto flaky = gw.ask(JudgeRequest::single_user(RequestKind::kPointwise, "flaky"),
                      [](const std::string& r) { return parse_pointwise_score(r); });
  ASSERT_TRUE(flaky.ok());
  EXPECT_EQ(flaky.attempts, 3);

  auto reparsed = gw.ask(JudgeRequest::single_user(RequestKind::kPointwise, "bad json"),
                         [](const std::string& r) { return parse_pointwise_score(r); });
  ASSERT_TRUE(reparsed.ok());
  EXPECT_EQ(reparsed.value->score, 0.9);
  EXPECT_EQ(reparsed.attempts, 3);

  auto down = gw.ask(JudgeRequest::single_user(RequestKind::kPointwise, "down"),
                     [](const std::string& r) { return parse_pointwise_score(r); });
  EXPECT_FALSE(down.ok());
  EXPECT_EQ(down.failure, JudgeFailure::kTransport);
  EXPECT_EQ(down.attempts, 3);

  EXPECT_THROW(gw.call_judge(JudgeRequest::single_user(RequestKind::kPointwise, "down")), TransportError);
  try {
    gw.call_judge(JudgeRequest::single_user(RequestKind::kPointwise, "slow"));
    ADD_FAILURE() << "expected timeout";
  } catch (const TimeoutError&) {
  }

  // One transcript per interaction, failures included.
  const auto log = gw.transcripts().snapshot();
  ASSERT_EQ(log.size(), 6u);
  for (const auto& t : log) {
    EXPECT_LE(t.attempts, gw.config().retry_budget + 1);
    EXPECT_EQ(t.parsed.has_value(), t.failure == JudgeFailure::kNone);
  }
  EXPECT_EQ(log[3].failure, JudgeFailure::kTransport);
  EXPECT_EQ(log[5].failure, JudgeFailure::kTimeout);
}

TEST(Gateway, NoRetryBudget) {
  auto mock = std::make_shared<ScriptedMockJudge>(
      script(R"({"rules": [{"kind": "pointwise", "fail_first": 1, "reply": "{\"judge_score\": 1}"}]})"));
  JudgeGateway gw(mock, fast_config(0));
  EXPECT_THROW(gw.call_judge(JudgeRequest::single_user(RequestKind::kPointwise, "p")), TransportError);
  EXPECT_EQ(gw.transcripts().get(1)->attempts, 1);
  EXPECT_EQ(gw.call_judge(JudgeRequest::single_user(RequestKind::kPointwise, "p")), "{\"judge_score\": 1}");
}

TEST(Gateway, EmptyReplyIsRetried) {
  auto mock = std::make_shared<ScriptedMockJudge>(
      script(R"({"rules": [{"kind": "prm_step", "replies": ["  ", "+"]}]})"));
  JudgeGateway gw(mock, fast_config(1));
  auto o = gw.ask(JudgeRequest{RequestKind::kPrmStep, render_prm_turns("q", {"s"})},
                  [](const std::string& r) { return parse_prm_token(r); });
  ASSERT_TRUE(o.ok());
  EXPECT_EQ(*o.value, 1);
  EXPECT_EQ(o.attempts, 2);
}

TEST(Gateway, ConcurrencyBoundHolds) {
  auto mock = std::make_shared<FunctionJudgeClient>([](const JudgeRequest&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(3));
    return std::string("+");
  });
  JudgeGateway gw(mock, fast_config(0, 3));
  std::vector<std::thread> workers;
  for (int w = 0; w < 12; ++w) {
    workers.emplace_back([&] {
      for (int i = 0; i < 8; ++i) gw.call_judge(JudgeRequest::single_user(RequestKind::kPrmStep, "s"));
    });
  }
  for (auto& t : workers) t.join();
  EXPECT_EQ(mock->calls(), 96);
  EXPECT_LE(mock->peak_in_flight(), 3);
  EXPECT_GE(mock->peak_in_flight(), 2);
  EXPECT_LE(gw.limiter().peak(), 3);
  EXPECT_EQ(gw.transcripts().size(), 96u);
}

TEST(Gateway, FingerprintRule) {
  const auto req = JudgeRequest::single_user(RequestKind::kConsistency, "exact prompt");
  auto mock = std::make_shared<ScriptedMockJudge>(script(
      R"({"rules": [{"fingerprint": ")" + req.fingerprint() + R"(", "reply": "{\"verdict\":\"na\"}"}],
          "defaults": {"consistency": "{\"verdict\":\"consistent\"}"}})"));
  JudgeGateway gw(mock, fast_config());
  EXPECT_EQ(gw.call_judge(req), "{\"verdict\":\"na\"}");
  EXPECT_EQ(gw.call_judge(JudgeRequest::single_user(RequestKind::kConsistency, "other")), "{\"verdict\":\"consistent\"}");
  EXPECT_EQ(req.fingerprint().size(), 64u);
  EXPECT_NE(req.fingerprint(), JudgeRequest::single_user(RequestKind::kPointwise, "exact prompt").fingerprint());
}

TEST(Gateway, ConfigValidation) {
  JudgeEndpointConfig c;
  c.max_concurrent_requests = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.max_concurrent_requests = 1;
  c.retry_budget = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(HttpJudge, RoundTripThroughMockServer) {
  auto backend = std::make_shared<ScriptedMockJudge>(script(R"({
    "defaults": {"groupwise": "{\"solutions\":[{\"index\":1,\"rank\":2},{\"index\":2,\"rank\":1}]}",
                 "prm_step": "-", "pointwise": "{\"judge_score\":0.25}"}})"));
  MockJudgeServer server(backend);
  server.start();
  JudgeEndpointConfig config = fast_config(1);
  config.base_url = server.base_url();
  config.timeout = std::chrono::milliseconds(5000);
  auto client = std::make_shared<HttpJudgeClient>(std::string("test-key"));
  EXPECT_TRUE(client->probe(config));
  JudgeGateway gw(client, config);

  const auto p = render_groupwise_prompt("q", "r", {{4, "a"}, {9, "b"}});
  auto ranked = gw.ask(JudgeRequest::single_user(RequestKind::kGroupwise, p.text),
                       [&](const std::string& raw) { return parse_groupwise_ranking(raw, 2, p.index_map); });
  ASSERT_TRUE(ranked.ok()) << ranked.error;
  EXPECT_EQ(ranked.value->tiers(), (std::vector<std::vector<int>>{{9}, {4}}));

  EXPECT_EQ(gw.call_judge(JudgeRequest{RequestKind::kPrmStep, render_prm_turns("q", {"a", "b"})}), "-");
  EXPECT_EQ(backend->calls(RequestKind::kPrmStep), 1);
  EXPECT_EQ(backend->calls(RequestKind::kGroupwise), 1);

  EXPECT_THROW(gw.call_judge(JudgeRequest::single_user(RequestKind::kConsistency, "unknown prompt")), TransportError);
  server.stop();

  JudgeEndpointConfig dead = config;
  dead.base_url = "http://127.0.0.1:1/v1";
  EXPECT_FALSE(HttpJudgeClient().probe(dead));
}

TEST(HttpJudge, SplitBaseUrl) {
  EXPECT_EQ(split_base_url("http://h:8/v1/"), (std::pair<std::string, std::string>{"http://h:8", "/v1"}));
  EXPECT_EQ(split_base_url("https://api.example.com"),
            (std::pair<std::string, std::string>{"https://api.example.com", ""}));
  EXPECT_THROW(split_base_url("localhost:8000"), std::invalid_argument);
}

TEST(MockJudge, InferKind) {
  EXPECT_EQ(infer_request_kind(render_prm_turns("q", {"s"})), RequestKind::kPrmStep);
  EXPECT_EQ(infer_request_kind({{"user", render_pointwise_prompt("q", "r")}}), RequestKind::kPointwise);
  EXPECT_EQ(infer_request_kind({{"user", render_groupwise_prompt("q", "r", {{1, "a"}, {2, "b"}}).text}}),
            RequestKind::kGroupwise);
  EXPECT_EQ(infer_request_kind({{"user", render_consistency_prompt("q", {}, "t", "a")}}), RequestKind::kConsistency);
  EXPECT_THROW(infer_request_kind({{"user", "hello"}}), std::invalid_argument);
  EXPECT_THROW(MockScript::from_json(json::parse(R"({"rules":[{"kind":"pointwise"}]})")), std::invalid_argument);
}
