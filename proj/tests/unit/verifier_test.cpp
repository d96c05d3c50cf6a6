#include <gtest/gtest.h>

#include <random>

#include "rankreward/verifier.hpp"

using namespace rankreward;

namespace {

// Stand-alone character walk covering trimming, case folding, a trailing period,
// "v = " prefixes, thousands groups, trailing word units and decimal canonical form.
std::string oracle_normalize(const std::string& input) {
  std::size_t b = 0, e = input.size();
  while (b < e && input[b] == ' ') ++b;
  while (e > b && input[e - 1] == ' ') --e;
  std::string s;
  for (std::size_t i = b; i < e; ++i) {
    char c = input[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    s += c;
  }
  if (s.size() > 1 && s.back() == '.') s.pop_back();

  std::string t;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ' ' && ((i + 1 < s.size() && s[i + 1] == '=') || (i > 0 && s[i - 1] == '='))) continue;
    t += s[i];
  }
  s = t;
  if (s.size() > 2 && s[0] >= 'a' && s[0] <= 'z' && s[1] == '=') s = s.substr(2);

  // rewrite each maximal run of [0-9,] that is d{1,3}(,ddd)+
  t.clear();
  for (std::size_t i = 0; i < s.size();) {
    if (!(s[i] >= '0' && s[i] <= '9')) {
      t += s[i++];
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && ((s[j] >= '0' && s[j] <= '9') || s[j] == ',')) ++j;
    std::string run = s.substr(i, j - i);
    std::vector<std::string> parts;
    std::string cur;
    for (char c : run) {
      if (c == ',') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    parts.push_back(cur);
    bool grouped = parts.size() > 1 && !parts[0].empty() && parts[0].size() <= 3;
    for (std::size_t p = 1; p < parts.size(); ++p) grouped = grouped && parts[p].size() == 3;
    if (grouped) {
      for (auto& p : parts) t += p;
    } else {
      t += run;
    }
    i = j;
  }
  s = t;

  std::size_t first_word = s.size();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((s[i] >= 'a' && s[i] <= 'z') || s[i] == '%') {
      first_word = i;
      break;
    }
  }
  if (first_word < s.size() && first_word > 0) {
    std::string prefix = s.substr(0, first_word);
    while (!prefix.empty() && prefix.back() == ' ') prefix.pop_back();
    bool numeric = !prefix.empty();
    for (char c : prefix) numeric = numeric && ((c >= '0' && c <= '9') || c == '.' || c == '-' || c == '+');
    if (numeric) s = prefix;
  }

  bool numeric = !s.empty();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    numeric = numeric && ((c >= '0' && c <= '9') || c == '.' || (i == 0 && (c == '-' || c == '+')));
  }
  if (!numeric) return s;
  bool neg = s[0] == '-';
  std::string digits = (s[0] == '-' || s[0] == '+') ? s.substr(1) : s;
  std::string ip, fp;
  const auto dot = digits.find('.');
  ip = digits.substr(0, dot);
  if (dot != std::string::npos) fp = digits.substr(dot + 1);
  std::size_t k = 0;
  while (k + 1 < ip.size() && ip[k] == '0') ++k;
  ip = ip.substr(k);
  if (ip.empty()) ip = "0";
  while (!fp.empty() && fp.back() == '0') fp.pop_back();
  std::string out = ip + (fp.empty() ? "" : "." + fp);
  if (neg && out != "0") out = "-" + out;
  return out;
}

struct NormCase {
  const char* input;
  const char* expected;
};

constexpr NormCase kTable[] = {
    {"10", "10"},           {"  10 cm ", "10"},       {"1,000", "1000"},          {"1,000,000", "1000000"},
    {"12,345.50", "12345.5"}, {"+7", "7"},            {"-0", "0"},                {"007", "7"},
    {".5", "0.5"},          {"3.140", "3.14"},        {"2.0", "2"},               {"  Triangle  ", "triangle"},
    {"ABC", "abc"},         {"45 degrees", "45"},     {"50%", "50"},              {"3.5 m", "3.5"},
    {"1,2", "1,2"},         {"10.", "10"},            {"x = 5", "5"},             {"-12.00", "-12"},
    {"0.000", "0"},         {"100 kg", "100"},        {"2,500 m", "2500"},        {"Yes", "yes"},
    {"  -3,000  ", "-3000"}, {"5 apples", "5"},        {"1000", "1000"},           {"0", "0"},
    {"00.10", "0.1"},       {"+0.0", "0"},            {"999,999", "999999"},      {"1234,567", "1234,567"},
    {"12 cm", "12"},        {"7 km", "7"},            {"CIRCLE", "circle"},       {"1,000.25 cm", "1000.25"},
    {"3.0 s", "3"},         {"-0.50", "-0.5"},        {"20.000", "20"},           {"64", "64"},
    {"8 m", "8"},           {"42.", "42"},            {"3,141,592", "3141592"},   {"right angle", "right angle"},
    {"0.25", "0.25"},       {"120 mm", "120"},        {"+1,500", "1500"},         {"9.90 kg", "9.9"},
    {"y=12", "12"},         {"16 units", "16"},
};

}  // namespace

// The hand-labelled table, cross-checked against the character-walk oracle.
TEST(NormalizeAnswer, FiftyCaseTableAgreesWithOracle) {
  static_assert(std::size(kTable) == 50);
  const VerifierConfig config;
  for (const auto& c : kTable) {
    EXPECT_EQ(oracle_normalize(c.input), c.expected) << "oracle on '" << c.input << "'";
    auto got = normalize_answer(c.input, config);
    ASSERT_TRUE(got) << c.input;
    EXPECT_EQ(*got, c.expected) << "input '" << c.input << "'";
  }
}

TEST(NormalizeAnswer, LatexWrappers) {
  const VerifierConfig config;
  EXPECT_EQ(normalize_answer("$10$", config).value(), "10");
  EXPECT_EQ(normalize_answer("\\(\\frac{1}{2}\\)", config).value(), "1/2");
  EXPECT_EQ(normalize_answer("\\dfrac12", config).value(), "1/2");
  EXPECT_EQ(normalize_answer("\\boxed{\\text{B}}", config).value(), "b");
  EXPECT_EQ(normalize_answer("10\\text{ cm}", config).value(), "10");
  EXPECT_EQ(normalize_answer("30^\\circ", config).value(), "30");
  EXPECT_EQ(normalize_answer("1{,}000", config).value(), "1000");
  EXPECT_EQ(normalize_answer("\\left( 1, 2 \\right)", config).value(), "(1,2)");
  EXPECT_EQ(normalize_answer("\\frac{x+1}{2}", config).value(), "(x+1)/2");
  EXPECT_EQ(normalize_answer("25\\%", config).value(), "25");
}

TEST(NormalizeAnswer, FlagsChangeBehaviour) {
  VerifierConfig keep_units{.strip_units = false};
  EXPECT_EQ(normalize_answer("10 cm", keep_units).value(), "10 cm");
  VerifierConfig keep_case{.case_fold = false};
  EXPECT_EQ(normalize_answer("Triangle", keep_case).value(), "Triangle");
}

TEST(NormalizeAnswer, EmptyIsUnanswerable) {
  const VerifierConfig config;
  EXPECT_FALSE(normalize_answer("   ", config));
  EXPECT_FALSE(normalize_answer("$$  $$", config));
  EXPECT_FALSE(normalize_answer("\\boxed{}", config));
}

TEST(Verify, BasicCases) {
  const VerifierConfig config;
  EXPECT_TRUE(verify(std::string("10"), "10", {}, config));
  EXPECT_FALSE(verify(std::nullopt, "10", {}, config));
  EXPECT_FALSE(verify(std::string("11"), "10", {}, config));
  EXPECT_TRUE(verify(std::string("10.0000001"), "10", {}, config));
  EXPECT_FALSE(verify(std::string("10.001"), "10", {}, config));
  EXPECT_TRUE(verify(std::string("\\frac{1}{2}"), "0.5", {}, config));
  EXPECT_TRUE(verify(std::string("1e-12"), "0", {}, config));  // absolute floor
  EXPECT_TRUE(verify(std::string("10 cm"), "10", {}, config));
}

TEST(Verify, InvalidConfigRejected) {
  VerifierConfig bad{.numeric_tolerance = -1.0};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

// Truth table over every (answer, reference) drawn from letters, contents and
// non-options, against a meaning map computed by hand.
TEST(Verify, TwoOptionTruthTable) {
  const std::vector<OptionEntry> options = {{"A", "circle"}, {"B", "triangle"}};
  auto meaning = [](const std::string& s) -> std::string {
    if (s == "A") return "circle";
    if (s == "B") return "triangle";
    return s;
  };
  const std::vector<std::string> answers = {"A", "B", "circle", "triangle", "C", "square"};
  const std::vector<std::string> refs = {"A", "B", "circle", "triangle"};
  const VerifierConfig config;
  for (const auto& a : answers) {
    for (const auto& r : refs) {
      const bool expected = meaning(a) == meaning(r);
      EXPECT_EQ(verify(a, r, options, config), expected) << a << " vs " << r;
    }
  }
  EXPECT_TRUE(verify(std::string("B"), "triangle", options, config));
  EXPECT_TRUE(verify(std::string("(B)"), "triangle", options, config));
}

TEST(Verify, LetterOnlyMode) {
  const std::vector<OptionEntry> options = {{"A", "circle"}, {"B", "triangle"}};
  VerifierConfig config{.option_letter_mode = OptionLetterMode::kLetterOnly};
  EXPECT_TRUE(verify(std::string("B"), "triangle", options, config));
  EXPECT_TRUE(verify(std::string("B"), "B", options, config));
  EXPECT_FALSE(verify(std::string("triangle"), "triangle", options, config));
  EXPECT_FALSE(verify(std::string("A"), "B", options, config));
}

TEST(Verify, OptionsIgnoredWhenAbsent) {
  EXPECT_FALSE(verify(std::string("B"), "triangle", {}, VerifierConfig{}));
}

TEST(Verify, DeterministicSymmetricAndMonotone) {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> mag(-1000.0, 1000.0);
  std::uniform_real_distribution<double> rel(-1e-4, 1e-4);
  const std::vector<std::string> words = {"circle", "Circle ", "10", "10.0", "1,000", "1000", "x=3", "3", "4 cm", "4"};
  for (int trial = 0; trial < 3000; ++trial) {
    std::string a, b;
    if (trial % 2 == 0) {
      const double x = mag(rng);
      const double y = x * (1.0 + rel(rng));
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g", x);
      a = buf;
      std::snprintf(buf, sizeof buf, "%.12g", y);
      b = buf;
    } else {
      a = words[rng() % words.size()];
      b = words[rng() % words.size()];
    }
    VerifierConfig config;
    const bool ab = verify(a, b, {}, config);
    EXPECT_EQ(ab, verify(b, a, {}, config)) << a << " / " << b;
    EXPECT_EQ(ab, verify(a, b, {}, config));
    if (ab) {
      for (double t : {2e-6, 1e-5, 1e-3, 0.5}) {
        config.numeric_tolerance = t;
        EXPECT_TRUE(verify(a, b, {}, config)) << a << " / " << b << " at " << t;
      }
    }
  }
}

TEST(VerifyGroup, FillsVerifierPass) {
  RolloutGroup g;
  g.prompt = {"p", "q", std::nullopt, "10", {}};
  g.rollouts = {Rollout::from_raw(1, "\\boxed{10}"), Rollout::from_raw(2, "\\boxed{9}"), Rollout::from_raw(3, "none")};
  auto v = verify_group(g, VerifierConfig{});
  EXPECT_EQ(v.rollouts[0].verifier_pass, true);
  EXPECT_EQ(v.rollouts[1].verifier_pass, false);
  EXPECT_EQ(v.rollouts[2].verifier_pass, false);
  EXPECT_FALSE(g.rollouts[0].verifier_pass.has_value());
}
