#include "rankreward/verifier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "rankreward/text.hpp"

namespace rankreward {

namespace {

constexpr std::string_view kDegree = "\xC2\xB0";
constexpr double kAbsoluteFloor = 1e-9;

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

std::size_t matching_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size() && (s[i + 1] == '{' || s[i + 1] == '}')) {
      ++i;
      continue;
    }
    if (s[i] == '{') {
      ++depth;
    } else if (s[i] == '}' && --depth == 0) {
      return i;
    }
  }
  return std::string_view::npos;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Removes a control word unless it is the prefix of a longer one (\left vs \leftarrow).
void remove_command(std::string& s, std::string_view cmd) {
  std::size_t pos = 0;
  while ((pos = s.find(cmd, pos)) != std::string::npos) {
    const std::size_t end = pos + cmd.size();
    if (end < s.size() && is_alpha(s[end])) {
      pos = end;
      continue;
    }
    s.erase(pos, cmd.size());
  }
}

constexpr std::string_view kWrapperMacros[] = {
    "\\boxed", "\\fbox", "\\textbf", "\\textit", "\\text", "\\mathrm", "\\mathbf", "\\operatorname", "\\mbox",
};

// If s is exactly `\macro{inner}` returns inner.
std::optional<std::string_view> strip_macro_wrapper(std::string_view s) {
  for (std::string_view macro : kWrapperMacros) {
    if (s.substr(0, macro.size()) != macro) continue;
    std::size_t i = macro.size();
    while (i < s.size() && s[i] == ' ') ++i;
    if (i >= s.size() || s[i] != '{') continue;
    if (matching_brace(s, i) == s.size() - 1) return s.substr(i + 1, s.size() - i - 2);
  }
  return std::nullopt;
}

std::string unwrap(std::string_view s) {
  for (;;) {
    s = text::trim(s);
    if (auto inner = strip_macro_wrapper(s)) {
      s = *inner;
      continue;
    }
    if (s.size() >= 4 && s.substr(0, 2) == "$$" && s.substr(s.size() - 2) == "$$") {
      s = s.substr(2, s.size() - 4);
      continue;
    }
    if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
      s = s.substr(1, s.size() - 2);
      continue;
    }
    if (s.size() >= 4 && (s.substr(0, 2) == "\\(" && s.substr(s.size() - 2) == "\\)")) {
      s = s.substr(2, s.size() - 4);
      continue;
    }
    if (s.size() >= 4 && (s.substr(0, 2) == "\\[" && s.substr(s.size() - 2) == "\\]")) {
      s = s.substr(2, s.size() - 4);
      continue;
    }
    if (s.size() >= 2 && s.front() == '{' && matching_brace(s, 0) == s.size() - 1) {
      s = s.substr(1, s.size() - 2);
      continue;
    }
    return std::string(s);
  }
}

// \text{cm} anywhere -> cm
void inline_text_macros(std::string& s) {
  for (std::string_view macro : kWrapperMacros) {
    std::size_t pos = 0;
    while ((pos = s.find(macro, pos)) != std::string::npos) {
      std::size_t i = pos + macro.size();
      while (i < s.size() && s[i] == ' ') ++i;
      if (i >= s.size() || s[i] != '{') {
        pos += macro.size();
        continue;
      }
      const std::size_t close = matching_brace(s, i);
      if (close == std::string::npos) {
        pos += macro.size();
        continue;
      }
      const std::string inner = s.substr(i + 1, close - i - 1);
      s.replace(pos, close - pos + 1, inner);
    }
  }
}

bool is_atomic(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return is_digit(c) || is_alpha(c) || c == '.'; });
}

// \frac{a}{b} -> a/b, \frac12 -> 1/2; non-atomic parts are parenthesized.
void rewrite_fractions(std::string& s) {
  replace_all(s, "\\dfrac", "\\frac");
  replace_all(s, "\\tfrac", "\\frac");
  std::size_t pos = 0;
  while ((pos = s.find("\\frac", pos)) != std::string::npos) {
    std::size_t i = pos + 5;
    auto read_group = [&](std::size_t& at) -> std::optional<std::string> {
      while (at < s.size() && s[at] == ' ') ++at;
      if (at >= s.size()) return std::nullopt;
      if (s[at] == '{') {
        const std::size_t close = matching_brace(s, at);
        if (close == std::string::npos) return std::nullopt;
        std::string inner = s.substr(at + 1, close - at - 1);
        at = close + 1;
        return inner;
      }
      if (is_digit(s[at]) || is_alpha(s[at])) return std::string(1, s[at++]);
      return std::nullopt;
    };
    auto num = read_group(i);
    auto den = num ? read_group(i) : std::nullopt;
    if (!num || !den) {
      pos += 5;
      continue;
    }
    auto part = [](const std::string& p) { return is_atomic(p) ? p : "(" + p + ")"; };
    const std::string repl = part(*num) + "/" + part(*den);
    s.replace(pos, i - pos, repl);
    pos += repl.size();
  }
}

bool is_operator_like(char c) {
  static constexpr std::string_view kOps = ",+-*/=()[]{}^_<>|:;";
  return kOps.find(c) != std::string_view::npos;
}

std::string squeeze_spaces(std::string_view s) {
  std::string collapsed;
  for (char c : s) {
    if (text::is_space(c)) {
      if (!collapsed.empty() && collapsed.back() != ' ') collapsed.push_back(' ');
    } else {
      collapsed.push_back(c);
    }
  }
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  std::string out;
  for (std::size_t i = 0; i < collapsed.size(); ++i) {
    const char c = collapsed[i];
    if (c == ' ') {
      const char prev = out.empty() ? '\0' : out.back();
      const char next = i + 1 < collapsed.size() ? collapsed[i + 1] : '\0';
      if (prev == '\0' || is_operator_like(prev) || is_operator_like(next)) continue;
    }
    out.push_back(c);
  }
  return out;
}

// 1,234,567 -> 1234567; only well-formed groups of three digits qualify.
std::string drop_thousands_separators(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const bool token_start = is_digit(s[i]) && (i == 0 || (!is_digit(s[i - 1]) && s[i - 1] != '.' && s[i - 1] != ','));
    if (!token_start) {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && is_digit(s[j])) ++j;
    const std::size_t lead = j - i;
    std::size_t k = j;
    std::size_t groups = 0;
    if (lead <= 3) {
      while (k + 3 < s.size() && s[k] == ',' && is_digit(s[k + 1]) && is_digit(s[k + 2]) &&
             is_digit(s[k + 3]) && (k + 4 == s.size() || !is_digit(s[k + 4]))) {
        k += 4;
        ++groups;
      }
    }
    if (groups == 0) {
      out.append(s.substr(i, j - i));
      i = j;
      continue;
    }
    for (std::size_t t = i; t < k; ++t) {
      if (s[t] != ',') out.push_back(s[t]);
    }
    i = k;
  }
  return out;
}

// Length of a leading plain number (sign, digits, one '.', optional /denominator).
std::size_t numeric_prefix(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
  const std::size_t digits_from = i;
  bool dot = false;
  while (i < s.size() && (is_digit(s[i]) || (s[i] == '.' && !dot))) {
    if (s[i] == '.') dot = true;
    ++i;
  }
  if (i == digits_from || (i == digits_from + 1 && dot)) return 0;
  if (i + 1 < s.size() && s[i] == '/' && is_digit(s[i + 1])) {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
  }
  return i;
}

bool looks_like_unit(std::string_view rest) {
  rest = text::trim(rest);
  if (rest.empty() || rest.size() > 24) return false;
  const bool leads_ok = is_alpha(rest[0]) || rest[0] == '%' || rest.substr(0, kDegree.size()) == kDegree;
  if (!leads_ok) return false;
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const char c = rest[i];
    if (is_alpha(c) || c == '%' || c == '/' || c == '*' || c == '.' || c == ' ' || c == '^' || c == '{' ||
        c == '}' || c == '-') {
      continue;
    }
    if (rest.substr(i, kDegree.size()) == kDegree) {
      ++i;
      continue;
    }
    if (is_digit(c)) {
      // exponents only: m^2, s^{-1}
      std::size_t back = i;
      while (back > 0 && (is_digit(rest[back - 1]) || rest[back - 1] == '{' || rest[back - 1] == '-')) --back;
      if (back > 0 && rest[back - 1] == '^') continue;
      return false;
    }
    return false;
  }
  return true;
}

// Decimal literal with sign, no exponent.
bool is_plain_decimal(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
  bool digit = false, dot = false;
  for (; i < s.size(); ++i) {
    if (is_digit(s[i])) {
      digit = true;
    } else if (s[i] == '.' && !dot) {
      dot = true;
    } else {
      return false;
    }
  }
  return digit;
}

std::string canonical_decimal(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    negative = s[0] == '-';
    s.remove_prefix(1);
  }
  std::string_view int_part = s, frac_part;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    int_part = s.substr(0, dot);
    frac_part = s.substr(dot + 1);
  }
  while (int_part.size() > 1 && int_part.front() == '0') int_part.remove_prefix(1);
  while (!frac_part.empty() && frac_part.back() == '0') frac_part.remove_suffix(1);
  std::string out = int_part.empty() ? "0" : std::string(int_part);
  if (!frac_part.empty()) out += "." + std::string(frac_part);
  if (negative && out != "0") out.insert(out.begin(), '-');
  return out;
}

std::string canonical_number_form(const std::string& s) {
  if (is_plain_decimal(s)) return canonical_decimal(s);
  if (auto slash = s.find('/'); slash != std::string::npos && s.find('/', slash + 1) == std::string::npos) {
    const std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    if (is_plain_decimal(num) && is_plain_decimal(den) && den.find_first_of("+-") == std::string::npos) {
      return canonical_decimal(num) + "/" + canonical_decimal(den);
    }
  }
  return s;
}

bool numbers_close(double a, double b, double rel_tol) {
  if (a == b) return true;
  const double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= std::max(rel_tol * scale, kAbsoluteFloor);
}

bool answers_equal(const std::string& a, const std::string& b, double tol) {
  if (a == b) return true;
  auto x = parse_numeric(a);
  auto y = parse_numeric(b);
  return x && y && numbers_close(*x, *y, tol);
}

std::string_view strip_letter_decoration(std::string_view s) {
  s = text::trim(s);
  if (text::starts_with_ci(s, "option")) s = text::trim(s.substr(6));
  if (text::starts_with_ci(s, "choice")) s = text::trim(s.substr(6));
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')') s = s.substr(1, s.size() - 2);
  while (!s.empty() && (s.back() == ')' || s.back() == '.' || s.back() == ':')) s.remove_suffix(1);
  return text::trim(s);
}

std::optional<std::size_t> option_index_for_letter(std::string_view answer, std::span<const OptionEntry> options) {
  const std::string key = text::to_lower_ascii(strip_letter_decoration(answer));
  if (key.empty()) return std::nullopt;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (text::to_lower_ascii(text::trim(options[i].letter)) == key) return i;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(OptionLetterMode mode) {
  return mode == OptionLetterMode::kLetterOnly ? "letter_only" : "content_allowed";
}

OptionLetterMode parse_option_letter_mode(std::string_view name) {
  if (name == "letter_only") return OptionLetterMode::kLetterOnly;
  if (name == "content_allowed") return OptionLetterMode::kContentAllowed;
  throw std::invalid_argument("unknown option_letter_mode '" + std::string(name) + "'");
}

void VerifierConfig::validate() const {
  if (!std::isfinite(numeric_tolerance) || numeric_tolerance < 0.0) {
    throw std::invalid_argument("numeric_tolerance must be finite and >= 0");
  }
}

std::optional<std::string> normalize_answer(std::string_view input, const VerifierConfig& config) {
  std::string s = unwrap(input);
  if (s.empty()) return std::nullopt;

  replace_all(s, "{,}", ",");
  replace_all(s, "\\%", "%");
  replace_all(s, "\\$", "$");
  replace_all(s, "^{\\circ}", kDegree);
  replace_all(s, "^\\circ", kDegree);
  remove_command(s, "\\circ");
  replace_all(s, "\\degree", kDegree);
  for (std::string_view cmd : {"\\left", "\\right", "\\displaystyle"}) remove_command(s, cmd);
  for (std::string_view thin : {"\\!", "\\,", "\\;", "\\:"}) replace_all(s, thin, "");
  replace_all(s, "\\ ", " ");
  replace_all(s, "~", " ");
  inline_text_macros(s);
  rewrite_fractions(s);
  s = unwrap(s);

  if (s.size() > 1 && s.back() == '.') s.pop_back();
  if (config.case_fold) s = text::to_lower_ascii(s);
  s = squeeze_spaces(s);
  s = drop_thousands_separators(s);

  if (s.size() > 2 && is_alpha(s[0]) && s[1] == '=') s = s.substr(2);

  if (config.strip_units) {
    if (!s.empty() && s.front() == '$' && s.size() > 1 && is_digit(s[1])) s.erase(0, 1);
    const std::size_t n = numeric_prefix(s);
    if (n > 0 && n < s.size() && looks_like_unit(std::string_view(s).substr(n))) s.resize(n);
  }

  s = canonical_number_form(s);
  if (text::trim(s).empty()) return std::nullopt;
  return s;
}

std::optional<double> parse_numeric(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  auto parse_one = [](std::string_view t) -> std::optional<double> {
    if (!t.empty() && t.front() == '+') t.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  };
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = parse_one(s.substr(0, slash));
    auto den = parse_one(s.substr(slash + 1));
    if (!num || !den || *den == 0.0) return std::nullopt;
    return *num / *den;
  }
  return parse_one(s);
}

bool verify(const std::optional<std::string>& boxed_answer, std::string_view reference,
            std::span<const OptionEntry> options, const VerifierConfig& config) {
  if (!boxed_answer) return false;
  const auto answer = normalize_answer(*boxed_answer, config);
  const auto ref = normalize_answer(reference, config);
  if (!answer || !ref) return false;
  const double tol = config.numeric_tolerance;

  if (options.empty()) return answers_equal(*answer, *ref, tol);

  std::vector<std::optional<std::string>> contents;
  contents.reserve(options.size());
  for (const auto& o : options) contents.push_back(normalize_answer(o.content, config));

  const auto answer_letter = option_index_for_letter(*answer, options);
  const auto ref_letter = option_index_for_letter(*ref, options);

  if (config.option_letter_mode == OptionLetterMode::kLetterOnly) {
    if (!answer_letter) return false;
    if (ref_letter) return *answer_letter == *ref_letter;
    const auto& content = contents[*answer_letter];
    return content && answers_equal(*content, *ref, tol);
  }

  if (answers_equal(*answer, *ref, tol)) return true;
  if (answer_letter && ref_letter) return *answer_letter == *ref_letter;
  if (answer_letter) {
    const auto& content = contents[*answer_letter];
    if (content && answers_equal(*content, *ref, tol)) return true;
  }
  if (ref_letter) {
    const auto& content = contents[*ref_letter];
    if (content && answers_equal(*answer, *content, tol)) return true;
  }
  return false;
}

RolloutGroup verify_group(const RolloutGroup& group, const VerifierConfig& config) {
  RolloutGroup out = group;
  for (auto& r : out.rollouts) {
    r.verifier_pass = verify(r.boxed_answer, group.prompt.reference_answer, group.prompt.options, config);
  }
  return out;
}

}  // namespace rankreward
