#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "rankreward/rollout.hpp"

namespace rankreward {

enum class OptionLetterMode {
  kLetterOnly,      // the boxed answer must name an option letter
  kContentAllowed,  // letters and option contents are interchangeable
};

std::string_view to_string(OptionLetterMode mode);
OptionLetterMode parse_option_letter_mode(std::string_view name);

struct VerifierConfig {
  double numeric_tolerance = 1e-6;  // relative; an absolute floor of 1e-9 applies near zero
  bool strip_units = true;
  bool case_fold = true;
  OptionLetterMode option_letter_mode = OptionLetterMode::kContentAllowed;

  void validate() const;
  bool operator==(const VerifierConfig&) const = default;
};

/// Identifies the rule set below; bump when normalization behavior changes.
inline constexpr std::string_view kVerifierRulesVersion = "answer-rules/1";

/// Canonical form of an answer string:
///   trim, unwrap $..$ / \(..\) / \[..\] / \boxed{} / \text{} style wrappers,
///   drop spacing macros, rewrite \frac{a}{b} as a/b, drop a trailing period,
///   case-fold, squeeze whitespace, remove thousands separators, drop a
///   single-letter "x =" prefix, strip trailing units, and print plain
///   decimals canonically (no leading '+', no redundant zeros, "-0" -> "0").
/// Returns nullopt when nothing answerable is left.
std::optional<std::string> normalize_answer(std::string_view text, const VerifierConfig& config);

/// Value of a canonical decimal, scientific or a/b string.
std::optional<double> parse_numeric(std::string_view canonical);

/// r_ver: true iff the boxed answer matches the reference under the rules above,
/// numerically within tolerance, or through the option table when one is supplied.
bool verify(const std::optional<std::string>& boxed_answer, std::string_view reference,
            std::span<const OptionEntry> options, const VerifierConfig& config);

/// Convenience: fills verifier_pass on every rollout of a copy of `group`.
RolloutGroup verify_group(const RolloutGroup& group, const VerifierConfig& config);

}  // namespace rankreward
