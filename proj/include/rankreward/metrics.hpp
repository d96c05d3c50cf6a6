#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankreward/judge_gateway.hpp"
#include "rankreward/judge_parsers.hpp"
#include "rankreward/rollout.hpp"
#include "rankreward/verifier.hpp"

namespace rankreward {

/// One line of a prediction file. `verdict` may be supplied to skip the judge.
struct PredictionRecord {
  PromptRecord prompt;
  std::string raw_text;
  std::string dataset;
  std::optional<std::string> checkpoint;
  std::optional<ConsistencyVerdict> verdict;
};

PredictionRecord parse_prediction(const nlohmann::json& j);

struct PredictionReadResult {
  std::vector<PredictionRecord> records;
  std::vector<LineError> errors;
};

PredictionReadResult read_predictions_jsonl(std::istream& in);

struct ConsistencyJudgment {
  ConsistencyVerdict verdict = ConsistencyVerdict::kAbstain;
  bool structural = false;  // abstained locally, no judge call
  bool flagged = false;     // judge failed; abstained instead
  std::string error;
  std::uint64_t transcript_id = 0;
};

/// No boxed answer -> abstain without calling the judge. Otherwise one
/// consistency call; judge failure degrades to a flagged abstain.
/// Throws std::invalid_argument on an empty trajectory.
ConsistencyJudgment judge_consistency(const PromptRecord& prompt, std::string_view trajectory,
                                      const std::optional<std::string>& boxed_answer, JudgeGateway& gateway);

struct EvalRecord {
  PromptRecord prompt;
  std::string trajectory;
  std::optional<std::string> boxed_answer;
  int correct = 0;
  ConsistencyVerdict verdict = ConsistencyVerdict::kAbstain;
  bool flagged = false;
  std::string dataset;
  std::optional<std::string> checkpoint;
};

/// Verifies and (unless a verdict is preset) judges one prediction. `gateway` may be
/// null only when every record carries a verdict or lacks a usable answer.
EvalRecord audit_prediction(const PredictionRecord& p, const VerifierConfig& verifier, JudgeGateway* gateway);

/// Audits in parallel (bounded by the gateway); output order matches input.
std::vector<EvalRecord> audit_predictions(const std::vector<PredictionRecord>& predictions,
                                          const VerifierConfig& verifier, JudgeGateway* gateway, int workers);

struct MetricCounts {
  std::size_t n_total = 0;
  std::size_t n_correct = 0;
  std::size_t n_abstain = 0;
  std::size_t n_inconsistent = 0;
  std::size_t n_correct_inconsistent = 0;
  std::size_t n_flagged = 0;
};

struct MetricsSummary {
  MetricCounts counts;
  double acc = 0.0;
  std::optional<double> inc_r;  // undefined when every record abstained
  double cbir = 0.0;
  double rc_acc = 0.0;
  std::size_t inc_r_denominator = 0;
  std::size_t cbir_denominator = 0;
};

/// Rates from counts; rc_acc is (n_correct - n_correct_inconsistent) / n_total.
MetricsSummary metrics_from_counts(const MetricCounts& c);

/// Throws std::invalid_argument on an empty list.
MetricsSummary compute_metrics(std::span<const EvalRecord> records);

/// Equal-weight average of per-dataset rates.
struct MacroAverage {
  std::size_t n_datasets = 0;
  double acc = 0.0;
  std::optional<double> inc_r;  // over datasets where it is defined
  double cbir = 0.0;
  double rc_acc = 0.0;
};

struct MetricsReport {
  MetricsSummary pooled;
  std::map<std::string, MetricsSummary> per_dataset;
  MacroAverage macro;
};

MetricsReport build_report(std::span<const EvalRecord> records);

nlohmann::ordered_json to_json(const MetricsSummary& s);
nlohmann::ordered_json to_json(const MetricsReport& r);
/// Aligned columns; undefined IncR prints as "n/a".
std::string format_table(const MetricsReport& r);
void write_verdict_csv(std::span<const EvalRecord> records, std::ostream& out);

/// Metrics per checkpoint tag, ordered by the trailing step number when every
/// tag has one, otherwise lexically.
std::vector<std::pair<std::string, MetricsSummary>> checkpoint_curve(std::span<const EvalRecord> records);
void write_curve_csv(const std::vector<std::pair<std::string, MetricsSummary>>& curve, std::ostream& out);
/// Flat line chart of Acc, RC-Acc and IncR over checkpoints.
std::string render_curve_svg(const std::vector<std::pair<std::string, MetricsSummary>>& curve);

}  // namespace rankreward
