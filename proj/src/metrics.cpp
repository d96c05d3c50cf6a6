#include "rankreward/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <spdlog/spdlog.h>

#include "rankreward/templates.hpp"

namespace rankreward {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw SchemaError(std::string(".") + key, "expected a string");
  return it->get<std::string>();
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

ordered_json optional_rate(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<long long> trailing_number(const std::string& tag) {
  std::size_t end = tag.size();
  std::size_t start = end;
  while (start > 0 && std::isdigit(static_cast<unsigned char>(tag[start - 1]))) --start;
  if (start == end || end - start > 18) return std::nullopt;
  return std::stoll(tag.substr(start));
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

PredictionRecord parse_prediction(const json& j) {
  PredictionRecord p;
  p.prompt = parse_prompt_record(j, "");
  auto it = j.find("raw_text");
  if (it == j.end() || !it->is_string()) throw SchemaError(".raw_text", "expected a string");
  p.raw_text = it->get<std::string>();
  if (p.raw_text.empty()) throw SchemaError(".raw_text", "must be nonempty");
  p.dataset = optional_string(j, "dataset").value_or("");
  p.checkpoint = optional_string(j, "checkpoint");
  if (auto v = optional_string(j, "verdict")) {
    try {
      p.verdict = parse_consistency_name(*v);
    } catch (const std::exception&) {
      throw SchemaError(".verdict", "unknown verdict '" + *v + "'");
    }
  }
  return p;
}

PredictionReadResult read_predictions_jsonl(std::istream& in) {
  PredictionReadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      result.records.push_back(parse_prediction(json::parse(line)));
    } catch (const json::parse_error& e) {
      result.errors.push_back({line_no, std::string("invalid JSON: ") + e.what()});
    } catch (const SchemaError& e) {
      result.errors.push_back({line_no, e.what()});
    }
  }
  return result;
}

ConsistencyJudgment judge_consistency(const PromptRecord& prompt, std::string_view trajectory,
                                      const std::optional<std::string>& boxed_answer, JudgeGateway& gateway) {
  if (trajectory.empty()) throw std::invalid_argument("judge_consistency: empty trajectory");
  ConsistencyJudgment out;
  if (!boxed_answer || boxed_answer->find_first_not_of(" \t\n") == std::string::npos) {
    out.structural = true;
    return out;
  }
  const auto text = render_consistency_prompt(prompt.question, prompt.options, trajectory, *boxed_answer);
  const auto outcome = gateway.ask(JudgeRequest::single_user(RequestKind::kConsistency, text),
                                   [](const std::string& raw) { return parse_consistency_verdict(raw); });
  out.transcript_id = outcome.transcript_id;
  if (outcome.ok()) {
    out.verdict = *outcome.value;
    return out;
  }
  out.flagged = true;
  out.error = outcome.error;
  gateway.transcripts().add_flag(outcome.transcript_id, "abstain_after_failure");
  spdlog::warn("consistency judge failed for {}: {}", prompt.prompt_id, outcome.error);
  return out;
}

EvalRecord audit_prediction(const PredictionRecord& p, const VerifierConfig& verifier, JudgeGateway* gateway) {
  const SplitResponse split = split_response(p.raw_text);
  EvalRecord r;
  r.prompt = p.prompt;
  r.trajectory = split.trajectory;
  r.boxed_answer = split.boxed_answer;
  r.correct = verify(split.boxed_answer, p.prompt.reference_answer, p.prompt.options, verifier) ? 1 : 0;
  r.dataset = p.dataset;
  r.checkpoint = p.checkpoint;
  if (p.verdict) {
    r.verdict = *p.verdict;
  } else if (split.boxed_answer && !split.trajectory.empty()) {
    if (gateway == nullptr) throw std::invalid_argument("audit_prediction: no judge configured for " + p.prompt.prompt_id);
    const auto j = judge_consistency(p.prompt, split.trajectory, split.boxed_answer, *gateway);
    r.verdict = j.verdict;
    r.flagged = j.flagged;
  }
  // Otherwise: no answer, or no reasoning to compare it with; abstain.
  return r;
}

std::vector<EvalRecord> audit_predictions(const std::vector<PredictionRecord>& predictions,
                                          const VerifierConfig& verifier, JudgeGateway* gateway, int workers) {
  std::vector<EvalRecord> out(predictions.size());
  const auto n_threads = static_cast<std::size_t>(std::clamp(workers, 1, 64));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < predictions.size(); i = next++) {
      try {
        out[i] = audit_prediction(predictions[i], verifier, gateway);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(n_threads, predictions.size()); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

MetricsSummary metrics_from_counts(const MetricCounts& c) {
  if (c.n_total == 0) throw std::invalid_argument("metrics: no records");
  if (c.n_correct > c.n_total || c.n_abstain + c.n_inconsistent > c.n_total ||
      c.n_correct_inconsistent > std::min(c.n_correct, c.n_inconsistent)) {
    throw std::invalid_argument("metrics: inconsistent counts");
  }
  MetricsSummary s;
  s.counts = c;
  s.cbir_denominator = c.n_total;
  s.inc_r_denominator = c.n_total - c.n_abstain;
  s.acc = ratio(c.n_correct, c.n_total);
  s.cbir = ratio(c.n_correct_inconsistent, c.n_total);
  s.rc_acc = ratio(c.n_correct - c.n_correct_inconsistent, c.n_total);
  if (s.inc_r_denominator > 0) s.inc_r = ratio(c.n_inconsistent, s.inc_r_denominator);
  return s;
}

MetricsSummary compute_metrics(std::span<const EvalRecord> records) {
  MetricCounts c;
  for (const auto& r : records) {
    ++c.n_total;
    c.n_correct += r.correct ? 1 : 0;
    if (r.verdict == ConsistencyVerdict::kAbstain) ++c.n_abstain;
    if (r.verdict == ConsistencyVerdict::kInconsistent) {
      ++c.n_inconsistent;
      if (r.correct) ++c.n_correct_inconsistent;
    }
    if (r.flagged) ++c.n_flagged;
  }
  return metrics_from_counts(c);
}

MetricsReport build_report(std::span<const EvalRecord> records) {
  MetricsReport report;
  report.pooled = compute_metrics(records);
  std::map<std::string, std::vector<EvalRecord>> by_dataset;
  for (const auto& r : records) by_dataset[r.dataset].push_back(r);
  std::size_t inc_defined = 0;
  double inc_sum = 0.0;
  for (const auto& [name, subset] : by_dataset) {
    const auto s = compute_metrics(subset);
    report.macro.acc += s.acc;
    report.macro.cbir += s.cbir;
    report.macro.rc_acc += s.rc_acc;
    if (s.inc_r) {
      inc_sum += *s.inc_r;
      ++inc_defined;
    }
    report.per_dataset.emplace(name, s);
  }
  const auto d = static_cast<double>(by_dataset.size());
  report.macro.n_datasets = by_dataset.size();
  report.macro.acc /= d;
  report.macro.cbir /= d;
  report.macro.rc_acc /= d;
  if (inc_defined > 0) report.macro.inc_r = inc_sum / static_cast<double>(inc_defined);
  return report;
}

ordered_json to_json(const MetricsSummary& s) {
  ordered_json j;
  j["n_total"] = s.counts.n_total;
  j["n_correct"] = s.counts.n_correct;
  j["n_abstain"] = s.counts.n_abstain;
  j["n_inconsistent"] = s.counts.n_inconsistent;
  j["n_correct_inconsistent"] = s.counts.n_correct_inconsistent;
  j["n_flagged"] = s.counts.n_flagged;
  j["acc"] = s.acc;
  j["inc_r"] = optional_rate(s.inc_r);
  j["cbir"] = s.cbir;
  j["rc_acc"] = s.rc_acc;
  j["inc_r_denominator"] = s.inc_r_denominator;
  j["cbir_denominator"] = s.cbir_denominator;
  return j;
}

ordered_json to_json(const MetricsReport& r) {
  ordered_json j;
  j["pooled"] = to_json(r.pooled);
  ordered_json per = ordered_json::object();
  for (const auto& [name, s] : r.per_dataset) per[name] = to_json(s);
  j["per_dataset"] = std::move(per);
  j["macro"] = {{"n_datasets", r.macro.n_datasets},
                {"acc", r.macro.acc},
                {"inc_r", optional_rate(r.macro.inc_r)},
                {"cbir", r.macro.cbir},
                {"rc_acc", r.macro.rc_acc}};
  return j;
}

std::string format_table(const MetricsReport& r) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"dataset", "n", "Acc", "IncR", "CBIR", "RC-Acc", "abstain", "flagged"});
  auto add = [&](const std::string& name, const MetricsSummary& s) {
    rows.push_back({name, std::to_string(s.counts.n_total), percent(s.acc), s.inc_r ? percent(*s.inc_r) : "n/a",
                    percent(s.cbir), percent(s.rc_acc), std::to_string(s.counts.n_abstain),
                    std::to_string(s.counts.n_flagged)});
  };
  if (r.per_dataset.size() > 1) {
    for (const auto& [name, s] : r.per_dataset) add(name.empty() ? "(unnamed)" : name, s);
    rows.push_back({"macro", std::to_string(r.macro.n_datasets), percent(r.macro.acc),
                    r.macro.inc_r ? percent(*r.macro.inc_r) : "n/a", percent(r.macro.cbir), percent(r.macro.rc_acc),
                    "", ""});
  }
  add("pooled", r.pooled);

  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      line += c == 0 ? row[c] + pad : "  " + pad + row[c];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

void write_verdict_csv(std::span<const EvalRecord> records, std::ostream& out) {
  out << "prompt_id,dataset,checkpoint,boxed_answer,correct,verdict,flagged\n";
  for (const auto& r : records) {
    out << csv_field(r.prompt.prompt_id) << ',' << csv_field(r.dataset) << ',' << csv_field(r.checkpoint.value_or(""))
        << ',' << csv_field(r.boxed_answer.value_or("")) << ',' << r.correct << ',' << to_string(r.verdict) << ','
        << (r.flagged ? 1 : 0) << '\n';
  }
}

std::vector<std::pair<std::string, MetricsSummary>> checkpoint_curve(std::span<const EvalRecord> records) {
  std::map<std::string, std::vector<EvalRecord>> by_tag;
  for (const auto& r : records) {
    if (r.checkpoint) by_tag[*r.checkpoint].push_back(r);
  }
  std::vector<std::string> tags;
  for (const auto& [tag, _] : by_tag) tags.push_back(tag);
  const bool numeric = std::all_of(tags.begin(), tags.end(), [](const std::string& t) { return trailing_number(t); });
  if (numeric) {
    std::stable_sort(tags.begin(), tags.end(),
                     [](const std::string& a, const std::string& b) { return *trailing_number(a) < *trailing_number(b); });
  }
  std::vector<std::pair<std::string, MetricsSummary>> curve;
  for (const auto& t : tags) curve.emplace_back(t, compute_metrics(by_tag[t]));
  return curve;
}

void write_curve_csv(const std::vector<std::pair<std::string, MetricsSummary>>& curve, std::ostream& out) {
  out << "checkpoint,n_total,acc,inc_r,cbir,rc_acc\n";
  for (const auto& [tag, s] : curve) {
    out << csv_field(tag) << ',' << s.counts.n_total << ',' << json(s.acc).dump() << ','
        << (s.inc_r ? json(*s.inc_r).dump() : "") << ',' << json(s.cbir).dump() << ',' << json(s.rc_acc).dump()
        << '\n';
  }
}

std::string render_curve_svg(const std::vector<std::pair<std::string, MetricsSummary>>& curve) {
  constexpr double kWidth = 640, kHeight = 360, kLeft = 50, kRight = 20, kTop = 20, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const std::size_t n = curve.size();
  auto x_at = [&](std::size_t i) { return kLeft + (n <= 1 ? plot_w / 2 : plot_w * static_cast<double>(i) / (n - 1)); };
  auto y_at = [&](double v) { return kTop + plot_h * (1.0 - v); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return std::string(buf);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = tick / 4.0;
    svg << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + plot_w << "\" y1=\"" << num(y_at(v)) << "\" y2=\""
        << num(y_at(v)) << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(y_at(v) + 4) << "\" text-anchor=\"end\">" << tick * 25
        << "%</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    svg << "<text x=\"" << num(x_at(i)) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
        << xml_escape(curve[i].first) << "</text>\n";
  }
  struct Series {
    const char* name;
    const char* color;
    std::optional<double> (*get)(const MetricsSummary&);
  };
  const Series series[] = {
      {"Acc", "#1f77b4", [](const MetricsSummary& s) -> std::optional<double> { return s.acc; }},
      {"RC-Acc", "#2ca02c", [](const MetricsSummary& s) -> std::optional<double> { return s.rc_acc; }},
      {"IncR", "#d62728", [](const MetricsSummary& s) { return s.inc_r; }},
  };
  int legend = 0;
  for (const auto& sr : series) {
    std::string points;
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = sr.get(curve[i].second);
      if (!v) continue;
      if (!points.empty()) points += ' ';
      points += num(x_at(i)) + "," + num(y_at(*v));
    }
    if (!points.empty()) {
      svg << "<polyline fill=\"none\" stroke=\"" << sr.color << "\" stroke-width=\"2\" points=\"" << points
          << "\"/>\n";
    }
    const double lx = kLeft + 10 + 90.0 * legend++;
    svg << "<rect x=\"" << num(lx) << "\" y=\"" << kHeight - 22 << "\" width=\"12\" height=\"3\" fill=\"" << sr.color
        << "\"/>\n";
    svg << "<text x=\"" << num(lx + 16) << "\" y=\"" << kHeight - 17 << "\">" << sr.name << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace rankreward
