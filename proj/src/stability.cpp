#include "rankreward/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <spdlog/spdlog.h>

#include "rankreward/digest.hpp"
#include "rankreward/pipeline.hpp"

namespace rankreward {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::regex kMarker(R"(synthetic-\d+-\d+)");

std::string marker(std::size_t prompt, std::size_t rollout) {
  return "synthetic-" + std::to_string(prompt) + "-" + std::to_string(rollout);
}

std::uint64_t seed_from(const std::string& material) {
  return std::stoull(sha256_hex(material).substr(0, 16), nullptr, 16);
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

void StabilityRunConfig::validate() const {
  if (repeats < 2) throw std::invalid_argument("stability: repeats must be >= 2");
  if (rollouts_per_prompt < 2) throw std::invalid_argument("stability: rollouts_per_prompt must be >= 2");
  if (n_prompts < 1) throw std::invalid_argument("stability: n_prompts must be >= 1");
  if (!(temperature >= 0.0)) throw std::invalid_argument("stability: temperature must be >= 0");
  if (workers < 1) throw std::invalid_argument("stability: workers must be >= 1");
  if (schemes.empty()) throw std::invalid_argument("stability: no schemes");
  for (auto s : schemes) {
    if (s == AuxKind::kPrm) throw std::invalid_argument("stability: schemes are gr_pointwise and rank_groupwise");
  }
}

void SyntheticJudgeModel::validate() const {
  if (!(sigma_p >= 0.0) || !std::isfinite(sigma_p)) throw std::invalid_argument("synthetic judge: sigma_p must be >= 0");
  if (!(p_swap >= 0.0 && p_swap <= 1.0)) throw std::invalid_argument("synthetic judge: p_swap must be in [0, 1]");
  if (!(pass_probability >= 0.0 && pass_probability <= 1.0)) {
    throw std::invalid_argument("synthetic judge: pass_probability must be in [0, 1]");
  }
  if (!(quality_step > 0.0 && quality_step <= 1.0)) throw std::invalid_argument("synthetic judge: quality_step in (0, 1]");
}

SyntheticWorld make_synthetic_world(std::size_t n_prompts, std::size_t rollouts, const SyntheticJudgeModel& model) {
  model.validate();
  std::mt19937_64 rng(seed_from("world|" + std::to_string(model.seed)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution pass(model.pass_probability);
  const auto levels = static_cast<long long>(std::llround(1.0 / model.quality_step));

  SyntheticWorld world;
  for (std::size_t p = 1; p <= n_prompts; ++p) {
    RolloutGroup g;
    g.prompt.prompt_id = "syn-" + std::to_string(p);
    g.prompt.question = "Synthetic item " + std::to_string(p) + ": report the value.";
    g.prompt.reference_answer = std::to_string(p);
    for (std::size_t r = 1; r <= rollouts; ++r) {
      const long long level = std::min(levels, std::llround(unit(rng) * static_cast<double>(levels)));
      const std::string answer = pass(rng) ? g.prompt.reference_answer : std::to_string(p + 100000);
      const std::string key = marker(p, r);
      world.quality[key] = static_cast<double>(level) / static_cast<double>(levels);
      g.rollouts.push_back(Rollout::from_raw(
          static_cast<int>(r), "<think>Trajectory " + key + " works toward the value.</think> \\boxed{" + answer + "}"));
    }
    world.groups.push_back(std::move(g));
  }
  return world;
}

SyntheticJudgeClient::SyntheticJudgeClient(SyntheticJudgeModel model, std::map<std::string, double> quality)
    : model_(model), quality_(std::move(quality)) {
  model_.validate();
}

std::uint64_t SyntheticJudgeClient::next_stream(const std::string& fingerprint) {
  std::lock_guard lock(mu_);
  const std::uint64_t ordinal = seen_[fingerprint]++;
  return seed_from(std::to_string(model_.seed) + "|" + fingerprint + "|" + std::to_string(ordinal));
}

double SyntheticJudgeClient::quality_of(const std::string& text) const {
  std::smatch m;
  if (!std::regex_search(text, m, kMarker)) throw TransportError("synthetic judge: no rollout marker in prompt");
  auto it = quality_.find(m.str());
  if (it == quality_.end()) throw TransportError("synthetic judge: unknown rollout " + m.str());
  return it->second;
}

std::string SyntheticJudgeClient::reply(const JudgeRequest& request, const JudgeEndpointConfig&) {
  std::mt19937_64 rng(next_stream(request.fingerprint()));
  const std::string text = request.rendered();

  if (request.kind == RequestKind::kPointwise) {
    double score = quality_of(text);
    if (model_.sigma_p > 0.0) score += std::normal_distribution<double>(0.0, model_.sigma_p)(rng);
    score = std::clamp(score, 0.0, 1.0);
    return "{\"judge_score\": " + fixed4(score) + ", \"feedback\": \"synthetic\"}";
  }

  if (request.kind == RequestKind::kGroupwise) {
    // Candidate blocks are "[Candidate i]\n<text>" separated by blank lines.
    std::vector<std::pair<int, double>> cands;
    const std::regex header(R"(\[Candidate (\d+)\]\n)");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), header); it != std::sregex_iterator(); ++it) {
      const auto body_start = static_cast<std::size_t>(it->position() + it->length());
      const auto body_end = text.find('\n', body_start);
      cands.emplace_back(std::stoi((*it)[1].str()), quality_of(text.substr(body_start, body_end - body_start)));
    }
    if (cands.empty()) throw TransportError("synthetic judge: no candidates in prompt");
    std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::vector<int>> tiers;
    double last = -1.0;
    for (const auto& [idx, q] : cands) {
      if (tiers.empty() || q != last) tiers.emplace_back();
      tiers.back().push_back(idx);
      last = q;
    }
    if (model_.p_swap > 0.0) {
      std::bernoulli_distribution swap(model_.p_swap);
      for (std::size_t t = 0; t + 1 < tiers.size(); ++t) {
        if (swap(rng)) std::swap(tiers[t], tiers[t + 1]);
      }
    }
    json solutions = json::array();
    for (std::size_t t = 0; t < tiers.size(); ++t) {
      for (int idx : tiers[t]) solutions.push_back({{"index", idx}, {"rank", t + 1}, {"justification", "synthetic"}});
    }
    std::sort(solutions.begin(), solutions.end(),
              [](const json& a, const json& b) { return a["index"].get<int>() < b["index"].get<int>(); });
    return json{{"solutions", solutions}}.dump();
  }

  throw TransportError("synthetic judge: unsupported request kind " + std::string(to_string(request.kind)));
}

RewardTensor::RewardTensor(AuxKind scheme, std::vector<std::string> prompt_ids, std::size_t rollouts,
                           std::size_t repeats)
    : scheme_(scheme),
      prompt_ids_(std::move(prompt_ids)),
      rollouts_(rollouts),
      repeats_(repeats),
      cells_(prompt_ids_.size() * rollouts * repeats) {}

std::optional<double>& RewardTensor::at(std::size_t p, std::size_t r, std::size_t k) {
  if (p >= prompts() || r >= rollouts_ || k >= repeats_) throw std::out_of_range("RewardTensor index");
  return cells_[(p * rollouts_ + r) * repeats_ + k];
}

const std::optional<double>& RewardTensor::at(std::size_t p, std::size_t r, std::size_t k) const {
  return const_cast<RewardTensor*>(this)->at(p, r, k);
}

std::size_t RewardTensor::failed_cells() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::nullopt));
}

RewardTensor run_repeats(const std::vector<RolloutGroup>& groups, AuxKind scheme, const StabilityRunConfig& config,
                         JudgeGateway& gateway, RewardConfig reward) {
  config.validate();
  std::vector<std::string> ids;
  for (const auto& g : groups) {
    if (g.rollouts.size() != config.rollouts_per_prompt) {
      throw std::invalid_argument("run_repeats: group " + g.prompt.prompt_id + " has " +
                                  std::to_string(g.rollouts.size()) + " rollouts, expected " +
                                  std::to_string(config.rollouts_per_prompt));
    }
    ids.push_back(g.prompt.prompt_id);
  }
  reward.aux_kind = scheme;
  const RewardPipeline pipeline({}, reward, gateway);
  RewardTensor tensor(scheme, std::move(ids), config.rollouts_per_prompt, config.repeats);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t p = next++; p < groups.size(); p = next++) {
      // Repeats of one prompt stay sequential so the synthetic noise stream is order-stable.
      for (std::size_t k = 0; k < config.repeats; ++k) {
        try {
          const auto result = pipeline.score(groups[p]);
          for (std::size_t r = 0; r < tensor.rollouts(); ++r) {
            const auto status = result.score.status[r];
            if (status == AuxStatus::kFallback || status == AuxStatus::kParseFailed) continue;
            tensor.at(p, r, k) = result.score.rewards[r].r_aux;
          }
        } catch (const std::exception& e) {
          spdlog::warn("stability: prompt {} repeat {} failed: {}", groups[p].prompt.prompt_id, k + 1, e.what());
        }
      }
    }
  };
  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.workers), groups.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return tensor;
}

double population_variance(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("population_variance: no values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size());
}

VarianceSummary mean_reward_variance(const RewardTensor& tensor) {
  VarianceSummary s;
  double total = 0.0;
  std::vector<double> valid;
  for (std::size_t p = 0; p < tensor.prompts(); ++p) {
    for (std::size_t r = 0; r < tensor.rollouts(); ++r) {
      valid.clear();
      for (std::size_t k = 0; k < tensor.repeats(); ++k) {
        if (const auto& v = tensor.at(p, r, k)) valid.push_back(*v);
      }
      if (valid.size() < 2) {
        ++s.excluded_cells;
        continue;
      }
      total += population_variance(valid);
      ++s.valid_cells;
    }
  }
  if (s.valid_cells == 0) throw std::invalid_argument("mean_reward_variance: no cell has two valid repeats");
  if (s.excluded_cells > 0) {
    spdlog::warn("stability: {} cell(s) with fewer than two valid repeats excluded", s.excluded_cells);
  }
  s.mean_variance = total / static_cast<double>(s.valid_cells);
  return s;
}

StabilityReport summarize_stability(const std::vector<RewardTensor>& tensors, std::uint64_t seed) {
  if (tensors.empty()) throw std::invalid_argument("summarize_stability: no tensors");
  StabilityReport report;
  const auto& first = tensors.front();
  report.n_prompts = first.prompts();
  report.rollouts = first.rollouts();
  report.repeats = first.repeats();
  report.seed = seed;
  for (const auto& t : tensors) {
    if (t.prompt_ids() != first.prompt_ids() || t.rollouts() != first.rollouts() || t.repeats() != first.repeats()) {
      throw std::invalid_argument("summarize_stability: schemes were run on different group sets");
    }
    const std::string name(to_string(t.scheme()));
    if (!report.per_scheme.emplace(name, mean_reward_variance(t)).second) {
      throw std::invalid_argument("summarize_stability: duplicate scheme " + name);
    }
  }
  const auto point = report.per_scheme.find("gr_pointwise");
  const auto group = report.per_scheme.find("rank_groupwise");
  if (point != report.per_scheme.end() && group != report.per_scheme.end() && point->second.mean_variance > 0.0) {
    report.reduction = (point->second.mean_variance - group->second.mean_variance) / point->second.mean_variance;
  }
  return report;
}

StabilityRun compare_schemes(const std::vector<RolloutGroup>& groups, const StabilityRunConfig& config,
                             std::shared_ptr<JudgeClient> client, JudgeEndpointConfig endpoint) {
  config.validate();
  endpoint.temperature = config.temperature;
  JudgeGateway gateway(std::move(client), endpoint);
  StabilityRun run;
  for (auto scheme : config.schemes) run.tensors.push_back(run_repeats(groups, scheme, config, gateway));
  run.report = summarize_stability(run.tensors, config.seed);
  return run;
}

StabilityRun run_synthetic_stability(const StabilityRunConfig& config, const SyntheticJudgeModel& model) {
  config.validate();
  SyntheticJudgeModel m = model;
  m.seed = config.seed;
  auto world = make_synthetic_world(config.n_prompts, config.rollouts_per_prompt, m);
  auto client = std::make_shared<SyntheticJudgeClient>(m, world.quality);
  JudgeEndpointConfig endpoint;
  endpoint.max_concurrent_requests = std::max(1, config.workers);
  endpoint.backoff_base = std::chrono::milliseconds(0);
  return compare_schemes(world.groups, config, client, endpoint);
}

ordered_json to_json(const StabilityReport& r) {
  ordered_json j;
  j["n_prompts"] = r.n_prompts;
  j["rollouts_per_prompt"] = r.rollouts;
  j["repeats"] = r.repeats;
  j["seed"] = r.seed;
  ordered_json schemes = ordered_json::object();
  for (const auto& [name, s] : r.per_scheme) {
    schemes[name] = {{"mean_variance", s.mean_variance}, {"valid_cells", s.valid_cells}, {"excluded_cells", s.excluded_cells}};
  }
  j["schemes"] = std::move(schemes);
  j["reduction"] = r.reduction ? ordered_json(*r.reduction) : ordered_json(nullptr);
  return j;
}

std::string format_table(const StabilityReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %14s %8s %9s\n", "scheme", "mean_variance", "cells", "excluded");
  out << line;
  for (const auto& [name, s] : r.per_scheme) {
    std::snprintf(line, sizeof line, "%-16s %14.6f %8zu %9zu\n", name.c_str(), s.mean_variance, s.valid_cells,
                  s.excluded_cells);
    out << line;
  }
  if (r.reduction) {
    std::snprintf(line, sizeof line, "reduction        %13.1f%%\n", 100.0 * *r.reduction);
  } else {
    std::snprintf(line, sizeof line, "reduction        %14s\n", "undefined");
  }
  out << line;
  return out.str();
}

void write_tensor_jsonl(const RewardTensor& t, std::ostream& out) {
  const std::string scheme(to_string(t.scheme()));
  for (std::size_t p = 0; p < t.prompts(); ++p) {
    for (std::size_t r = 0; r < t.rollouts(); ++r) {
      ordered_json reps = ordered_json::array();
      for (std::size_t k = 0; k < t.repeats(); ++k) {
        const auto& v = t.at(p, r, k);
        reps.push_back(v ? ordered_json(*v) : ordered_json(nullptr));
      }
      ordered_json line;
      line["scheme"] = scheme;
      line["prompt_id"] = t.prompt_ids()[p];
      line["rollout"] = r + 1;
      line["repeats"] = std::move(reps);
      out << line.dump() << '\n';
    }
  }
}

std::vector<RewardTensor> read_tensor_jsonl(std::istream& in) {
  struct Rows {
    AuxKind scheme;
    std::vector<std::string> prompts;
    std::vector<std::vector<std::vector<std::optional<double>>>> cells;  // [prompt][rollout][repeat]
  };
  std::vector<Rows> by_scheme;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw SchemaError(where, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("scheme") || !j.contains("prompt_id") || !j.contains("rollout") ||
        !j.contains("repeats") || !j["repeats"].is_array()) {
      throw SchemaError(where, "expected {scheme, prompt_id, rollout, repeats}");
    }
    const AuxKind scheme = parse_aux_kind(j["scheme"].get<std::string>());
    auto rows = std::find_if(by_scheme.begin(), by_scheme.end(), [&](const Rows& x) { return x.scheme == scheme; });
    if (rows == by_scheme.end()) rows = by_scheme.insert(by_scheme.end(), Rows{scheme, {}, {}});
    const auto pid = j["prompt_id"].get<std::string>();
    if (rows->prompts.empty() || rows->prompts.back() != pid) {
      rows->prompts.push_back(pid);
      rows->cells.emplace_back();
    }
    if (j["rollout"].get<std::size_t>() != rows->cells.back().size() + 1) {
      throw SchemaError(where, "rollouts out of order");
    }
    std::vector<std::optional<double>> reps;
    for (const auto& v : j["repeats"]) {
      if (v.is_null()) {
        reps.emplace_back();
      } else if (v.is_number()) {
        reps.emplace_back(v.get<double>());
      } else {
        throw SchemaError(where + ".repeats", "expected numbers or null");
      }
    }
    rows->cells.back().push_back(std::move(reps));
  }

  std::vector<RewardTensor> out;
  for (const auto& rows : by_scheme) {
    const std::size_t n_roll = rows.cells.front().size();
    const std::size_t n_rep = rows.cells.front().front().size();
    RewardTensor t(rows.scheme, rows.prompts, n_roll, n_rep);
    for (std::size_t p = 0; p < rows.cells.size(); ++p) {
      if (rows.cells[p].size() != n_roll) throw SchemaError(rows.prompts[p], "ragged rollout count");
      for (std::size_t r = 0; r < n_roll; ++r) {
        if (rows.cells[p][r].size() != n_rep) throw SchemaError(rows.prompts[p], "ragged repeat count");
        for (std::size_t k = 0; k < n_rep; ++k) t.at(p, r, k) = rows.cells[p][r][k];
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace rankreward
