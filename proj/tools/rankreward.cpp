// rankreward: command-line front end for scoring, auditing, stability runs and test judges.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rankreward/metrics.hpp"
#include "rankreward/mock_judge.hpp"
#include "rankreward/reward_io.hpp"
#include "rankreward/service.hpp"
#include "rankreward/stability.hpp"

using namespace rankreward;

namespace {

constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Options shared by every subcommand that talks to a judge.
struct JudgeOptions {
  std::optional<std::string> mode;
  std::optional<std::string> mock_script;
  std::optional<std::string> url;
  std::optional<std::string> model;
  std::optional<int> max_concurrent;
  std::optional<int> retry_budget;
  std::optional<double> temperature;

  void add_to(CLI::App* app, const std::vector<std::string>& modes) {
    app->add_option("--judge", mode, "Judge backend")->check(CLI::IsMember(modes));
    app->add_option("--mock-script", mock_script, "Scripted mock judge replies (JSON)");
    app->add_option("--judge-url", url, "Chat-completion base URL");
    app->add_option("--judge-model", model, "Judge model name");
    app->add_option("--max-concurrent", max_concurrent, "Bound on in-flight judge calls");
    app->add_option("--retry-budget", retry_budget, "Retries per judge interaction");
    app->add_option("--judge-temperature", temperature, "Judge sampling temperature");
  }

  void fill(Settings& s) const {
    if (mode && *mode != "synthetic") s["judge.mode"] = *mode;
    if (mock_script) {
      s["judge.mock_script"] = *mock_script;
      if (!mode) s["judge.mode"] = "mock";
    }
    if (url) s["judge.base_url"] = *url;
    if (model) s["judge.model_name"] = *model;
    if (max_concurrent) s["judge.max_concurrent_requests"] = std::to_string(*max_concurrent);
    if (retry_budget) s["judge.retry_budget"] = std::to_string(*retry_budget);
    if (temperature) s["judge.temperature"] = nlohmann::json(*temperature).dump();
  }
};

struct Globals {
  std::optional<std::string> config_file;
  std::vector<std::string> overrides;  // key=value
  std::optional<std::string> log_level;
};

ServiceConfig resolve_config(const Globals& g, Settings cli) {
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cli[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (g.log_level) cli["server.log_level"] = *g.log_level;
  try {
    auto config = load_config(g.config_file, process_env_settings(), cli);
    spdlog::set_level(spdlog::level::from_str(config.log_level));
    spdlog::debug("config digest {}", config.digest());
    return config;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

template <class Errors>
void fail_on_line_errors(const std::string& path, const Errors& errors) {
  if (errors.empty()) return;
  for (const auto& e : errors) std::cerr << path << ":" << e.line << ": " << e.message << "\n";
  throw std::runtime_error(path + ": " + std::to_string(errors.size()) + " malformed line(s)");
}

// ---- score ---------------------------------------------------------------

struct ScoreOptions {
  std::string in;
  std::optional<std::string> out;
  std::optional<std::string> aux_kind;
  std::optional<std::string> mapping;
  std::optional<double> lambda;
  std::optional<std::string> transcripts;
  int workers = 4;
  JudgeOptions judge;
};

int run_score(const Globals& g, const ScoreOptions& o) {
  Settings cli;
  if (o.aux_kind) cli["reward.aux_kind"] = *o.aux_kind;
  if (o.mapping) cli["reward.mapping"] = *o.mapping;
  if (o.lambda) cli["reward.lambda"] = nlohmann::json(*o.lambda).dump();
  o.judge.fill(cli);
  const ServiceConfig config = resolve_config(g, cli);

  auto in = open_in(o.in);
  const auto read = read_rollout_jsonl(in);
  fail_on_line_errors(o.in, read.errors);

  JudgeGateway gateway(make_judge_client(config), config.judge);
  const RewardPipeline pipeline(config.verifier, config.reward, gateway, config.splitter);
  const auto results = score_batch(pipeline, read.groups, o.workers);

  std::vector<GroupRewards> batch;
  for (const auto& r : results) batch.push_back(r.rewards());
  const auto summary = format_summary(summarize_batch(results));
  if (o.out) {
    auto out = open_out(*o.out);
    write_reward_jsonl(batch, out);
    if (!out.flush()) throw std::runtime_error("write failed: " + *o.out);
    std::cout << summary << "\n";
  } else {
    write_reward_jsonl(batch, std::cout);
    std::cerr << summary << "\n";
  }
  if (o.transcripts) {
    auto out = open_out(*o.transcripts);
    for (const auto& t : gateway.transcripts().snapshot()) out << to_json(t).dump() << "\n";
  }
  return 0;
}

// ---- audit ---------------------------------------------------------------

struct AuditOptions {
  std::string in;
  std::optional<std::string> report;
  std::optional<std::string> csv;
  std::optional<std::string> curve_csv;
  std::optional<std::string> curve_svg;
  int workers = 4;
  JudgeOptions judge;
};

int run_audit(const Globals& g, const AuditOptions& o) {
  auto in = open_in(o.in);
  const auto read = read_predictions_jsonl(in);
  fail_on_line_errors(o.in, read.errors);
  if (read.records.empty()) throw std::runtime_error(o.in + ": no prediction records");

  const bool needs_judge = std::any_of(read.records.begin(), read.records.end(),
                                       [](const PredictionRecord& p) { return !p.verdict.has_value(); });
  Settings cli;
  o.judge.fill(cli);
  const ServiceConfig config = resolve_config(g, cli);
  std::unique_ptr<JudgeGateway> gateway;
  if (needs_judge) gateway = std::make_unique<JudgeGateway>(make_judge_client(config), config.judge);

  const auto records = audit_predictions(read.records, config.verifier, gateway.get(), o.workers);
  const auto report = build_report(records);
  std::cout << format_table(report);

  if (o.report) {
    auto out = open_out(*o.report);
    out << to_json(report).dump(2) << "\n";
  }
  if (o.csv) {
    auto out = open_out(*o.csv);
    write_verdict_csv(records, out);
  }
  const auto curve = checkpoint_curve(records);
  if (!curve.empty()) {
    std::optional<std::string> csv_path = o.curve_csv, svg_path = o.curve_svg;
    if (o.report && !csv_path && !svg_path) {
      const auto stem = std::filesystem::path(*o.report).replace_extension("").string();
      csv_path = stem + "_curve.csv";
      svg_path = stem + "_curve.svg";
    }
    if (csv_path) {
      auto out = open_out(*csv_path);
      write_curve_csv(curve, out);
    }
    if (svg_path) {
      auto out = open_out(*svg_path);
      out << render_curve_svg(curve);
    }
  }
  return 0;
}

// ---- stability -----------------------------------------------------------

struct StabilityOptions {
  StabilityRunConfig run;
  SyntheticJudgeModel model;
  std::string scheme = "both";
  std::string judge_mode = "synthetic";
  std::optional<std::string> in;
  std::optional<std::string> report;
  std::optional<std::string> tensors;
  JudgeOptions judge;
};

int run_stability(const Globals& g, StabilityOptions o) {
  if (o.scheme == "both") {
    o.run.schemes = {AuxKind::kGrPointwise, AuxKind::kRankGroupwise};
  } else {
    o.run.schemes = {parse_aux_kind(o.scheme)};
  }
  try {
    o.run.validate();
    o.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  StabilityRun result;
  if (o.judge_mode == "synthetic") {
    result = run_synthetic_stability(o.run, o.model);
  } else {
    if (!o.in) throw ConfigError("--in is required with --judge endpoint");
    Settings cli;
    o.judge.fill(cli);
    cli["judge.mode"] = "endpoint";
    const ServiceConfig config = resolve_config(g, cli);
    auto in = open_in(*o.in);
    auto read = read_rollout_jsonl(in);
    fail_on_line_errors(*o.in, read.errors);
    if (read.groups.size() > o.run.n_prompts) read.groups.resize(o.run.n_prompts);
    result = compare_schemes(read.groups, o.run, make_judge_client(config), config.judge);
  }

  std::cout << format_table(result.report);
  if (o.report) {
    auto out = open_out(*o.report);
    out << to_json(result.report).dump(2) << "\n";
  }
  if (o.tensors) {
    auto out = open_out(*o.tensors);
    for (const auto& t : result.tensors) write_tensor_jsonl(t, out);
  }
  return 0;
}

// ---- mock-judge / serve --------------------------------------------------

int run_mock_judge(const std::string& script, const std::string& host, int port) {
  MockJudgeServer server(std::make_shared<ScriptedMockJudge>(MockScript::load(script)));
  std::cout << "mock judge on http://" << host << ":" << port << "/v1" << std::endl;
  server.listen(host, port);
  return 0;
}

int run_serve(const Globals& g, const std::optional<std::string>& host, const std::optional<int>& port,
              const JudgeOptions& judge) {
  Settings cli;
  if (host) cli["server.host"] = *host;
  if (port) cli["server.port"] = std::to_string(*port);
  judge.fill(cli);
  const ServiceConfig config = resolve_config(g, cli);
  RewardService service(config, make_judge_client(config));
  service.listen();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("rankreward"));
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Reward orchestration for verifiable-reward RL: scoring, auditing and judge stability"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_file, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override a setting, section.key=value (repeatable)");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off");

  const std::vector<std::string> aux_kinds = {"prm", "gr_pointwise", "rank_groupwise"};
  const std::vector<std::string> mappings = {"pcs", "edn", "trs", "irn"};

  ScoreOptions score;
  auto* score_cmd = app.add_subcommand("score", "Score rollout groups into reward JSONL");
  score_cmd->add_option("--in", score.in, "Rollout groups (JSONL)")->required();
  score_cmd->add_option("--out", score.out, "Reward JSONL output (default: stdout)");
  score_cmd->add_option("--aux-kind", score.aux_kind, "Auxiliary reward")->check(CLI::IsMember(aux_kinds));
  score_cmd->add_option("--mapping", score.mapping, "Rank-to-score mapping")->check(CLI::IsMember(mappings));
  score_cmd->add_option("--lambda", score.lambda, "Weight of the auxiliary reward");
  score_cmd->add_option("--workers", score.workers, "Groups scored in parallel")->check(CLI::PositiveNumber);
  score_cmd->add_option("--transcripts", score.transcripts, "Write judge transcripts (JSONL)");
  score.judge.add_to(score_cmd, {"mock", "endpoint"});

  AuditOptions audit;
  auto* audit_cmd = app.add_subcommand("audit", "Judge reasoning-answer consistency and report metrics");
  audit_cmd->add_option("--in", audit.in, "Predictions (JSONL)")->required();
  audit_cmd->add_option("--report", audit.report, "Metrics report (JSON)");
  audit_cmd->add_option("--csv", audit.csv, "Per-record verdicts (CSV)");
  audit_cmd->add_option("--curve-csv", audit.curve_csv, "Per-checkpoint metrics (CSV)");
  audit_cmd->add_option("--curve-svg", audit.curve_svg, "Per-checkpoint chart (SVG)");
  audit_cmd->add_option("--workers", audit.workers, "Records audited in parallel")->check(CLI::PositiveNumber);
  audit.judge.add_to(audit_cmd, {"mock", "endpoint"});

  StabilityOptions stab;
  auto* stab_cmd = app.add_subcommand("stability", "Repeat reward assignment and compare reward variance");
  stab_cmd->add_option("--prompts", stab.run.n_prompts, "Prompts")->capture_default_str();
  stab_cmd->add_option("--rollouts", stab.run.rollouts_per_prompt, "Rollouts per prompt")->capture_default_str();
  stab_cmd->add_option("--repeats", stab.run.repeats, "Repeats")->capture_default_str();
  stab_cmd->add_option("--temperature", stab.run.temperature, "Judge temperature")->capture_default_str();
  stab_cmd->add_option("--seed", stab.run.seed, "Seed")->capture_default_str();
  stab_cmd->add_option("--workers", stab.run.workers, "Prompts in parallel")->capture_default_str();
  stab_cmd->add_option("--scheme", stab.scheme, "Scheme")
      ->check(CLI::IsMember({"both", "gr_pointwise", "rank_groupwise"}))
      ->capture_default_str();
  stab_cmd->add_option("--sigma-p", stab.model.sigma_p, "Synthetic pointwise noise")->capture_default_str();
  stab_cmd->add_option("--p-swap", stab.model.p_swap, "Synthetic adjacent-tier swap probability")->capture_default_str();
  stab_cmd->add_option("--in", stab.in, "Rollout groups for the endpoint judge (JSONL)");
  stab_cmd->add_option("--report", stab.report, "Report (JSON)");
  stab_cmd->add_option("--tensors", stab.tensors, "Reward tensors (JSONL)");
  stab.judge.add_to(stab_cmd, {"synthetic", "endpoint"});

  std::string mock_script;
  std::string mock_host = "127.0.0.1";
  int mock_port = 8000;
  auto* mock_cmd = app.add_subcommand("mock-judge", "Serve scripted judge replies over HTTP");
  mock_cmd->add_option("--script", mock_script, "Mock script (JSON)")->required()->check(CLI::ExistingFile);
  mock_cmd->add_option("--host", mock_host, "Bind address")->capture_default_str();
  mock_cmd->add_option("--port", mock_port, "Port")->capture_default_str();

  std::optional<std::string> serve_host;
  std::optional<int> serve_port;
  JudgeOptions serve_judge;
  auto* serve_cmd = app.add_subcommand("serve", "Run the reward HTTP service");
  serve_cmd->add_option("--host", serve_host, "Bind address");
  serve_cmd->add_option("--port", serve_port, "Port");
  serve_judge.add_to(serve_cmd, {"mock", "endpoint"});

  CLI11_PARSE(app, argc, argv);

  try {
    if (*score_cmd) return run_score(g, score);
    if (*audit_cmd) return run_audit(g, audit);
    if (*stab_cmd) {
      stab.judge_mode = stab.judge.mode.value_or("synthetic");
      return run_stability(g, stab);
    }
    if (*mock_cmd) return run_mock_judge(mock_script, mock_host, mock_port);
    if (*serve_cmd) return run_serve(g, serve_host, serve_port, serve_judge);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return 0;
}
