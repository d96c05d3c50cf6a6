#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "rankreward/judge_gateway.hpp"
#include "rankreward/reward_engine.hpp"
#include "rankreward/step_splitter.hpp"
#include "rankreward/verifier.hpp"

namespace rankreward {

inline constexpr const char* kVersion = "0.3.0";
inline constexpr const char* kEnvPrefix = "RANKREWARD_";

enum class JudgeMode { kEndpoint, kMock };

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8090;
  std::size_t request_size_limit = 4 << 20;  // bytes
  std::string log_level = "info";
  int probe_ttl_seconds = 30;

  VerifierConfig verifier;
  RewardConfig reward;
  JudgeEndpointConfig judge;
  StepSplitter splitter = StepSplitter::kBlankLine;
  JudgeMode judge_mode = JudgeMode::kEndpoint;
  std::string mock_script;  // path, judge_mode == kMock

  void validate() const;
  /// Every setting as "section.key" -> canonical string, sorted by key.
  std::map<std::string, std::string> settings() const;
  /// SHA-256 over the canonical settings; secrets are never part of the config.
  std::string digest() const;
};

using Settings = std::map<std::string, std::string>;

/// Applies "section.key" = value pairs; `source` names the origin in error messages.
/// Throws std::invalid_argument on an unknown key or a malformed value.
void apply_settings(ServiceConfig& config, const Settings& values, const std::string& source);

/// Reads an INI file into "section.key" pairs.
Settings read_ini_file(const std::string& path);

/// Collects RANKREWARD_<SECTION>_<KEY> variables for every known key.
Settings env_settings(const std::function<std::optional<std::string>(const std::string&)>& getenv_fn);
Settings process_env_settings();

/// file < environment < cli, then validate().
ServiceConfig load_config(const std::optional<std::string>& file, const Settings& env, const Settings& cli);

/// Mock mode: ScriptedMockJudge over `mock_script`; endpoint mode: HttpJudgeClient with the env API key.
std::shared_ptr<JudgeClient> make_judge_client(const ServiceConfig& config);

}  // namespace rankreward
