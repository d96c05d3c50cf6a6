#pragma once

#include <optional>
#include <string>

#include "rankreward/judge_gateway.hpp"

namespace rankreward {

/// Chat-completion client: POST {base_url}/chat/completions, reply read from
/// choices[0].message.content. The bearer token comes from an environment variable.
class HttpJudgeClient : public JudgeClient {
 public:
  static constexpr const char* kApiKeyEnv = "RANKREWARD_JUDGE_API_KEY";

  explicit HttpJudgeClient(std::optional<std::string> api_key = std::nullopt);
  static HttpJudgeClient from_env();

  std::string complete(const JudgeRequest& request, const JudgeEndpointConfig& config) override;
  bool probe(const JudgeEndpointConfig& config) override;

 private:
  std::optional<std::string> api_key_;
};

/// Splits "http://host:port/v1" into ("http://host:port", "/v1").
std::pair<std::string, std::string> split_base_url(const std::string& base_url);

}  // namespace rankreward
