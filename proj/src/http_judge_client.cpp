#include "rankreward/http_judge_client.hpp"

#include <cstdlib>

#include <httplib.h>

namespace rankreward {

using nlohmann::json;

std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  const auto scheme = base_url.find("://");
  if (scheme == std::string::npos) throw std::invalid_argument("judge base_url needs a scheme: '" + base_url + "'");
  const auto slash = base_url.find('/', scheme + 3);
  std::string host = slash == std::string::npos ? base_url : base_url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : base_url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {host, prefix};
}

HttpJudgeClient::HttpJudgeClient(std::optional<std::string> api_key) : api_key_(std::move(api_key)) {}

HttpJudgeClient HttpJudgeClient::from_env() {
  if (const char* key = std::getenv(kApiKeyEnv); key && *key) return HttpJudgeClient(std::string(key));
  return HttpJudgeClient();
}

namespace {

httplib::Client make_client(const std::string& host, const JudgeEndpointConfig& config) {
  httplib::Client cli(host);
  cli.set_connection_timeout(config.timeout);
  cli.set_read_timeout(config.timeout);
  cli.set_write_timeout(config.timeout);
  return cli;
}

}  // namespace

std::string HttpJudgeClient::complete(const JudgeRequest& request, const JudgeEndpointConfig& config) {
  const auto [host, prefix] = split_base_url(config.base_url);
  auto cli = make_client(host, config);
  if (api_key_) cli.set_bearer_token_auth(*api_key_);

  json body;
  body["model"] = config.model_name;
  body["temperature"] = config.temperature;
  body["messages"] = json::array();
  for (const auto& m : request.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  const auto start = std::chrono::steady_clock::now();
  auto res = cli.Post(prefix + "/chat/completions", body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const auto elapsed = std::chrono::steady_clock::now() - start;
    if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= config.timeout)) {
      throw TimeoutError("judge request timed out after " + std::to_string(config.timeout.count()) + " ms");
    }
    throw TransportError("judge request failed: " + httplib::to_string(err));
  }
  if (res->status != 200) {
    throw TransportError("judge returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  const json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw TransportError("judge reply is not JSON");
  try {
    const json& content = reply.at("choices").at(0).at("message").at("content");
    return content.is_string() ? content.get<std::string>() : std::string();
  } catch (const json::exception& e) {
    throw TransportError(std::string("judge reply lacks choices[0].message.content: ") + e.what());
  }
}

bool HttpJudgeClient::probe(const JudgeEndpointConfig& config) {
  const auto [host, prefix] = split_base_url(config.base_url);
  JudgeEndpointConfig quick = config;
  quick.timeout = std::min(config.timeout, std::chrono::milliseconds(2000));
  auto cli = make_client(host, quick);
  if (api_key_) cli.set_bearer_token_auth(*api_key_);
  auto res = cli.Get(prefix + "/models");
  return static_cast<bool>(res);
}

}  // namespace rankreward
