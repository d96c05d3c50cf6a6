#include "rankreward/service.hpp"

#include <atomic>
#include <cstdio>
#include <exception>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace rankreward {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<GroupResult> score_batch(const RewardPipeline& pipeline, const std::vector<RolloutGroup>& groups,
                                     int workers) {
  std::vector<GroupResult> out(groups.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < groups.size(); i = next++) {
      try {
        out[i] = pipeline.score(groups[i]);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), groups.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

BatchSummary summarize_batch(const std::vector<GroupResult>& results) {
  BatchSummary s;
  s.groups = results.size();
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& r : results) {
    s.parse_failures += r.parse_failures;
    s.transport_failures += r.transport_failures;
    for (const auto& b : r.score.rewards) {
      total += b.r_aux;
      ++n;
    }
  }
  if (n > 0) s.mean_r_aux = total / static_cast<double>(n);
  return s;
}

std::string format_summary(const BatchSummary& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "groups=%zu parse_failures=%d transport_failures=%d mean_r_aux=%.6f", s.groups,
                s.parse_failures, s.transport_failures, s.mean_r_aux);
  return buf;
}

struct RewardService::ServerImpl {
  httplib::Server server;
};

RewardService::RewardService(ServiceConfig config, std::shared_ptr<JudgeClient> client)
    : config_(std::move(config)), server_(std::make_unique<ServerImpl>()) {
  config_.validate();
  digest_ = config_.digest();
  gateway_ = std::make_unique<JudgeGateway>(std::move(client), config_.judge);
  pipeline_ = std::make_unique<RewardPipeline>(config_.verifier, config_.reward, *gateway_, config_.splitter);
  spdlog::info("reward service config digest {}", digest_);
  install_routes();
}

RewardService::~RewardService() { stop(); }

HttpReply RewardService::score_group(const std::string& body) const {
  auto error = [](int status, const std::string& message, const std::string& path) {
    ordered_json j;
    j["error"] = message;
    if (!path.empty()) j["path"] = path;
    return HttpReply{status, j.dump()};
  };
  RolloutGroup group;
  try {
    group = parse_rollout_group(json::parse(body));
  } catch (const json::parse_error& e) {
    return error(400, std::string("invalid JSON: ") + e.what(), "$");
  } catch (const SchemaError& e) {
    return error(400, e.what(), e.path().empty() ? "$" : "$" + e.path());
  }

  const GroupResult result = pipeline_->score(group);
  int status = 200;
  if (result.ranking_failed) {
    status = result.ranking_failure == JudgeFailure::kParse ? 422 : 502;
  } else if (result.judge_calls > 0 && result.transport_failures == result.judge_calls) {
    status = 502;  // pointwise/PRM: the judge never answered
  }
  return {status, to_json(result).dump()};
}

HttpReply RewardService::health() {
  bool reachable;
  {
    std::lock_guard lock(probe_mu_);
    const auto now = std::chrono::steady_clock::now();
    if (!probed_at_ || now - *probed_at_ >= std::chrono::seconds(config_.probe_ttl_seconds)) {
      try {
        reachable_ = gateway_->client().probe(config_.judge);
      } catch (const std::exception& e) {
        spdlog::warn("judge probe failed: {}", e.what());
        reachable_ = false;
      }
      probed_at_ = now;
    }
    reachable = reachable_;
  }
  ordered_json j;
  j["status"] = reachable ? "ok" : "degraded";
  j["degraded"] = !reachable;
  j["judge_reachable"] = reachable;
  j["config_digest"] = digest_;
  j["version"] = kVersion;
  j["aux_kind"] = to_string(config_.reward.aux_kind);
  return {200, j.dump()};
}

void RewardService::install_routes() {
  auto& s = server_->server;
  s.set_payload_max_length(config_.request_size_limit);
  s.Post("/v1/score-group", [this](const httplib::Request& req, httplib::Response& res) {
    const auto reply = score_group(req.body);
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
  s.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    const auto reply = health();
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    spdlog::error("request failed: {}", what);
    res.status = 500;
    res.set_content(json{{"error", what}}.dump(), "application/json");
  });
}

int RewardService::start(const std::string& host, int port) {
  auto& s = server_->server;
  port_ = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw std::runtime_error("reward service: cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->server.listen_after_bind(); });
  s.wait_until_ready();
  return port_;
}

void RewardService::listen() {
  port_ = config_.port;
  spdlog::info("reward service listening on {}:{}", config_.host, config_.port);
  if (!server_->server.listen(config_.host, config_.port)) {
    throw std::runtime_error("reward service: cannot listen on " + config_.host + ":" + std::to_string(config_.port));
  }
}

void RewardService::stop() {
  if (server_) server_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace rankreward
