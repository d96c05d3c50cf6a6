#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rankreward/pipeline.hpp"
#include "rankreward/service_config.hpp"

namespace rankreward {

/// Scores groups in parallel; results keep input order.
std::vector<GroupResult> score_batch(const RewardPipeline& pipeline, const std::vector<RolloutGroup>& groups,
                                     int workers);

struct BatchSummary {
  std::size_t groups = 0;
  int parse_failures = 0;
  int transport_failures = 0;
  double mean_r_aux = 0.0;  // over every rollout of every group
};

BatchSummary summarize_batch(const std::vector<GroupResult>& results);
std::string format_summary(const BatchSummary& s);

struct HttpReply {
  int status = 200;
  std::string body;
};

/// Request handling for the reward service, independent of the socket layer.
class RewardService {
 public:
  RewardService(ServiceConfig config, std::shared_ptr<JudgeClient> client);
  ~RewardService();
  RewardService(const RewardService&) = delete;
  RewardService& operator=(const RewardService&) = delete;

  /// 200 scored; 400 schema violation (body names the field path);
  /// 422 ranking unparsable after retries; 502 judge transport exhausted.
  HttpReply score_group(const std::string& body) const;
  /// Always 200; "degraded" when the judge probe fails.
  HttpReply health();

  /// Binds and serves in a background thread; port 0 picks a free port.
  int start(const std::string& host, int port);
  /// Blocks on the calling thread.
  void listen();
  void stop();
  int port() const { return port_; }

  const ServiceConfig& config() const { return config_; }
  JudgeGateway& gateway() { return *gateway_; }

 private:
  void install_routes();

  ServiceConfig config_;
  std::string digest_;
  std::unique_ptr<JudgeGateway> gateway_;
  std::unique_ptr<RewardPipeline> pipeline_;

  std::mutex probe_mu_;
  std::optional<std::chrono::steady_clock::time_point> probed_at_;
  bool reachable_ = false;

  struct ServerImpl;
  std::unique_ptr<ServerImpl> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace rankreward
