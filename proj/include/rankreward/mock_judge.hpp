#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankreward/judge_gateway.hpp"

namespace rankreward {

/// Counts calls and concurrent entries; subclasses supply the reply.
class InstrumentedJudgeClient : public JudgeClient {
 public:
  std::string complete(const JudgeRequest& request, const JudgeEndpointConfig& config) final;

  int calls() const { return calls_.load(); }
  int calls(RequestKind kind) const;
  int in_flight() const { return in_flight_.load(); }
  int peak_in_flight() const { return peak_.load(); }

 protected:
  virtual std::string reply(const JudgeRequest& request, const JudgeEndpointConfig& config) = 0;

 private:
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
  mutable std::mutex kind_mu_;
  std::map<RequestKind, int> by_kind_;
};

/// Replies computed by a callback.
class FunctionJudgeClient : public InstrumentedJudgeClient {
 public:
  using Fn = std::function<std::string(const JudgeRequest&)>;
  explicit FunctionJudgeClient(Fn fn) : fn_(std::move(fn)) {}

 protected:
  std::string reply(const JudgeRequest& request, const JudgeEndpointConfig&) override { return fn_(request); }

 private:
  Fn fn_;
};

struct MockRule {
  std::optional<RequestKind> kind;
  std::string contains;     // substring of the rendered prompt
  std::string fingerprint;  // exact request fingerprint
  std::vector<std::string> replies;  // served in order; the last one repeats
  int fail_first = 0;                // transport failures before the first reply
  int delay_ms = 0;                  // a delay >= the configured timeout raises TimeoutError
};

/// {"rules": [{kind, contains, fingerprint, reply | replies, fail_first, delay_ms}],
///  "defaults": {"<kind>": "<reply>"}}. Rules are tried in order.
struct MockScript {
  std::vector<MockRule> rules;
  std::map<RequestKind, std::string> defaults;

  static MockScript from_json(const nlohmann::json& j);
  static MockScript load(const std::filesystem::path& path);
};

class ScriptedMockJudge : public InstrumentedJudgeClient {
 public:
  explicit ScriptedMockJudge(MockScript script);

 protected:
  std::string reply(const JudgeRequest& request, const JudgeEndpointConfig& config) override;

 private:
  MockScript script_;
  std::mutex mu_;
  std::vector<int> rule_calls_;
};

/// Kind of a chat-completion request, recognized from the prompt templates.
RequestKind infer_request_kind(const std::vector<ChatMessage>& messages);

/// Serves {prefix}/chat/completions over HTTP from a JudgeClient (usually a ScriptedMockJudge).
class MockJudgeServer {
 public:
  explicit MockJudgeServer(std::shared_ptr<JudgeClient> backend);
  ~MockJudgeServer();
  MockJudgeServer(const MockJudgeServer&) = delete;
  MockJudgeServer& operator=(const MockJudgeServer&) = delete;

  /// Binds and serves in a background thread; port 0 picks a free port. Returns the port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks serving on the calling thread.
  void listen(const std::string& host, int port);
  void stop();
  int port() const { return port_; }
  std::string base_url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace rankreward
