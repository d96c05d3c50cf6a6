#include "rankreward/mock_judge.hpp"

#include <chrono>
#include <fstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace rankreward {

using nlohmann::json;

std::string InstrumentedJudgeClient::complete(const JudgeRequest& request, const JudgeEndpointConfig& config) {
  ++calls_;
  {
    std::lock_guard lock(kind_mu_);
    ++by_kind_[request.kind];
  }
  const int now = ++in_flight_;
  int prev = peak_.load();
  while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
  }
  struct Leave {
    std::atomic<int>& n;
    ~Leave() { --n; }
  } leave{in_flight_};
  return reply(request, config);
}

int InstrumentedJudgeClient::calls(RequestKind kind) const {
  std::lock_guard lock(kind_mu_);
  auto it = by_kind_.find(kind);
  return it == by_kind_.end() ? 0 : it->second;
}

MockScript MockScript::from_json(const json& j) {
  MockScript s;
  if (!j.is_object()) throw std::invalid_argument("mock script: expected an object");
  if (auto it = j.find("rules"); it != j.end()) {
    for (const auto& r : *it) {
      MockRule rule;
      if (auto k = r.find("kind"); k != r.end()) rule.kind = parse_request_kind(k->get<std::string>());
      rule.contains = r.value("contains", "");
      rule.fingerprint = r.value("fingerprint", "");
      if (auto rep = r.find("reply"); rep != r.end()) rule.replies.push_back(rep->get<std::string>());
      if (auto reps = r.find("replies"); reps != r.end()) {
        for (const auto& x : *reps) rule.replies.push_back(x.get<std::string>());
      }
      rule.fail_first = r.value("fail_first", 0);
      rule.delay_ms = r.value("delay_ms", 0);
      if (rule.replies.empty() && rule.fail_first == 0) {
        throw std::invalid_argument("mock script: rule without reply");
      }
      s.rules.push_back(std::move(rule));
    }
  }
  if (auto it = j.find("defaults"); it != j.end()) {
    for (const auto& [kind, reply] : it->items()) s.defaults[parse_request_kind(kind)] = reply.get<std::string>();
  }
  return s;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mock script " + path.string());
  return from_json(json::parse(in));
}

ScriptedMockJudge::ScriptedMockJudge(MockScript script)
    : script_(std::move(script)), rule_calls_(script_.rules.size(), 0) {}

std::string ScriptedMockJudge::reply(const JudgeRequest& request, const JudgeEndpointConfig& config) {
  const std::string rendered = request.rendered();
  std::string fp;
  for (std::size_t i = 0; i < script_.rules.size(); ++i) {
    const MockRule& r = script_.rules[i];
    if (r.kind && *r.kind != request.kind) continue;
    if (!r.contains.empty() && rendered.find(r.contains) == std::string::npos) continue;
    if (!r.fingerprint.empty()) {
      if (fp.empty()) fp = request.fingerprint();
      if (fp != r.fingerprint) continue;
    }
    int n = 0;
    {
      std::lock_guard lock(mu_);
      n = rule_calls_[i]++;
    }
    if (r.delay_ms > 0) {
      const auto delay = std::chrono::milliseconds(r.delay_ms);
      if (delay >= config.timeout) {
        std::this_thread::sleep_for(config.timeout);
        throw TimeoutError("mock judge: scripted delay exceeds timeout");
      }
      std::this_thread::sleep_for(delay);
    }
    if (n < r.fail_first) throw TransportError("mock judge: scripted failure " + std::to_string(n + 1));
    if (r.replies.empty()) throw TransportError("mock judge: rule has no reply");
    const std::size_t k = static_cast<std::size_t>(n - r.fail_first);
    return r.replies[std::min(k, r.replies.size() - 1)];
  }
  if (auto it = script_.defaults.find(request.kind); it != script_.defaults.end()) return it->second;
  throw TransportError("mock judge: no scripted reply for " + std::string(to_string(request.kind)) + " request");
}

RequestKind infer_request_kind(const std::vector<ChatMessage>& messages) {
  if (messages.empty()) throw std::invalid_argument("empty message list");
  const std::string& first = messages.front().content;
  auto opens_with = [&](const PromptTemplate& t) {
    const std::string_view head = t.text.substr(0, t.text.find('\n'));
    return std::string_view(first).substr(0, head.size()) == head;
  };
  if (opens_with(prm_system_template())) return RequestKind::kPrmStep;
  if (opens_with(groupwise_template())) return RequestKind::kGroupwise;
  if (opens_with(pointwise_template())) return RequestKind::kPointwise;
  if (opens_with(consistency_template())) return RequestKind::kConsistency;
  throw std::invalid_argument("unrecognized judge prompt");
}

struct MockJudgeServer::Impl {
  std::shared_ptr<JudgeClient> backend;
  httplib::Server server;
};

MockJudgeServer::MockJudgeServer(std::shared_ptr<JudgeClient> backend) : impl_(std::make_unique<Impl>()) {
  impl_->backend = std::move(backend);
  auto* backend_ptr = impl_->backend.get();
  impl_->server.Post(R"(.*/chat/completions)", [backend_ptr](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("messages") || !body["messages"].is_array()) {
      res.status = 400;
      res.set_content(R"({"error":"malformed request"})", "application/json");
      return;
    }
    JudgeRequest request;
    for (const auto& m : body["messages"]) {
      request.messages.push_back({m.value("role", ""), m.value("content", "")});
    }
    try {
      request.kind = infer_request_kind(request.messages);
      JudgeEndpointConfig config;
      const std::string content = backend_ptr->complete(request, config);
      json reply{{"object", "chat.completion"},
                 {"model", body.value("model", "mock")},
                 {"choices", json::array({{{"index", 0},
                                           {"message", {{"role", "assistant"}, {"content", content}}},
                                           {"finish_reason", "stop"}}})}};
      res.set_content(reply.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 503;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
  impl_->server.Get(R"(.*/models)", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"object":"list","data":[{"id":"mock"}]})", "application/json");
  });
}

MockJudgeServer::~MockJudgeServer() { stop(); }

int MockJudgeServer::start(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw std::runtime_error("mock judge: cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void MockJudgeServer::listen(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  spdlog::info("mock judge listening on {}:{}", host, port);
  if (!impl_->server.listen(host, port)) throw std::runtime_error("mock judge: cannot listen on " + host);
}

void MockJudgeServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockJudgeServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_) + "/v1"; }

}  // namespace rankreward
