#include "rankreward/judge_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "rankreward/digest.hpp"
#include "rankreward/text.hpp"

namespace rankreward {

using nlohmann::json;

std::string_view to_string(RequestKind kind) {
  switch (kind) {
    case RequestKind::kPointwise: return "pointwise";
    case RequestKind::kGroupwise: return "groupwise";
    case RequestKind::kPrmStep: return "prm_step";
    case RequestKind::kConsistency: return "consistency";
  }
  return "pointwise";
}

RequestKind parse_request_kind(std::string_view name) {
  if (name == "pointwise") return RequestKind::kPointwise;
  if (name == "groupwise") return RequestKind::kGroupwise;
  if (name == "prm_step") return RequestKind::kPrmStep;
  if (name == "consistency") return RequestKind::kConsistency;
  throw std::invalid_argument("unknown request kind '" + std::string(name) + "'");
}

std::string_view to_string(JudgeFailure f) {
  switch (f) {
    case JudgeFailure::kNone: return "none";
    case JudgeFailure::kTransport: return "transport";
    case JudgeFailure::kTimeout: return "timeout";
    case JudgeFailure::kParse: return "parse";
  }
  return "none";
}

void JudgeEndpointConfig::validate() const {
  if (max_concurrent_requests < 1) throw std::invalid_argument("judge.max_concurrent_requests must be >= 1");
  if (retry_budget < 0) throw std::invalid_argument("judge.retry_budget must be >= 0");
  if (timeout.count() <= 0) throw std::invalid_argument("judge.timeout must be positive");
  if (backoff_base.count() < 0 || backoff_max.count() < 0) throw std::invalid_argument("judge backoff must be >= 0");
  if (!(temperature >= 0.0)) throw std::invalid_argument("judge.temperature must be >= 0");
}

JudgeRequest JudgeRequest::single_user(RequestKind kind, std::string prompt) {
  return {kind, {{"user", std::move(prompt)}}};
}

std::string JudgeRequest::fingerprint() const {
  json j;
  j["kind"] = to_string(kind);
  j["messages"] = json::array();
  for (const auto& m : messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
  return sha256_hex(j.dump());
}

std::string JudgeRequest::rendered() const {
  if (messages.size() == 1) return messages.front().content;
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out += "\n";
    out += "<|" + m.role + "|>\n" + m.content;
  }
  return out;
}

ConcurrencyLimiter::ConcurrencyLimiter(int limit) : limit_(limit) {
  if (limit < 1) throw std::invalid_argument("ConcurrencyLimiter: limit must be >= 1");
}

void ConcurrencyLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < limit_; });
  ++in_flight_;
  peak_ = std::max(peak_, in_flight_);
}

void ConcurrencyLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

int ConcurrencyLimiter::in_flight() const {
  std::lock_guard lock(mu_);
  return in_flight_;
}

int ConcurrencyLimiter::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

nlohmann::ordered_json to_json(const JudgeTranscript& t) {
  nlohmann::ordered_json j;
  j["id"] = t.id;
  j["kind"] = to_string(t.kind);
  j["fingerprint"] = t.fingerprint;
  j["attempts"] = t.attempts;
  j["latency_ms"] = t.latency_ms;
  j["failure"] = to_string(t.failure);
  if (!t.error.empty()) j["error"] = t.error;
  if (!t.flags.empty()) j["flags"] = t.flags;
  j["parsed"] = t.parsed ? *t.parsed : json(nullptr);
  j["rendered_prompt"] = t.rendered_prompt;
  j["raw_response"] = t.raw_response;
  return j;
}

std::uint64_t TranscriptLog::append(JudgeTranscript t) {
  std::lock_guard lock(mu_);
  t.id = entries_.size() + 1;
  entries_.push_back(std::move(t));
  return entries_.back().id;
}

std::vector<JudgeTranscript> TranscriptLog::snapshot() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::optional<JudgeTranscript> TranscriptLog::get(std::uint64_t id) const {
  std::lock_guard lock(mu_);
  if (id == 0 || id > entries_.size()) return std::nullopt;
  return entries_[id - 1];
}

std::size_t TranscriptLog::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::size_t TranscriptLog::count(RequestKind kind) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [&](const JudgeTranscript& t) { return t.kind == kind; }));
}

void TranscriptLog::add_flag(std::uint64_t id, std::string flag) {
  std::lock_guard lock(mu_);
  if (id == 0 || id > entries_.size()) throw std::out_of_range("TranscriptLog: no transcript " + std::to_string(id));
  entries_[id - 1].flags.push_back(std::move(flag));
}

json describe(int prm_token) { return {{"token", prm_token}}; }

json describe(const PointwiseScore& s) {
  json j{{"judge_score", s.score}, {"reasoning_feedback", s.feedback}};
  if (s.clamped) j["clamped"] = true;
  return j;
}

json describe(const TierRanking& r) { return {{"tiers", r.tiers()}}; }

json describe(ConsistencyVerdict v) { return {{"verdict", to_string(v)}}; }

JudgeGateway::JudgeGateway(std::shared_ptr<JudgeClient> client, JudgeEndpointConfig config,
                           std::shared_ptr<TranscriptLog> log)
    : client_(std::move(client)), config_(std::move(config)), log_(std::move(log)) {
  if (!client_) throw std::invalid_argument("JudgeGateway: no client");
  if (!log_) throw std::invalid_argument("JudgeGateway: no transcript log");
  config_.validate();
  limiter_ = std::make_unique<ConcurrencyLimiter>(config_.max_concurrent_requests);
}

std::chrono::milliseconds JudgeGateway::backoff(int attempt) const {
  if (config_.backoff_base.count() == 0) return std::chrono::milliseconds(0);
  thread_local std::mt19937 rng{std::random_device{}()};
  const double base = static_cast<double>(config_.backoff_base.count()) * std::pow(2.0, attempt - 1);
  const double capped = std::min(base, static_cast<double>(config_.backoff_max.count()));
  std::uniform_real_distribution<double> jitter(0.5, 1.0);
  return std::chrono::milliseconds(static_cast<long long>(capped * jitter(rng)));
}

JudgeGateway::Attempt JudgeGateway::run(const JudgeRequest& request,
                                        const std::function<json(const std::string&)>& parse) {
  JudgeTranscript t;
  t.kind = request.kind;
  t.fingerprint = request.fingerprint();
  t.rendered_prompt = request.rendered();

  const auto start = std::chrono::steady_clock::now();
  const int max_attempts = config_.retry_budget + 1;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    t.attempts = attempt;
    std::optional<std::string> reply;
    try {
      ConcurrencyLimiter::Permit permit(*limiter_);
      reply = client_->complete(request, config_);
    } catch (const TimeoutError& e) {
      t.failure = JudgeFailure::kTimeout;
      t.error = e.what();
    } catch (const std::exception& e) {
      t.failure = JudgeFailure::kTransport;
      t.error = e.what();
    }
    if (reply) {
      t.raw_response = *reply;
      if (text::trim(*reply).empty()) {
        t.failure = JudgeFailure::kTransport;
        t.error = "empty response";
      } else {
        try {
          t.parsed = parse(*reply);
          t.failure = JudgeFailure::kNone;
          t.error.clear();
          break;
        } catch (const std::exception& e) {
          t.failure = JudgeFailure::kParse;
          t.error = e.what();
        }
      }
    }
    spdlog::debug("judge {} attempt {}/{} failed: {}", to_string(request.kind), attempt, max_attempts, t.error);
    if (attempt < max_attempts) std::this_thread::sleep_for(backoff(attempt));
  }
  t.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  Attempt out;
  out.failure = t.failure;
  out.error = t.error;
  out.attempts = t.attempts;
  if (t.failure != JudgeFailure::kNone) {
    spdlog::warn("judge {} gave up after {} attempts: {}", to_string(request.kind), t.attempts, t.error);
  }
  out.transcript_id = log_->append(std::move(t));
  return out;
}

std::string JudgeGateway::call_judge(const JudgeRequest& request) {
  std::string reply;
  const Attempt r = run(request, [&](const std::string& raw) {
    reply = raw;
    return json(nullptr);
  });
  if (r.failure == JudgeFailure::kTimeout) throw TimeoutError(r.error);
  if (r.failure != JudgeFailure::kNone) throw TransportError(r.error);
  return reply;
}

}  // namespace rankreward
