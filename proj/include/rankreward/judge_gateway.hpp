#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankreward/judge_parsers.hpp"
#include "rankreward/templates.hpp"

namespace rankreward {

enum class RequestKind { kPointwise, kGroupwise, kPrmStep, kConsistency };

std::string_view to_string(RequestKind kind);
RequestKind parse_request_kind(std::string_view name);

struct JudgeEndpointConfig {
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model_name = "gpt-oss-20b";
  double temperature = 0.0;
  int max_concurrent_requests = 4;
  int retry_budget = 2;
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds backoff_base{200};
  std::chrono::milliseconds backoff_max{5000};

  void validate() const;
};

struct JudgeRequest {
  RequestKind kind = RequestKind::kPointwise;
  std::vector<ChatMessage> messages;

  static JudgeRequest single_user(RequestKind kind, std::string prompt);
  /// SHA-256 over kind and messages; stable across processes.
  std::string fingerprint() const;
  /// Messages flattened for the transcript.
  std::string rendered() const;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

/// One chat completion. Implementations throw TransportError / TimeoutError.
class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual std::string complete(const JudgeRequest& request, const JudgeEndpointConfig& config) = 0;
  /// Cheap reachability check for health reporting.
  virtual bool probe(const JudgeEndpointConfig&) { return true; }
};

/// Counting gate shared by every caller of a gateway.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(int limit);

  void acquire();
  void release();
  int limit() const { return limit_; }
  int in_flight() const;
  int peak() const;

  class Permit {
   public:
    explicit Permit(ConcurrencyLimiter& l) : limiter_(l) { limiter_.acquire(); }
    ~Permit() { limiter_.release(); }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

   private:
    ConcurrencyLimiter& limiter_;
  };

 private:
  const int limit_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  int peak_ = 0;
};

enum class JudgeFailure { kNone, kTransport, kTimeout, kParse };

std::string_view to_string(JudgeFailure f);

struct JudgeTranscript {
  std::uint64_t id = 0;
  RequestKind kind = RequestKind::kPointwise;
  std::string fingerprint;
  std::string rendered_prompt;
  std::string raw_response;             // last reply received, empty when none arrived
  std::optional<nlohmann::json> parsed; // present iff the final attempt parsed
  int attempts = 0;
  double latency_ms = 0.0;
  JudgeFailure failure = JudgeFailure::kNone;
  std::string error;
  std::vector<std::string> flags;
};

nlohmann::ordered_json to_json(const JudgeTranscript& t);

/// Append-only, safe for concurrent writers.
class TranscriptLog {
 public:
  std::uint64_t append(JudgeTranscript t);
  std::vector<JudgeTranscript> snapshot() const;
  std::optional<JudgeTranscript> get(std::uint64_t id) const;
  std::size_t size() const;
  std::size_t count(RequestKind kind) const;
  void add_flag(std::uint64_t id, std::string flag);

 private:
  mutable std::mutex mu_;
  std::vector<JudgeTranscript> entries_;
};

template <class T>
struct JudgeOutcome {
  std::optional<T> value;
  JudgeFailure failure = JudgeFailure::kNone;
  std::string error;
  std::uint64_t transcript_id = 0;
  int attempts = 0;

  bool ok() const { return value.has_value(); }
};

// Transcript summaries of parsed values.
nlohmann::json describe(int prm_token);
nlohmann::json describe(const PointwiseScore& s);
nlohmann::json describe(const TierRanking& r);
nlohmann::json describe(ConsistencyVerdict v);
inline nlohmann::json describe(const std::string& s) { return s; }

class JudgeGateway {
 public:
  JudgeGateway(std::shared_ptr<JudgeClient> client, JudgeEndpointConfig config,
               std::shared_ptr<TranscriptLog> log = std::make_shared<TranscriptLog>());

  /// Raw completion with retries. Throws TimeoutError or TransportError once the budget is spent.
  std::string call_judge(const JudgeRequest& request);

  /// Completion plus parse; transport and parse failures share one retry budget.
  /// Never throws for judge failures; the outcome says what went wrong.
  template <class Parse>
  auto ask(const JudgeRequest& request, Parse&& parse)
      -> JudgeOutcome<std::decay_t<decltype(parse(std::declval<const std::string&>()))>> {
    using T = std::decay_t<decltype(parse(std::declval<const std::string&>()))>;
    JudgeOutcome<T> out;
    const Attempt r = run(request, [&](const std::string& raw) {
      T v = parse(raw);
      nlohmann::json summary = describe(v);
      out.value = std::move(v);
      return summary;
    });
    out.failure = r.failure;
    out.error = r.error;
    out.transcript_id = r.transcript_id;
    out.attempts = r.attempts;
    if (r.failure != JudgeFailure::kNone) out.value.reset();
    return out;
  }

  const JudgeEndpointConfig& config() const { return config_; }
  ConcurrencyLimiter& limiter() { return *limiter_; }
  TranscriptLog& transcripts() { return *log_; }
  JudgeClient& client() { return *client_; }

 private:
  struct Attempt {
    JudgeFailure failure = JudgeFailure::kNone;
    std::string error;
    std::uint64_t transcript_id = 0;
    int attempts = 0;
  };
  Attempt run(const JudgeRequest& request, const std::function<nlohmann::json(const std::string&)>& parse);
  std::chrono::milliseconds backoff(int attempt) const;

  std::shared_ptr<JudgeClient> client_;
  JudgeEndpointConfig config_;
  std::shared_ptr<TranscriptLog> log_;
  std::unique_ptr<ConcurrencyLimiter> limiter_;
};

}  // namespace rankreward
