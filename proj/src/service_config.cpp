#include "rankreward/service_config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rankreward/digest.hpp"
#include "rankreward/http_judge_client.hpp"
#include "rankreward/mock_judge.hpp"

namespace rankreward {

namespace {

struct Field {
  std::function<void(ServiceConfig&, const std::string&)> set;
  std::function<std::string(const ServiceConfig&)> get;
};

double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not a number");
  return d;
}

long long to_int(const std::string& v) {
  std::size_t pos = 0;
  const long long i = std::stoll(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("not an integer");
  return i;
}

bool to_bool(std::string v) {
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("not a boolean");
}

std::string num(double d) { return nlohmann::json(d).dump(); }
std::string flag(bool b) { return b ? "true" : "false"; }

std::string_view to_string(JudgeMode m) { return m == JudgeMode::kMock ? "mock" : "endpoint"; }

const std::map<std::string, Field>& fields() {
  using C = ServiceConfig;
  static const std::map<std::string, Field> table = {
      {"server.host", {[](C& c, const std::string& v) { c.host = v; }, [](const C& c) { return c.host; }}},
      {"server.port", {[](C& c, const std::string& v) { c.port = static_cast<int>(to_int(v)); },
                       [](const C& c) { return std::to_string(c.port); }}},
      {"server.request_size_limit",
       {[](C& c, const std::string& v) {
          const auto n = to_int(v);
          if (n <= 0) throw std::invalid_argument("must be positive");
          c.request_size_limit = static_cast<std::size_t>(n);
        },
        [](const C& c) { return std::to_string(c.request_size_limit); }}},
      {"server.log_level", {[](C& c, const std::string& v) { c.log_level = v; }, [](const C& c) { return c.log_level; }}},
      {"server.probe_ttl_seconds", {[](C& c, const std::string& v) { c.probe_ttl_seconds = static_cast<int>(to_int(v)); },
                                    [](const C& c) { return std::to_string(c.probe_ttl_seconds); }}},

      {"verifier.numeric_tolerance", {[](C& c, const std::string& v) { c.verifier.numeric_tolerance = to_double(v); },
                                      [](const C& c) { return num(c.verifier.numeric_tolerance); }}},
      {"verifier.strip_units", {[](C& c, const std::string& v) { c.verifier.strip_units = to_bool(v); },
                                [](const C& c) { return flag(c.verifier.strip_units); }}},
      {"verifier.case_fold", {[](C& c, const std::string& v) { c.verifier.case_fold = to_bool(v); },
                              [](const C& c) { return flag(c.verifier.case_fold); }}},
      {"verifier.option_letter_mode",
       {[](C& c, const std::string& v) { c.verifier.option_letter_mode = parse_option_letter_mode(v); },
        [](const C& c) { return std::string(to_string(c.verifier.option_letter_mode)); }}},

      {"reward.aux_kind", {[](C& c, const std::string& v) { c.reward.aux_kind = parse_aux_kind(v); },
                           [](const C& c) { return std::string(to_string(c.reward.aux_kind)); }}},
      {"reward.mapping", {[](C& c, const std::string& v) { c.reward.mapping.kind = parse_mapping_kind(v); },
                          [](const C& c) { return std::string(to_string(c.reward.mapping.kind)); }}},
      {"reward.edn_gamma", {[](C& c, const std::string& v) { c.reward.mapping.edn_gamma = to_double(v); },
                            [](const C& c) { return num(c.reward.mapping.edn_gamma); }}},
      {"reward.lambda", {[](C& c, const std::string& v) { c.reward.lambda = to_double(v); },
                         [](const C& c) { return num(c.reward.lambda); }}},
      {"reward.eps_a", {[](C& c, const std::string& v) { c.reward.eps_a = to_double(v); },
                        [](const C& c) { return num(c.reward.eps_a); }}},
      {"reward.pointwise_passed_only", {[](C& c, const std::string& v) { c.reward.pointwise_passed_only = to_bool(v); },
                                        [](const C& c) { return flag(c.reward.pointwise_passed_only); }}},
      {"reward.pointwise_fallback_score",
       {[](C& c, const std::string& v) { c.reward.pointwise_fallback_score = to_double(v); },
        [](const C& c) { return num(c.reward.pointwise_fallback_score); }}},
      {"reward.step_splitter", {[](C& c, const std::string& v) { c.splitter = parse_step_splitter(v); },
                                [](const C& c) { return std::string(to_string(c.splitter)); }}},

      {"judge.mode",
       {[](C& c, const std::string& v) {
          if (v == "mock") c.judge_mode = JudgeMode::kMock;
          else if (v == "endpoint") c.judge_mode = JudgeMode::kEndpoint;
          else throw std::invalid_argument("expected mock or endpoint");
        },
        [](const C& c) { return std::string(to_string(c.judge_mode)); }}},
      {"judge.mock_script", {[](C& c, const std::string& v) { c.mock_script = v; }, [](const C& c) { return c.mock_script; }}},
      {"judge.base_url", {[](C& c, const std::string& v) { c.judge.base_url = v; }, [](const C& c) { return c.judge.base_url; }}},
      {"judge.model_name", {[](C& c, const std::string& v) { c.judge.model_name = v; },
                            [](const C& c) { return c.judge.model_name; }}},
      {"judge.temperature", {[](C& c, const std::string& v) { c.judge.temperature = to_double(v); },
                             [](const C& c) { return num(c.judge.temperature); }}},
      {"judge.max_concurrent_requests",
       {[](C& c, const std::string& v) { c.judge.max_concurrent_requests = static_cast<int>(to_int(v)); },
        [](const C& c) { return std::to_string(c.judge.max_concurrent_requests); }}},
      {"judge.retry_budget", {[](C& c, const std::string& v) { c.judge.retry_budget = static_cast<int>(to_int(v)); },
                              [](const C& c) { return std::to_string(c.judge.retry_budget); }}},
      {"judge.timeout_ms", {[](C& c, const std::string& v) { c.judge.timeout = std::chrono::milliseconds(to_int(v)); },
                            [](const C& c) { return std::to_string(c.judge.timeout.count()); }}},
      {"judge.backoff_base_ms",
       {[](C& c, const std::string& v) { c.judge.backoff_base = std::chrono::milliseconds(to_int(v)); },
        [](const C& c) { return std::to_string(c.judge.backoff_base.count()); }}},
      {"judge.backoff_max_ms",
       {[](C& c, const std::string& v) { c.judge.backoff_max = std::chrono::milliseconds(to_int(v)); },
        [](const C& c) { return std::to_string(c.judge.backoff_max.count()); }}},
  };
  return table;
}

}  // namespace

void ServiceConfig::validate() const {
  if (host.empty() || host.find_first_of(" /\t") != std::string::npos) {
    throw std::invalid_argument("server.host: malformed listen address '" + host + "'");
  }
  if (port < 0 || port > 65535) throw std::invalid_argument("server.port: outside 0..65535");
  if (request_size_limit == 0) throw std::invalid_argument("server.request_size_limit: must be positive");
  static const char* kLevels[] = {"trace", "debug", "info", "warn", "error", "critical", "off"};
  if (std::find(std::begin(kLevels), std::end(kLevels), log_level) == std::end(kLevels)) {
    throw std::invalid_argument("server.log_level: unknown level '" + log_level + "'");
  }
  if (probe_ttl_seconds < 0) throw std::invalid_argument("server.probe_ttl_seconds: must be >= 0");
  verifier.validate();
  reward.validate();
  judge.validate();
  if (judge_mode == JudgeMode::kMock && mock_script.empty()) {
    throw std::invalid_argument("judge.mock_script: required in mock mode");
  }
}

std::map<std::string, std::string> ServiceConfig::settings() const {
  std::map<std::string, std::string> out;
  for (const auto& [key, f] : fields()) out[key] = f.get(*this);
  return out;
}

std::string ServiceConfig::digest() const {
  std::string canonical;
  for (const auto& [key, value] : settings()) canonical += key + "=" + value + "\n";
  return sha256_hex(canonical);
}

void apply_settings(ServiceConfig& config, const Settings& values, const std::string& source) {
  for (const auto& [key, value] : values) {
    auto it = fields().find(key);
    if (it == fields().end()) throw std::invalid_argument(source + ": unknown setting '" + key + "'");
    try {
      it->second.set(config, value);
    } catch (const std::exception& e) {
      throw std::invalid_argument(source + ": " + key + " = '" + value + "': " + e.what());
    }
  }
}

Settings read_ini_file(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument("config file: " + std::string(e.what()));
  }
  Settings out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      out[section] = body.data();  // top-level key without a section
      continue;
    }
    for (const auto& [key, value] : body) out[section + "." + key] = value.data();
  }
  return out;
}

Settings env_settings(const std::function<std::optional<std::string>(const std::string&)>& getenv_fn) {
  Settings out;
  for (const auto& [key, _] : fields()) {
    std::string name = kEnvPrefix;
    for (char c : key) name += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (auto v = getenv_fn(name)) out[key] = *v;
  }
  return out;
}

Settings process_env_settings() {
  return env_settings([](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    return v ? std::optional<std::string>(v) : std::nullopt;
  });
}

ServiceConfig load_config(const std::optional<std::string>& file, const Settings& env, const Settings& cli) {
  ServiceConfig c;
  if (file) apply_settings(c, read_ini_file(*file), *file);
  apply_settings(c, env, "environment");
  apply_settings(c, cli, "command line");
  c.validate();
  return c;
}

std::shared_ptr<JudgeClient> make_judge_client(const ServiceConfig& config) {
  if (config.judge_mode == JudgeMode::kMock) return std::make_shared<ScriptedMockJudge>(MockScript::load(config.mock_script));
  return std::make_shared<HttpJudgeClient>(HttpJudgeClient::from_env());
}

}  // namespace rankreward
