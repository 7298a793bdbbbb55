#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include "json.hpp"
#include "newsrisk/dataset.hpp"

namespace newsrisk {

/// Request/response exchange of JSON documents with an external service.
/// Implementations throw TransportError for retryable failures and
/// ProtocolError for payloads that violate the protocol.
class JsonTransport {
 public:
  virtual ~JsonTransport() = default;
  virtual nlohmann::json post(const nlohmann::json& request) = 0;
};

/// POSTs JSON to a URL of the form http://host[:port]/path.
/// Connection failures, timeouts, 429 and 5xx responses are TransportErrors;
/// other non-2xx statuses and unparseable bodies are ProtocolErrors.
class HttpTransport : public JsonTransport {
 public:
  explicit HttpTransport(std::string url,
                         std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
  nlohmann::json post(const nlohmann::json& request) override;

 private:
  std::string origin_;
  std::string path_;
  std::chrono::milliseconds timeout_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{5000};

  /// Delay before retry number `retry` (1-based): initial * multiplier^(retry-1), capped.
  std::chrono::milliseconds backoff(int retry) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Retries TransportErrors with exponential backoff; ProtocolErrors pass through.
class RetryingTransport : public JsonTransport {
 public:
  RetryingTransport(std::shared_ptr<JsonTransport> inner, RetryPolicy policy = {}, Sleeper sleeper = {});
  nlohmann::json post(const nlohmann::json& request) override;

  const RetryPolicy& policy() const { return policy_; }

 private:
  std::shared_ptr<JsonTransport> inner_;
  RetryPolicy policy_;
  Sleeper sleeper_;
};

/// Client of the inference endpoint: request {text, company_name, task}.
class InferenceClient {
 public:
  explicit InferenceClient(std::shared_ptr<JsonTransport> transport);

  /// task "classify": response {scores: 7 numbers in [0,1], canonical factor order}.
  FactorScores classify(const std::string& text, const std::string& company_name);
  /// task "embed": response {vector: non-empty array of numbers}.
  std::vector<double> embed(const std::string& text, const std::string& company_name);

 private:
  std::shared_ptr<JsonTransport> transport_;
};

struct Prediction {
  RiskLabelSet labels;
  FactorScores scores{};
};

/// Scores a sample on the inference endpoint and thresholds each score at 0.5.
Prediction remote_classify(InferenceClient& client, const Sample& sample);

/// Client of the text-generation endpoint: request {prompt, max_new_tokens},
/// response {text}. At most `max_in_flight` requests run concurrently.
class GenerationClient {
 public:
  GenerationClient(std::shared_ptr<JsonTransport> transport, int max_new_tokens = 8,
                   std::size_t max_in_flight = 4);

  std::string generate(const std::string& prompt);
  std::size_t max_in_flight() const { return max_in_flight_; }

 private:
  std::shared_ptr<JsonTransport> transport_;
  int max_new_tokens_;
  std::size_t max_in_flight_;
  std::counting_semaphore<64> slots_;
};

}  // namespace newsrisk
