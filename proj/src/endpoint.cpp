#include "newsrisk/endpoint.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "newsrisk/errors.hpp"

namespace newsrisk {

using nlohmann::json;

HttpTransport::HttpTransport(std::string url, std::chrono::milliseconds timeout) : timeout_(timeout) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ValidationError("endpoint URL needs a scheme: '" + url + "'");
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) {
    origin_ = url;
    path_ = "/";
  } else {
    origin_ = url.substr(0, slash);
    path_ = url.substr(slash);
  }
}

json HttpTransport::post(const json& request) {
  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  auto res = client.Post(path_, request.dump(), "application/json");
  if (!res) {
    throw TransportError("request to " + origin_ + path_ + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("endpoint " + origin_ + path_ + " returned HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProtocolError("endpoint " + origin_ + path_ + " returned HTTP " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("endpoint returned a non-JSON body: ") + e.what());
  }
}

std::chrono::milliseconds RetryPolicy::backoff(int retry) const {
  const double ms = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, retry - 1);
  const double capped = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

RetryingTransport::RetryingTransport(std::shared_ptr<JsonTransport> inner, RetryPolicy policy, Sleeper sleeper)
    : inner_(std::move(inner)), policy_(policy), sleeper_(std::move(sleeper)) {
  if (!inner_) throw ValidationError("RetryingTransport needs an inner transport");
  if (policy_.max_attempts < 1) throw ValidationError("max_attempts must be at least 1");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

json RetryingTransport::post(const json& request) {
  for (int attempt = 1;; ++attempt) {
    try {
      return inner_->post(request);
    } catch (const TransportError& e) {
      if (attempt >= policy_.max_attempts) {
        throw TransportError(std::string(e.what()) + " (gave up after " + std::to_string(attempt) + " attempts)");
      }
      sleeper_(policy_.backoff(attempt));
    }
  }
}

InferenceClient::InferenceClient(std::shared_ptr<JsonTransport> transport) : transport_(std::move(transport)) {
  if (!transport_) throw ValidationError("InferenceClient needs a transport");
}

FactorScores InferenceClient::classify(const std::string& text, const std::string& company_name) {
  const json response = transport_->post({{"text", text}, {"company_name", company_name}, {"task", "classify"}});
  const auto it = response.find("scores");
  if (!response.is_object() || it == response.end() || !it->is_array()) {
    throw ProtocolError("classify response lacks a 'scores' array");
  }
  if (it->size() != kNumFactors) {
    throw ProtocolError("classify response has " + std::to_string(it->size()) + " scores, expected 7");
  }
  FactorScores scores{};
  for (std::size_t i = 0; i < kNumFactors; ++i) {
    const auto& v = (*it)[i];
    if (!v.is_number()) throw ProtocolError("classify scores must be numbers");
    scores[i] = v.get<double>();
    if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) throw ProtocolError("classify score outside [0,1]");
  }
  return scores;
}

std::vector<double> InferenceClient::embed(const std::string& text, const std::string& company_name) {
  const json response = transport_->post({{"text", text}, {"company_name", company_name}, {"task", "embed"}});
  const auto it = response.find("vector");
  if (!response.is_object() || it == response.end() || !it->is_array() || it->empty()) {
    throw ProtocolError("embed response lacks a non-empty 'vector' array");
  }
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) throw ProtocolError("embedding entries must be numbers");
    out.push_back(v.get<double>());
    if (!std::isfinite(out.back())) throw ProtocolError("embedding entries must be finite");
  }
  return out;
}

Prediction remote_classify(InferenceClient& client, const Sample& sample) {
  Prediction p;
  p.scores = client.classify(sample.truncated_text, sample.company_name);
  for (std::size_t f = 0; f < kNumFactors; ++f) p.labels.set(f, p.scores[f] >= 0.5);
  return p;
}

GenerationClient::GenerationClient(std::shared_ptr<JsonTransport> transport, int max_new_tokens,
                                   std::size_t max_in_flight)
    : transport_(std::move(transport)),
      max_new_tokens_(max_new_tokens),
      max_in_flight_(std::clamp<std::size_t>(max_in_flight, 1, 64)),
      slots_(static_cast<std::ptrdiff_t>(max_in_flight_)) {
  if (!transport_) throw ValidationError("GenerationClient needs a transport");
}

std::string GenerationClient::generate(const std::string& prompt) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<64>& s;
    ~Release() { s.release(); }
  } release{slots_};
  const json response = transport_->post({{"prompt", prompt}, {"max_new_tokens", max_new_tokens_}});
  const auto it = response.find("text");
  if (!response.is_object() || it == response.end() || !it->is_string()) {
    throw ProtocolError("generation response lacks a 'text' string");
  }
  return it->get<std::string>();
}

}  // namespace newsrisk
