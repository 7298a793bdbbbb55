#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "newsrisk/dataset.hpp"
#include "newsrisk/endpoint.hpp"
#include "newsrisk/errors.hpp"
#include "newsrisk/evaluation.hpp"
#include "newsrisk/timestamp.hpp"

// Test helpers: generators, brute-force oracles written independently of the
// library code, and scripted endpoint stubs.
namespace testing_support {

using nlohmann::json;

inline std::filesystem::path data_dir() { return std::filesystem::path(NEWSRISK_TEST_DATA_DIR); }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("newsrisk-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// Generators.

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::uint64_t next() { return rng_(); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  std::size_t range(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  newsrisk::RiskLabelSet labels(double p = 0.3) {
    newsrisk::RiskLabelSet s;
    for (std::size_t f = 0; f < newsrisk::kNumFactors; ++f) s.set(f, coin(p));
    return s;
  }

  std::vector<newsrisk::RiskLabelSet> label_matrix(std::size_t n, double p = 0.3) {
    std::vector<newsrisk::RiskLabelSet> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(labels(p));
    return out;
  }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[index(v.size())];
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), rng_);
  }

 private:
  std::mt19937_64 rng_;
};

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words = {
      "market", "shares", "profit", "quarter", "company", "report", "growth", "sales", "board", "chief",
      "price",  "bank",   "bond",   "trade",   "deal",    "plant",  "output", "fleet", "store", "brand"};
  return words;
}

inline newsrisk::Sample make_sample(const std::string& article, const std::string& company, const std::string& text,
                                    const std::string& when = "2020-01-15T00:00:00Z",
                                    newsrisk::Sector sector = newsrisk::Sector::Unknown) {
  newsrisk::Sample s;
  s.article_id = article;
  s.company_id = company;
  s.sample_id = newsrisk::make_sample_id(article, company);
  s.company_name = company;
  s.truncated_text = text;
  s.published_at = newsrisk::parse_iso8601(when);
  s.sector = sector;
  return s;
}

inline newsrisk::LabeledSample make_labeled(const std::string& id, newsrisk::RiskLabelSet labels,
                                            const std::string& when = "2020-01-15T00:00:00Z",
                                            newsrisk::Sector sector = newsrisk::Sector::Unknown,
                                            const std::string& company = "c1") {
  return {make_sample(id, company, "text of " + id, when, sector), labels, std::nullopt, {}};
}

/// Random labeled samples spread over 2019-2021 and a few sectors and companies.
inline std::vector<newsrisk::LabeledSample> random_labeled(Gen& g, std::size_t n) {
  static const std::vector<newsrisk::Sector> sectors = {newsrisk::Sector::Unknown, newsrisk::Sector::Energy,
                                                        newsrisk::Sector::Technology, newsrisk::Sector::Financials};
  std::vector<newsrisk::LabeledSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    char when[32];
    std::snprintf(when, sizeof when, "%04zu-%02zu-%02zuT%02zu:00:00Z", 2019 + g.index(3), 1 + g.index(12),
                  1 + g.index(28), g.index(24));
    out.push_back(make_labeled("a" + std::to_string(i), g.labels(), when, g.pick(sectors),
                               "c" + std::to_string(g.index(4))));
  }
  return out;
}

// Oracles.

/// Confusion counts by direct per-cell tally.
inline std::array<newsrisk::Confusion, newsrisk::kNumFactors> recount(
    const std::vector<newsrisk::RiskLabelSet>& pred, const std::vector<newsrisk::RiskLabelSet>& gold) {
  std::array<newsrisk::Confusion, newsrisk::kNumFactors> out{};
  for (std::size_t f = 0; f < newsrisk::kNumFactors; ++f) {
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const int cell = (pred[i].test(f) ? 2 : 0) + (gold[i].test(f) ? 1 : 0);
      switch (cell) {
        case 3: out[f].tp++; break;
        case 2: out[f].fp++; break;
        case 1: out[f].fn++; break;
        default: out[f].tn++; break;
      }
    }
  }
  return out;
}

/// idf per n-gram by counting documents directly.
inline std::map<std::string, double> oracle_idf(const std::vector<std::vector<std::string>>& docs,
                                                std::size_t min_df) {
  std::map<std::string, std::set<std::size_t>> seen;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      seen[docs[d][i]].insert(d);
      if (i + 1 < docs[d].size()) seen[docs[d][i] + " " + docs[d][i + 1]].insert(d);
    }
  }
  std::map<std::string, double> out;
  const double n = static_cast<double>(docs.size());
  for (const auto& [term, ds] : seen) {
    if (ds.size() >= min_df) out[term] = std::log((1.0 + n) / (1.0 + static_cast<double>(ds.size()))) + 1.0;
  }
  return out;
}

/// Cosine over dense vectors; 0 when either norm is 0.
inline double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0 || bb == 0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

/// O(n·d) scan: k best by similarity, lower index first on ties, then a
/// strict-majority vote per factor.
inline newsrisk::RiskLabelSet oracle_knn(const std::vector<std::vector<double>>& points,
                                         const std::vector<newsrisk::RiskLabelSet>& labels,
                                         const std::vector<double>& query, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < points.size(); ++i) scored.push_back({oracle_cosine(points[i], query), i});
  std::vector<std::size_t> chosen;
  std::vector<bool> used(points.size(), false);
  for (std::size_t r = 0; r < k; ++r) {
    std::size_t best = points.size();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (used[i]) continue;
      if (best == points.size() || scored[i].first > scored[best].first) best = i;
    }
    used[best] = true;
    chosen.push_back(best);
  }
  newsrisk::RiskLabelSet out;
  for (std::size_t f = 0; f < newsrisk::kNumFactors; ++f) {
    std::size_t pos = 0;
    for (auto i : chosen) pos += labels[i].test(f) ? 1 : 0;
    out.set(f, 2 * pos > k);
  }
  return out;
}

// Endpoint stubs.

/// Transport that returns scripted responses in order and records requests.
/// A step either returns a JSON value or throws.
class ScriptedTransport : public newsrisk::JsonTransport {
 public:
  using Step = std::function<json(const json&)>;

  void push(Step step) {
    std::lock_guard lock(mu_);
    steps_.push_back(std::move(step));
  }
  void push_response(json r) {
    push([r](const json&) { return r; });
  }
  void push_transport_failure(const std::string& what = "connection refused") {
    push([what](const json&) -> json { throw newsrisk::TransportError(what); });
  }
  /// Used when the script runs out.
  void set_fallback(Step step) {
    std::lock_guard lock(mu_);
    fallback_ = std::move(step);
  }

  json post(const json& request) override {
    Step step;
    {
      std::lock_guard lock(mu_);
      requests_.push_back(request);
      if (!steps_.empty()) {
        step = std::move(steps_.front());
        steps_.pop_front();
      } else {
        step = fallback_;
      }
    }
    if (!step) throw newsrisk::TransportError("script exhausted");
    return step(request);
  }

  std::vector<json> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }
  std::size_t request_count() const {
    std::lock_guard lock(mu_);
    return requests_.size();
  }

 private:
  mutable std::mutex mu_;
  std::deque<Step> steps_;
  Step fallback_;
  std::vector<json> requests_;
};

/// A loopback TCP port with no listener: bound to pick it, then closed.
inline int unused_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  socklen_t len = sizeof(addr);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

/// Local HTTP server on an ephemeral port that answers POST / with a handler.
class StubHttpServer {
 public:
  using Handler = std::function<void(const json& request, httplib::Response& res)>;

  explicit StubHttpServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/.*", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mu_);
        ++hits_;
      }
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception&) {
        res.status = 400;
        return;
      }
      handler_(body, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubHttpServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url(const std::string& path = "/generate") const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }
  int port() const { return port_; }
  std::size_t hits() const {
    std::lock_guard lock(mu_);
    return hits_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
  mutable std::mutex mu_;
  std::size_t hits_ = 0;
};

inline void reply_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace testing_support
