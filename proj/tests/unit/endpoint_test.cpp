#include "newsrisk/endpoint.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "newsrisk/errors.hpp"
#include "support.hpp"

using namespace newsrisk;
using testing_support::json;
using testing_support::reply_json;
using testing_support::ScriptedTransport;
using testing_support::StubHttpServer;

TEST(RetryPolicy, ExponentialBackoffIsCapped) {
  RetryPolicy p;
  p.initial_backoff = std::chrono::milliseconds(100);
  p.multiplier = 2.0;
  p.max_backoff = std::chrono::milliseconds(350);
  EXPECT_EQ(p.backoff(1).count(), 100);
  EXPECT_EQ(p.backoff(2).count(), 200);
  EXPECT_EQ(p.backoff(3).count(), 350);
}

TEST(RetryingTransport, RetriesTransportErrorsThenSucceeds) {
  auto inner = std::make_shared<ScriptedTransport>();
  inner->push_transport_failure();
  inner->push_transport_failure();
  inner->push_response({{"ok", true}});
  std::vector<long> sleeps;
  RetryingTransport t(inner, {3, std::chrono::milliseconds(10), 3.0, std::chrono::milliseconds(1000)},
                      [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  EXPECT_EQ(t.post({}), (json{{"ok", true}}));
  EXPECT_EQ(inner->request_count(), 3u);
  EXPECT_EQ(sleeps, (std::vector<long>{10, 30}));
}

TEST(RetryingTransport, GivesUpAfterMaxAttempts) {
  auto inner = std::make_shared<ScriptedTransport>();
  inner->set_fallback([](const json&) -> json { throw TransportError("down"); });
  std::size_t sleeps = 0;
  RetryingTransport t(inner, {4, std::chrono::milliseconds(1), 2.0, std::chrono::milliseconds(5)},
                      [&](std::chrono::milliseconds) { ++sleeps; });
  EXPECT_THROW(t.post({}), TransportError);
  EXPECT_EQ(inner->request_count(), 4u);
  EXPECT_EQ(sleeps, 3u);
}

TEST(RetryingTransport, ProtocolErrorsAreNotRetried) {
  auto inner = std::make_shared<ScriptedTransport>();
  inner->push([](const json&) -> json { throw ProtocolError("bad"); });
  RetryingTransport t(inner, {}, [](std::chrono::milliseconds) {});
  EXPECT_THROW(t.post({}), ProtocolError);
  EXPECT_EQ(inner->request_count(), 1u);
  EXPECT_THROW(RetryingTransport(nullptr), ValidationError);
  EXPECT_THROW(RetryingTransport(inner, {0}), ValidationError);
}

TEST(InferenceClient, ClassifyAndEmbedContracts) {
  auto t = std::make_shared<ScriptedTransport>();
  t->push_response(json{{"scores", {0.9, 0.1, 0.5, 0.0, 1.0, 0.49, 0.51}}});
  t->push_response(json{{"vector", {1.0, 2.0}}});
  InferenceClient client(t);
  const auto scores = client.classify("Text", "Acme");
  EXPECT_DOUBLE_EQ(scores[0], 0.9);
  EXPECT_EQ(client.embed("Text", "Acme"), (std::vector<double>{1.0, 2.0}));
  const auto reqs = t->requests();
  EXPECT_EQ(reqs[0], (json{{"text", "Text"}, {"company_name", "Acme"}, {"task", "classify"}}));
  EXPECT_EQ(reqs[1]["task"], "embed");
}

TEST(InferenceClient, MalformedPayloadsAreProtocolErrors) {
  const std::vector<json> bad = {json::object(),
                                 json{{"scores", {0.1, 0.2}}},
                                 json{{"scores", std::vector<double>(7, 1.5)}},
                                 json{{"scores", {"a", 0, 0, 0, 0, 0, 0}}},
                                 json::array()};
  for (const auto& payload : bad) {
    auto t = std::make_shared<ScriptedTransport>();
    t->push_response(payload);
    InferenceClient client(t);
    EXPECT_THROW(client.classify("x", "y"), ProtocolError) << payload.dump();
  }
  auto t = std::make_shared<ScriptedTransport>();
  t->push_response(json{{"vector", json::array()}});
  InferenceClient client(t);
  EXPECT_THROW(client.embed("x", "y"), ProtocolError);
}

TEST(RemoteClassify, ThresholdsAtHalf) {
  auto t = std::make_shared<ScriptedTransport>();
  t->push_response(json{{"scores", {0.5, 0.49, 1, 0, 0.7, 0.2, 0.5}}});
  InferenceClient client(t);
  const auto p = remote_classify(client, testing_support::make_sample("a", "c", "text"));
  EXPECT_EQ(p.labels.to_bitstring(), "1010101");
}

TEST(GenerationClient, RequestShapeAndConcurrencyLimit) {
  auto t = std::make_shared<ScriptedTransport>();
  std::atomic<int> in_flight{0}, peak{0};
  t->set_fallback([&](const json&) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --in_flight;
    return json{{"text", "Yes"}};
  });
  GenerationClient client(t, 4, 2);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { EXPECT_EQ(client.generate("p"), "Yes"); });
  for (auto& th : threads) th.join();
  EXPECT_LE(peak.load(), 2);
  EXPECT_EQ(t->requests()[0], (json{{"prompt", "p"}, {"max_new_tokens", 4}}));

  auto bad = std::make_shared<ScriptedTransport>();
  bad->push_response(json{{"text", 3}});
  GenerationClient bad_client(bad);
  EXPECT_THROW(bad_client.generate("p"), ProtocolError);
}

TEST(HttpTransport, StatusMapping) {
  StubHttpServer server([](const json& req, httplib::Response& res) {
    const std::string mode = req.value("mode", "");
    if (mode == "ok") return reply_json(res, {{"echo", req}});
    if (mode == "busy") return reply_json(res, {{"error", "busy"}}, 503);
    if (mode == "limit") return reply_json(res, {{"error", "slow down"}}, 429);
    if (mode == "bad") return reply_json(res, {{"error", "bad"}}, 422);
    res.status = 200;
    res.set_content("not json", "text/plain");
  });
  HttpTransport t(server.url("/infer"));
  EXPECT_EQ(t.post({{"mode", "ok"}})["echo"]["mode"], "ok");
  EXPECT_THROW(t.post({{"mode", "busy"}}), TransportError);
  EXPECT_THROW(t.post({{"mode", "limit"}}), TransportError);
  EXPECT_THROW(t.post({{"mode", "bad"}}), ProtocolError);
  EXPECT_THROW(t.post({{"mode", "garbage"}}), ProtocolError);
  EXPECT_EQ(server.hits(), 5u);
}

TEST(HttpTransport, ConnectionRefusedIsTransportError) {
  const int port = testing_support::unused_port();
  HttpTransport t("http://127.0.0.1:" + std::to_string(port) + "/x", std::chrono::milliseconds(500));
  EXPECT_THROW(t.post({}), TransportError);
  EXPECT_THROW(HttpTransport("localhost:80/x"), ValidationError);
}

TEST(HttpTransport, RetriesOverTheWire) {
  std::atomic<int> calls{0};
  StubHttpServer server([&](const json&, httplib::Response& res) {
    if (++calls < 3) return reply_json(res, {{"error", "warming up"}}, 503);
    reply_json(res, {{"text", "No"}});
  });
  auto http = std::make_shared<HttpTransport>(server.url());
  auto retrying = std::make_shared<RetryingTransport>(
      http, RetryPolicy{3, std::chrono::milliseconds(1), 2.0, std::chrono::milliseconds(5)});
  GenerationClient client(retrying);
  EXPECT_EQ(client.generate("prompt"), "No");
  EXPECT_EQ(server.hits(), 3u);
}
