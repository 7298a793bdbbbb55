// Acceptance suite: one timed criterion per line, "PASS|FAIL <name> <elapsed>s (limit <limit>s)".
// Exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "httplib.h"
#include "newsrisk/analytics.hpp"
#include "newsrisk/annotation_server.hpp"
#include "newsrisk/annotation_store.hpp"
#include "newsrisk/corpus.hpp"
#include "newsrisk/endpoint.hpp"
#include "newsrisk/errors.hpp"
#include "newsrisk/evaluation.hpp"
#include "newsrisk/knn.hpp"
#include "newsrisk/lexicon.hpp"
#include "newsrisk/linear_model.hpp"
#include "newsrisk/multilabel.hpp"
#include "newsrisk/prompting.hpp"
#include "newsrisk/vectorizer.hpp"
#include "support.hpp"

using namespace newsrisk;
using testing_support::Gen;
using testing_support::json;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

// Lexicon.

void lexicon_fidelity() {
  const std::set<std::string> expected = {
      "affect",     "ban",         "cash",      "cashflow", "challenge", "competition", "concern",   "crackdown",
      "cut",        "debt",        "decline",   "decrease", "delay",     "demand",      "downgrade", "drop",
      "fail",       "finance",     "harm",      "hit",      "impact",    "inflation",   "layoff",    "liable",
      "limit",      "lose",        "loss",      "lowest",   "operation", "plunge",      "pressure",  "protest",
      "regulation", "restriction", "risk",      "rival",    "shortage",  "shrink",      "slump",     "strike",
      "struggle",   "sue",         "suffer",    "supply",   "suspend",   "tension",     "unable",    "uncertain",
      "volatile",   "warn",        "weak",      "worsen",   "worst"};
  const auto& lex = default_lexicon();
  require(lex.size() == 53, "default lexicon size " + std::to_string(lex.size()));
  require(lex.terms() == expected, "default lexicon terms differ");
  const auto m = headline_matches("Tesla Pauses Hiring, Musk Says Need to Cut Staff by 10%", lex);
  require(m.matched, "headline did not match");
  require(m.hits == std::set<std::string>{"cut"}, "hit set is not {cut}");
}

// Split protocol.

std::vector<LabeledSample> singletons(std::size_t n) {
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(testing_support::make_labeled("s" + std::to_string(i), {}));
  return out;
}

std::vector<std::string> ids_of(const std::vector<LabeledSample>& v) {
  std::vector<std::string> out;
  for (const auto& s : v) out.push_back(s.sample.sample_id);
  return out;
}

std::array<std::size_t, 3> oracle_split_sizes(std::size_t n) {
  std::array<std::size_t, 3> out{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    out[i] = n * SplitSpec::kWeights[i] / SplitSpec::kTotalWeight;
    assigned += out[i];
  }
  std::vector<int> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return (n * SplitSpec::kWeights[a]) % SplitSpec::kTotalWeight >
           (n * SplitSpec::kWeights[b]) % SplitSpec::kTotalWeight;
  });
  for (std::size_t r = 0; r < n - assigned; ++r) out[order[r]]++;
  return out;
}

void split_protocol() {
  const auto samples = singletons(716);
  const auto a = split_dataset(samples);
  require(a.train.size() == 484 && a.validation.size() == 126 && a.test.size() == 106, "716 does not split 484/126/106");

  for (std::size_t n = 10; n <= 5000; ++n) {
    require(split_sizes(n) == oracle_split_sizes(n), "largest remainder differs at n=" + std::to_string(n));
  }

  Gen g(101);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = g.range(10, 5000);
    const auto s = singletons(n);
    const auto split = split_dataset(s);
    const auto sizes = split_sizes(n);
    require(split.train.size() == sizes[0] && split.validation.size() == sizes[1] && split.test.size() == sizes[2],
            "split sizes differ at n=" + std::to_string(n));
    std::multiset<std::string> seen;
    for (const auto* part : {&split.train, &split.validation, &split.test}) {
      for (const auto& id : ids_of(*part)) seen.insert(id);
    }
    std::multiset<std::string> all;
    for (const auto& id : ids_of(s)) all.insert(id);
    require(seen == all, "split is not a partition at n=" + std::to_string(n));
    const auto again = split_dataset(s);
    require(again.train == split.train && again.validation == split.validation && again.test == split.test,
            "split is not deterministic at n=" + std::to_string(n));
  }
}

// Prompts.

const std::string kGoldenText =
    "Huawei Faces New U.S. Curbs\nThe Commerce Department added the company to its entity list. Suppliers must now "
    "apply for licenses.";

std::string expected_block(const std::string& text, const std::string& target, const std::string& risk) {
  return text + "\nFor company " + target + ", does the above news mention " + risk +
         " ?\nOptions: Yes, No\nYour answer is (Please only use Yes or No):";
}

std::vector<double> oracle_row(const std::map<std::string, double>& idf, const std::vector<std::string>& tokens) {
  std::map<std::string, double> tf;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    tf[tokens[i]] += 1;
    if (i + 1 < tokens.size()) tf[tokens[i] + " " + tokens[i + 1]] += 1;
  }
  std::vector<double> row;
  for (const auto& [term, w] : idf) row.push_back(tf.count(term) ? tf[term] * w : 0.0);
  return row;
}

std::vector<LabeledSample> random_train(Gen& g, std::size_t n, const std::string& prefix) {
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text = "Head";
    for (std::size_t w = 0; w < g.range(1, 7); ++w) text += " " + g.pick(testing_support::word_pool());
    auto s = testing_support::make_labeled(prefix + std::to_string(i), g.labels(0.5));
    s.sample.truncated_text = text;
    s.sample.company_name = "Co" + std::to_string(i);
    out.push_back(s);
  }
  return out;
}

std::size_t count_blocks(const std::string& prompt) {
  std::size_t blocks = 1, pos = 0;
  while ((pos = prompt.find("\n\n", pos)) != std::string::npos) {
    ++blocks;
    pos += 2;
  }
  return blocks;
}

void prompt_byte_exactness() {
  const auto golden = testing_support::read_file(testing_support::data_dir() / "zero_shot_prompt.golden");
  require(!golden.empty(), "golden file missing");
  auto s = testing_support::make_sample("a", "hw", kGoldenText);
  s.company_name = "Huawei";
  require(factor_prompt(s, RiskFactor::LegalAndRegulations, PromptMode::ZeroShot, nullptr) == golden,
          "zero-shot prompt differs from golden bytes");

  Gen g(102);
  for (int trial = 0; trial < 10; ++trial) {
    const auto train = random_train(g, 50, "t");
    const FewShotSelector selector(train);
    std::vector<std::vector<std::string>> docs;
    for (const auto& t : train) docs.push_back(tokenize(t.sample.truncated_text));
    const auto idf = testing_support::oracle_idf(docs, 1);
    for (int q = 0; q < 5; ++q) {
      const auto query = random_train(g, 1, "q")[0].sample;
      const auto qrow = oracle_row(idf, tokenize(query.truncated_text));
      std::vector<std::pair<double, std::string>> ranked;
      std::map<std::string, const LabeledSample*> by_id;
      for (std::size_t i = 0; i < train.size(); ++i) {
        ranked.push_back({testing_support::oracle_cosine(qrow, oracle_row(idf, docs[i])), train[i].sample.sample_id});
        by_id[train[i].sample.sample_id] = &train[i];
      }
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (std::abs(a.first - b.first) > 1e-12) return a.first > b.first;
        return a.second < b.second;
      });
      for (auto f : kAllFactors) {
        const std::string risk(description(f));
        std::string expected;
        for (std::size_t r = 0; r < 3; ++r) {
          const auto& ex = *by_id.at(ranked[r].second);
          expected += expected_block(ex.sample.truncated_text, ex.sample.company_name, risk) +
                      (ex.labels[f] ? " Yes\n\n" : " No\n\n");
        }
        expected += expected_block(query.truncated_text, query.company_name, risk);
        const auto got = factor_prompt(query, f, PromptMode::FewShot, &selector);
        require(count_blocks(got) == 4, "few-shot prompt does not hold 3 demonstrations");
        require(got == expected, "few-shot prompt differs from brute-force selection");
      }
    }
  }
}

// Numerics.

struct Problem {
  std::vector<SparseVector> X;
  std::vector<bool> y;
};

Problem random_problem(Gen& g, std::size_t n, std::size_t dim) {
  Problem p;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> dense(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
      if (g.coin(0.6)) dense[d] = g.normal();
    }
    p.X.push_back(SparseVector::from_dense(dense));
    p.y.push_back(g.coin());
  }
  p.y[0] = true;
  p.y[1] = false;
  return p;
}

Problem separable_problem(Gen& g, std::size_t n, std::size_t dim) {
  Problem p;
  for (std::size_t i = 0; i < n; ++i) {
    const bool label = i % 2 == 0;
    std::vector<double> dense(dim, 0.0);
    dense[0] = label ? 1.0 : 0.0;
    for (std::size_t d = 1; d < dim; ++d) {
      if (g.coin(0.3)) dense[d] = g.uniform(0.0, 1.0);
    }
    auto x = SparseVector::from_dense(dense);
    x.normalize();
    p.X.push_back(x);
    p.y.push_back(label);
  }
  return p;
}

void numerical_correctness() {
  Gen g(103);
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t dim = g.range(1, 10);
    const auto p = random_problem(g, g.range(2, 40), dim);
    std::vector<double> w(dim);
    for (auto& x : w) x = g.normal();
    const double b = g.normal();
    const double lambda = g.uniform(0.0, 0.5);
    const auto grad = logistic_gradient(w, b, p.X, p.y, lambda);
    const double h = 1e-5;
    double diff2 = 0.0, ref2 = 0.0;
    for (std::size_t d = 0; d <= dim; ++d) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (d < dim) {
        wp[d] += h;
        wm[d] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double fd =
          (logistic_objective(wp, bp, p.X, p.y, lambda) - logistic_objective(wm, bm, p.X, p.y, lambda)) / (2 * h);
      const double an = d < dim ? grad.weights[d] : grad.bias;
      diff2 += (an - fd) * (an - fd);
      ref2 += fd * fd;
    }
    require(ref2 > 0.0, "degenerate gradient draw");
    const double rel = std::sqrt(diff2 / ref2);
    require(rel < 1e-4, "gradient relative error " + std::to_string(rel) + " on draw " + std::to_string(draw));
  }

  for (int fixture = 0; fixture < 20; ++fixture) {
    const auto p = fixture % 2 == 0 ? random_problem(g, g.range(10, 80), g.range(2, 12))
                                    : separable_problem(g, g.range(10, 80), g.range(2, 12));
    for (double lambda : {1e-4, 1e-3, 0.1}) {
      LinearHyper hyper;
      hyper.l2_lambda = lambda;
      std::vector<double> trace;
      train_logistic(p.X, p.y, hyper, &trace);
      require(trace.size() == hyper.epochs + 1, "loss trace length");
      for (std::size_t i = 1; i < trace.size(); ++i) {
        require(trace[i] <= trace[i - 1] + 1e-12, "logistic loss increased on fixture " + std::to_string(fixture));
      }
    }
  }

  {
    const std::size_t dim = 16, k = 5;
    KnnIndex index(k, dim);
    std::vector<std::vector<double>> points;
    std::vector<RiskLabelSet> labels;
    for (int i = 0; i < 200; ++i) {
      std::vector<double> pt(dim);
      for (auto& x : pt) x = g.normal();
      points.push_back(pt);
      labels.push_back(g.labels(0.5));
      index.add(pt, labels.back());
    }
    for (int q = 0; q < 200; ++q) {
      std::vector<double> query(dim);
      for (auto& x : query) x = g.normal();
      require(knn_predict(index, query) == testing_support::oracle_knn(points, labels, query, k),
              "knn differs from brute force");
    }
  }

  {
    const auto v = Vectorizer::fit({{"a", "b"}, {"a", "c"}});
    require(v.dimension() == 5, "fixture vocabulary size");
    const double rare = std::log(3.0 / 2.0) + 1.0;
    require(std::abs(v.idf(*v.column("a")) - 1.0) < 1e-9, "idf(a)");
    require(std::abs(v.idf(*v.column("b")) - rare) < 1e-9, "idf(b)");
    require(std::abs(v.idf(*v.column("a c")) - rare) < 1e-9, "idf(a c)");
    const auto row = v.transform({"a", "b", "a"});
    const double norm = std::sqrt(4.0 + 2.0 * rare * rare);
    std::map<std::string, double> expected = {{"a", 2.0 / norm}, {"b", rare / norm}, {"a b", rare / norm}};
    require(row.nnz() == expected.size(), "fixture row nnz");
    for (std::size_t i = 0; i < row.nnz(); ++i) {
      const auto& term = v.term(row.indices[i]);
      require(expected.count(term) && std::abs(row.values[i] - expected[term]) < 1e-9, "tf-idf value for " + term);
    }

    const auto w = Vectorizer::fit({{"x"}, {"x", "y"}, {"y", "z", "y"}});
    const auto r = w.transform({"y", "y", "z"});
    const double idf_y = std::log(4.0 / 3.0) + 1.0, idf_z = std::log(4.0 / 2.0) + 1.0;
    const double ry = 2 * idf_y, rz = idf_z, ryz = idf_z, ryy = 0.0;
    const double n2 = std::sqrt(ry * ry + rz * rz + ryz * ryz + ryy * ryy);
    std::map<std::string, double> exp2 = {{"y", ry / n2}, {"z", rz / n2}, {"y z", ryz / n2}};
    require(r.nnz() == exp2.size(), "second fixture nnz");
    for (std::size_t i = 0; i < r.nnz(); ++i) {
      const auto& term = w.term(r.indices[i]);
      require(exp2.count(term) && std::abs(r.values[i] - exp2[term]) < 1e-9, "tf-idf value for " + term);
    }
  }
}

// Learnability.

const std::array<std::vector<std::string>, kNumFactors>& keyword_sets() {
  static const std::array<std::vector<std::string>, kNumFactors> k = {{
      {"shortage", "recall", "outage"},
      {"resigns", "ceo", "layoffs"},
      {"debt", "downgrade", "liquidity"},
      {"lawsuit", "fine", "antitrust"},
      {"inflation", "pandemic", "war"},
      {"rival", "competitor", "pricewar"},
      {"consumers", "boycott", "churn"},
  }};
  return k;
}

void learnability() {
  Gen g(104);
  std::vector<LabeledSample> corpus;
  for (std::size_t i = 0; i < 200; ++i) {
    const auto labels = g.labels(0.4);
    std::string text = "headline";
    for (std::size_t w = 0; w < 6; ++w) text += " " + g.pick(testing_support::word_pool());
    for (std::size_t f = 0; f < kNumFactors; ++f) {
      if (!labels.test(f)) continue;
      auto planted = keyword_sets()[f];
      g.shuffle(planted);
      for (const auto& k : planted) text += " " + k;
    }
    auto s = testing_support::make_labeled("p" + std::to_string(i), labels);
    s.sample.truncated_text = text;
    corpus.push_back(s);
  }
  const auto split = split_dataset(corpus);
  require(split.train.size() == 135 && split.validation.size() == 35 && split.test.size() == 30,
          "200 samples do not split 135/35/30");
  std::vector<Sample> train_x;
  std::vector<RiskLabelSet> train_y, test_y;
  for (const auto& s : split.train) {
    train_x.push_back(s.sample);
    train_y.push_back(s.labels);
  }
  for (const auto& s : split.test) test_y.push_back(s.labels);

  for (auto family : {ModelFamily::Logistic, ModelFamily::Svm}) {
    TrainConfig cfg;
    cfg.family = family;
    const auto model = train_multilabel(train_x, train_y, cfg);
    std::vector<RiskLabelSet> pred;
    for (const auto& s : split.test) pred.push_back(model.predict(s.sample).labels);
    const auto report = score(pred, test_y);
    for (auto f : kAllFactors) {
      const double f1v = report.factors[index_of(f)].f1;
      require(f1v >= 0.9, std::string(family_name(family)) + " " + std::string(code(f)) +
                              " test F1 " + std::to_string(f1v));
    }
  }

  const auto draws = random_predict(7, 10000);
  for (std::size_t f = 0; f < kNumFactors; ++f) {
    std::size_t positives = 0;
    for (const auto& d : draws) positives += d.test(f) ? 1 : 0;
    const double rate = static_cast<double>(positives) / 10000.0;
    require(std::abs(rate - 0.5) <= 0.05, "random baseline rate " + std::to_string(rate));
  }
}

// Metrics.

void metric_oracle() {
  Gen g(105);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = g.range(1, 60);
    const auto pred = g.label_matrix(n, g.uniform(0.0, 1.0));
    const auto gold = g.label_matrix(n, g.uniform(0.0, 1.0));
    const auto report = score(pred, gold);
    const auto expected = testing_support::recount(pred, gold);
    Confusion micro;
    for (std::size_t f = 0; f < kNumFactors; ++f) {
      require(report.factors[f].counts == expected[f], "confusion counts differ from recount");
      micro.tp += expected[f].tp;
      micro.fp += expected[f].fp;
      micro.fn += expected[f].fn;
      micro.tn += expected[f].tn;
    }
    require(report.micro_counts == micro, "micro counts differ from pooled recount");
    const double p = report.micro_precision, r = report.micro_recall;
    const double harmonic = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    require(std::abs(report.micro_f1 - harmonic) < 1e-12, "micro F1 is not the harmonic mean");
  }
}

// Analytics.

void analytics_oracles() {
  using testing_support::make_labeled;
  const std::vector<LabeledSample> fixture = {
      make_labeled("a", {RiskFactor::Finance, RiskFactor::Macro, RiskFactor::Competition}),
      make_labeled("b", {RiskFactor::Finance, RiskFactor::Macro}),
      make_labeled("c", {RiskFactor::Macro}),
      make_labeled("d", {}),
  };
  const auto m = cooccurrence(fixture);
  std::map<std::pair<RiskFactor, RiskFactor>, std::size_t> hand = {
      {{RiskFactor::Finance, RiskFactor::Macro}, 2},
      {{RiskFactor::Finance, RiskFactor::Competition}, 1},
      {{RiskFactor::Macro, RiskFactor::Competition}, 1},
  };
  for (auto a : kAllFactors) {
    for (auto b : kAllFactors) {
      if (a == b) {
        require(!m.at(a, b).has_value(), "diagonal is populated");
        continue;
      }
      const auto key = index_of(a) < index_of(b) ? std::pair{a, b} : std::pair{b, a};
      const std::size_t expected = hand.count(key) ? hand.at(key) : 0;
      require(m.at(a, b) == expected, "co-occurrence differs from hand count");
      require(m.at(a, b) == m.at(b, a), "co-occurrence not symmetric");
    }
  }

  Gen g(106);
  for (int trial = 0; trial < 20; ++trial) {
    const auto samples = testing_support::random_labeled(g, g.range(0, 300));
    for (std::size_t parts : {1u, 2u, 4u, 7u}) {
      require(aggregate_partitioned(samples, parts, LabelDistribution{}) == label_distribution(samples),
              "partitioned label distribution differs");
      require(aggregate_partitioned(samples, parts, CooccurrenceMatrix{}) == cooccurrence(samples),
              "partitioned co-occurrence differs");
      require(aggregate_partitioned(samples, parts, IndustryDistribution{}) == industry_distribution(samples),
              "partitioned industry distribution differs");
      RiskTimeSeries proto;
      proto.granularity = Granularity::Month;
      require(aggregate_partitioned(samples, parts, proto) == risk_timeseries(samples, Granularity::Month),
              "partitioned time series differs");
    }
    const auto dist = label_distribution(samples);
    for (auto gran : {Granularity::Month, Granularity::Year}) {
      const auto series = risk_timeseries(samples, gran);
      std::size_t articles = 0;
      std::array<std::size_t, kNumFactors> pos{};
      for (const auto& [key, pc] : series.periods) {
        articles += pc.article_count;
        for (std::size_t f = 0; f < kNumFactors; ++f) pos[f] += pc.positive[f];
      }
      require(articles == samples.size(), "period article counts do not sum to total");
      require(pos == dist.counts, "period factor counts do not sum to totals");
    }
  }
}

// Annotation workflow.

void annotation_workflow() {
  testing_support::TempDir dir;
  const auto store_dir = dir.path() / "store";
  std::filesystem::create_directories(store_dir);
  std::shared_ptr<const AnnotationState> before;
  std::vector<LabeledSample> exported;
  {
    StoreOptions opts;
    opts.clock = [] { return parse_iso8601("2024-03-01T12:00:00Z"); };
    AnnotationStore store(store_dir, opts);
    ServerConfig cfg;
    cfg.port = 0;
    AnnotationServer server(store, cfg);
    const int port = server.start();
    httplib::Client client("127.0.0.1", port);
    auto post = [&](const std::string& path, const json& body, const std::string& annotator) {
      httplib::Headers headers;
      if (!annotator.empty()) headers.emplace("X-Annotator-Id", annotator);
      auto res = client.Post(path, headers, body.dump(), "application/json");
      require(static_cast<bool>(res), "no response for " + path);
      return res;
    };

    json samples = json::array();
    for (int i = 0; i < 10; ++i) {
      samples.push_back(
          to_json(testing_support::make_sample("n" + std::to_string(i), "co", "News item " + std::to_string(i))));
    }
    auto enq = post("/enqueue", {{"samples", samples}, {"annotators", {"a", "b", "c"}}, {"calibration_count", 4}}, "");
    require(enq->status == 200, "enqueue status " + std::to_string(enq->status));
    const auto counts = json::parse(enq->body);
    require(counts["calibration"] == 12 && counts["solo"] == 6 && counts["assignments"] == 18,
            "enqueue counts " + counts.dump());

    const std::map<std::string, json> labels = {
        {"a", {"finance", "macro"}}, {"b", {"macro"}}, {"c", {"macro", "competition"}}};
    for (const auto& [who, l] : labels) {
      auto r = post("/annotations", {{"sample_id", "n0:co"}, {"labels", l}}, who);
      require(r->status == 200, "submission status " + std::to_string(r->status));
    }
    auto d = client.Get("/disagreements/n0:co");
    require(d && d->status == 200, "disagreements request failed");
    const auto report = json::parse(d->body);
    const json expected_conflicts = {
        {{"factor", "finance"}, {"positive", {"a"}}, {"negative", {"b", "c"}}},
        {{"factor", "competition"}, {"positive", {"c"}}, {"negative", {"a", "b"}}},
    };
    require(report["conflicts"] == expected_conflicts, "per-factor diff " + report["conflicts"].dump());
    require(report["unanimous"] == false, "report marked unanimous");

    auto adj = post("/adjudications", {{"sample_id", "n0:co"}, {"labels", {"macro"}}}, "lead");
    require(adj->status == 200, "adjudication status " + std::to_string(adj->status));

    for (const auto& a : store.snapshot()->assignments) {
      if (a.batch != Batch::Solo) continue;
      json l = a.sample_id == "n5:co" ? json{"supply_chain_and_product"} : json::array();
      json body = {{"sample_id", a.sample_id}, {"labels", l}};
      if (l.empty()) body["no_risk_confirmed"] = true;
      require(post("/annotations", body, a.annotator_id)->status == 200, "solo submission failed");
    }

    auto gold = client.Get("/export/gold");
    require(gold && gold->status == 200, "export failed");
    std::istringstream in(gold->body);
    exported = import_gold(in);
    require(exported.size() == 7, "gold record count " + std::to_string(exported.size()));
    require(exported == store.export_gold().records, "imported gold differs from store export");
    std::ostringstream again;
    GoldExport ge;
    ge.records = exported;
    write_gold(again, ge);
    std::istringstream in2(again.str());
    require(import_gold(in2) == exported, "gold re-import is not identical");

    before = store.snapshot();
    server.stop();
  }

  const auto crash_dir = dir.path() / "crash";
  std::filesystem::copy(store_dir, crash_dir);
  {
    std::ofstream torn(crash_dir / std::string(AnnotationStore::kLogName), std::ios::app | std::ios::binary);
    torn << R"({"type":"submit","record":{"sample_id":"n1)";
  }
  AnnotationStore replayed(crash_dir);
  require(*replayed.snapshot() == *before, "replayed state differs after crash");
  require(replayed.export_gold().records == exported, "replayed export differs");
}

// LLM path.

void llm_path() {
  auto t = std::make_shared<testing_support::ScriptedTransport>();
  t->set_fallback([](const json&) { return json{{"text", "Perhaps"}}; });
  GenerationClient client(t, 8, 4);
  for (int i = 0; i < 5; ++i) {
    const auto before = t->request_count();
    const auto s = testing_support::make_sample("m" + std::to_string(i), "co", "Some news " + std::to_string(i));
    const auto r = classify_with_llm(client, s, PromptMode::ZeroShot);
    require(t->request_count() - before == 7, "requests per sample " + std::to_string(t->request_count() - before));
    require(r.requests == 7, "reported requests");
    require(r.unparseable == 7, "unparseable tally " + std::to_string(r.unparseable));
    require(r.labels == RiskLabelSet{}, "unparseable answers are not negative");
    require(r.complete(), "request errors recorded");
  }

  RetryPolicy policy;
  policy.max_attempts = 4;
  policy.initial_backoff = std::chrono::milliseconds(50);
  policy.multiplier = 3.0;
  policy.max_backoff = std::chrono::milliseconds(200);
  {
    auto inner = std::make_shared<testing_support::ScriptedTransport>();
    inner->push_transport_failure();
    inner->push_transport_failure();
    inner->push_transport_failure();
    inner->push_response({{"text", "Yes"}});
    std::vector<std::chrono::milliseconds> sleeps;
    RetryingTransport rt(inner, policy, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
    require(rt.post({{"prompt", "x"}})["text"] == "Yes", "retry did not recover");
    const std::vector<std::chrono::milliseconds> expected = {std::chrono::milliseconds(50),
                                                              std::chrono::milliseconds(150),
                                                              std::chrono::milliseconds(200)};
    require(sleeps == expected, "backoff schedule differs");
    require(inner->request_count() == 4, "attempt count on recovery");
  }
  {
    auto inner = std::make_shared<testing_support::ScriptedTransport>();
    for (int i = 0; i < 10; ++i) inner->push_transport_failure();
    RetryingTransport rt(inner, policy, [](std::chrono::milliseconds) {});
    bool threw = false;
    try {
      rt.post({});
    } catch (const TransportError&) {
      threw = true;
    }
    require(threw, "exhausted retries did not raise TransportError");
    require(inner->request_count() == 4, "attempts beyond max_attempts");
  }
  {
    auto inner = std::make_shared<testing_support::ScriptedTransport>();
    inner->push([](const json&) -> json { throw ProtocolError("bad payload"); });
    RetryingTransport rt(inner, policy, [](std::chrono::milliseconds) {});
    bool threw = false;
    try {
      rt.post({});
    } catch (const ProtocolError&) {
      threw = true;
    }
    require(threw && inner->request_count() == 1, "protocol error was retried");
  }
  {
    auto inner = std::make_shared<testing_support::ScriptedTransport>();
    inner->push_transport_failure();
    inner->set_fallback([](const json&) { return json{{"text", "No"}}; });
    auto rt = std::make_shared<RetryingTransport>(inner, policy, [](std::chrono::milliseconds) {});
    GenerationClient gc(rt, 8, 2);
    const auto r = classify_with_llm(gc, testing_support::make_sample("r", "co", "News"), PromptMode::ZeroShot);
    require(r.complete() && r.unparseable == 0 && inner->request_count() == 8, "retry inside classification");
  }
}

struct Criterion {
  std::string name;
  double limit_seconds;
  std::function<void()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"lexicon_fidelity", 1.0, lexicon_fidelity},
      {"split_protocol", 5.0, split_protocol},
      {"prompt_byte_exactness", 5.0, prompt_byte_exactness},
      {"numerical_correctness", 30.0, numerical_correctness},
      {"learnability_smoke", 60.0, learnability},
      {"metric_oracle", 10.0, metric_oracle},
      {"analytics_oracles", 10.0, analytics_oracles},
      {"annotation_workflow_http", 30.0, annotation_workflow},
      {"llm_path_scripted_stub", 10.0, llm_path},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    std::string detail;
    bool ok = true;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok && elapsed >= c.limit_seconds) {
      ok = false;
      detail = "runtime limit exceeded";
    }
    std::printf("%s %s %.3fs (limit %.0fs)%s%s\n", ok ? "PASS" : "FAIL", c.name.c_str(), elapsed, c.limit_seconds,
                detail.empty() ? "" : ": ", detail.c_str());
    std::fflush(stdout);
    failed += ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
