#include "cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "newsrisk/analytics.hpp"
#include "newsrisk/annotation_server.hpp"
#include "newsrisk/annotation_store.hpp"
#include "newsrisk/artifact.hpp"
#include "newsrisk/corpus.hpp"
#include "newsrisk/dataset.hpp"
#include "newsrisk/endpoint.hpp"
#include "newsrisk/errors.hpp"
#include "newsrisk/evaluation.hpp"
#include "newsrisk/lexicon.hpp"
#include "newsrisk/multilabel.hpp"
#include "newsrisk/prompting.hpp"

namespace newsrisk {

using nlohmann::json;

namespace {

struct Options {
  // Shared.
  std::string input;
  std::string out;

  // ingest / filter.
  std::string corpus;
  std::string gazetteer;
  std::string lexicon;
  bool inflections = false;
  std::string report;

  // annotate-serve.
  std::string data_dir;
  std::string listen = "127.0.0.1:8080";
  std::size_t calibration_count = 100;
  std::string static_dir;
  std::string enqueue;
  std::vector<std::string> annotators;

  // split.
  std::string out_dir;
  std::uint64_t split_seed = 13;
  bool no_group = false;

  // train / predict.
  std::string train;
  std::string family = "logreg";
  std::string model;
  double lambda = 1e-3;
  int epochs = 200;
  double learning_rate = 100.0;
  std::size_t k = 5;
  std::size_t min_df = 1;
  std::uint64_t seed = 42;
  std::string embedding = "hashing";
  bool remote = false;
  std::string inference_url;

  // evaluate.
  std::string predictions;
  std::string gold;
  std::string format = "table";

  // prompt-classify.
  std::string mode = "zero";
  std::size_t shots = kDefaultFewShotK;
  std::string llm_url;
  std::size_t max_in_flight = 4;
  int max_new_tokens = 8;
  int attempts = 3;
  int backoff_ms = 200;
  std::string prompts_out;

  // aggregate / crosstab.
  std::string granularity = "month";
  std::string company;
  std::string sector;
  std::size_t partitions = 1;
  std::string distribution_out;
  std::string cooccurrence_out;
  std::string industry_out;
  std::string series_out;
  std::string sentiment_table;
  std::string sentiment_url;
  std::vector<double> constant_sentiment;
};

std::shared_ptr<JsonTransport> remote_transport(const std::string& url, const Options& o) {
  if (url.empty()) throw ValidationError("endpoint URL is required");
  RetryPolicy policy;
  policy.max_attempts = o.attempts;
  policy.initial_backoff = std::chrono::milliseconds(o.backoff_ms);
  return std::make_shared<RetryingTransport>(std::make_shared<HttpTransport>(url), policy);
}

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  c.family = parse_family(o.family);
  c.linear.l2_lambda = o.lambda;
  c.linear.epochs = o.epochs;
  c.linear.learning_rate = o.learning_rate;
  c.linear.seed = o.seed;
  c.knn_k = o.k;
  c.min_df = o.min_df;
  c.seed = o.seed;
  if (o.lambda <= 0.0) throw ValidationError("--lambda must be positive");
  if (o.epochs <= 0) throw ValidationError("--epochs must be positive");
  if (o.learning_rate <= 0.0) throw ValidationError("--lr must be positive");
  if (o.k == 0) throw ValidationError("--k must be positive");
  return c;
}

json prediction_record(const Sample& s, const Prediction& p, const std::optional<std::size_t>& unparseable = {}) {
  LabeledSample ls{s, p.labels, p.scores, {}};
  json j = to_json(ls);
  if (unparseable) j["unparseable"] = *unparseable;
  return j;
}

int cmd_ingest(const Options& o) {
  const auto articles = load_corpus(o.corpus);
  const auto gazetteer = load_gazetteer(o.gazetteer);
  SampleBuildStats stats;
  const auto samples = build_samples(articles, gazetteer, &stats);

  ArtifactHeader h;
  h.command = "ingest";
  h.add_input(o.corpus);
  h.add_input(o.gazetteer);
  write_artifact(o.out, h, [&](std::ostream& out) { write_samples(out, samples); });
  std::cerr << "ingest: " << stats.articles << " articles, " << stats.samples << " samples, "
            << stats.articles_without_mentions << " articles without mentions, " << stats.dropped_supplied_mentions
            << " supplied mentions dropped\n";
  return 0;
}

int cmd_filter(const Options& o) {
  const auto articles = load_corpus(o.corpus);
  const Lexicon lexicon = o.lexicon.empty() ? default_lexicon() : load_lexicon(o.lexicon);
  const MatchOptions match{o.inflections};

  std::vector<NewsArticle> kept;
  std::ostringstream report;
  report << "article_id\tmatched\thits\theadline\n";
  for (const auto& a : articles) {
    const auto m = headline_matches(a.headline, lexicon, match);
    if (m.matched) kept.push_back(a);
    std::string hits;
    for (const auto& t : m.hits) hits += (hits.empty() ? "" : ",") + t;
    report << a.article_id << '\t' << (m.matched ? 1 : 0) << '\t' << hits << '\t' << a.headline << '\n';
  }

  ArtifactHeader h;
  h.command = "filter";
  h.config = {{"lexicon", o.lexicon.empty() ? "default" : "file"}, {"inflections", o.inflections}};
  h.add_input(o.corpus);
  if (!o.lexicon.empty()) h.add_input(o.lexicon);
  write_artifact(o.out, h, [&](std::ostream& out) { write_corpus(out, kept); });
  if (!o.report.empty()) write_artifact(o.report, h, [&](std::ostream& out) { out << report.str(); });
  std::cerr << "filter: kept " << kept.size() << " of " << articles.size() << " articles\n";
  return 0;
}

std::pair<std::string, int> parse_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw ValidationError("--listen must be host:port, got '" + listen + "'");
  try {
    std::size_t used = 0;
    const int port = std::stoi(listen.substr(colon + 1), &used);
    if (used != listen.size() - colon - 1 || port < 0 || port > 65535) throw std::out_of_range("port");
    return {listen.substr(0, colon), port};
  } catch (const std::logic_error&) {
    throw ValidationError("bad port in --listen '" + listen + "'");
  }
}

int cmd_annotate_serve(const Options& o) {
  if (o.data_dir.empty()) throw ValidationError("annotate-serve needs --data-dir or NEWSRISK_DATA_DIR");
  const auto [host, port] = parse_listen(o.listen);
  AnnotationStore store(o.data_dir);
  if (!o.enqueue.empty()) {
    std::vector<Sample> fresh;
    const auto snapshot = store.snapshot();
    for (auto& s : load_samples(o.enqueue)) {
      if (!snapshot->samples.count(s.sample_id)) fresh.push_back(std::move(s));
    }
    if (!fresh.empty()) {
      const auto assignments =
          store.enqueue(fresh, o.annotators, std::min(o.calibration_count, fresh.size()));
      std::cerr << "enqueued " << fresh.size() << " samples as " << assignments.size() << " assignments\n";
    }
  }

  // Signals are handled synchronously on this thread; the server threads
  // inherit the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  AnnotationServer server(store, {host, port, o.calibration_count, o.static_dir});
  const int bound = server.start();
  std::cout << "listening on " << host << ':' << bound << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  return 0;
}

int cmd_split(const Options& o) {
  const auto samples = load_labeled(o.input);
  SplitSpec spec;
  spec.seed = o.split_seed;
  spec.group_by_article = !o.no_group;
  const auto split = split_dataset(samples, spec);

  std::filesystem::create_directories(o.out_dir);
  ArtifactHeader h;
  h.command = "split";
  h.config = {{"seed", o.split_seed}, {"group_by_article", spec.group_by_article}};
  h.add_input(o.input);
  const std::filesystem::path dir(o.out_dir);
  write_artifact((dir / "train.jsonl").string(), h, [&](std::ostream& out) { write_labeled(out, split.train); });
  write_artifact((dir / "validation.jsonl").string(), h,
                 [&](std::ostream& out) { write_labeled(out, split.validation); });
  write_artifact((dir / "test.jsonl").string(), h, [&](std::ostream& out) { write_labeled(out, split.test); });
  std::cerr << "split: train=" << split.train.size() << " validation=" << split.validation.size()
            << " test=" << split.test.size() << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  const TrainConfig config = train_config(o);
  const auto data = load_labeled(o.train);
  std::vector<Sample> samples;
  std::vector<RiskLabelSet> gold;
  for (const auto& s : data) {
    samples.push_back(s.sample);
    gold.push_back(s.labels);
  }
  std::unique_ptr<EmbeddingProvider> embedder;
  if (config.family == ModelFamily::Knn && o.embedding == "remote") {
    embedder = std::make_unique<RemoteEmbedding>(
        std::make_shared<InferenceClient>(remote_transport(o.inference_url, o)));
  } else if (o.embedding != "hashing" && o.embedding != "remote") {
    throw ValidationError("--embedding must be 'hashing' or 'remote'");
  }
  const auto model = train_multilabel(samples, gold, config, embedder.get());

  ArtifactHeader h;
  h.command = "train";
  h.config = {{"family", family_name(config.family)}, {"lambda", o.lambda}, {"epochs", o.epochs},
              {"lr", o.learning_rate}, {"k", o.k}, {"min_df", o.min_df}, {"seed", o.seed},
              {"embedding", o.embedding}};
  h.add_input(o.train);
  write_artifact(o.out, h, [&](std::ostream& out) { model.save(out); });
  return 0;
}

int cmd_predict(const Options& o) {
  const auto data = load_labeled(o.input);
  std::vector<json> records;
  ArtifactHeader h;
  h.command = "predict";
  if (o.remote) {
    InferenceClient client(remote_transport(o.inference_url, o));
    for (const auto& s : data) records.push_back(prediction_record(s.sample, remote_classify(client, s.sample)));
    h.config = {{"remote", true}};
  } else {
    if (o.model.empty()) throw ValidationError("predict needs --model or --remote");
    std::ifstream in(o.model);
    if (!in) throw IoError("cannot open model '" + o.model + "'");
    const auto model = MultiLabelModel::load(in);
    std::unique_ptr<EmbeddingProvider> embedder;
    if (model.embedding_kind() == "external") {
      embedder = std::make_unique<RemoteEmbedding>(
          std::make_shared<InferenceClient>(remote_transport(o.inference_url, o)));
    }
    for (const auto& s : data) {
      records.push_back(prediction_record(s.sample, predict_multilabel(model, s.sample, embedder.get())));
    }
    h.config = {{"remote", false}};
    h.add_input(o.model);
  }
  h.add_input(o.input);
  write_artifact(o.out, h, [&](std::ostream& out) {
    for (const auto& r : records) out << r.dump() << '\n';
  });
  return 0;
}

int cmd_evaluate(const Options& o) {
  if (o.format != "table" && o.format != "jsonl") throw ValidationError("--format must be 'table' or 'jsonl'");
  std::map<std::string, RiskLabelSet> predicted;
  std::optional<std::size_t> unparseable;
  {
    std::ifstream in(o.predictions);
    if (!in) throw IoError("cannot open '" + o.predictions + "'");
    for_each_record(in, [&](const json& j, std::size_t line_no) {
      const auto s = labeled_from_json(j, line_no);
      if (!predicted.emplace(s.sample.sample_id, s.labels).second) {
        throw ValidationError("duplicate prediction for '" + s.sample.sample_id + "'");
      }
      if (auto it = j.find("unparseable"); it != j.end()) {
        unparseable = unparseable.value_or(0) + it->get<std::size_t>();
      }
    });
  }
  const auto gold = load_labeled(o.gold);
  std::vector<RiskLabelSet> p, g;
  for (const auto& s : gold) {
    auto it = predicted.find(s.sample.sample_id);
    if (it == predicted.end()) throw ValidationError("no prediction for gold sample '" + s.sample.sample_id + "'");
    p.push_back(it->second);
    g.push_back(s.labels);
  }
  auto report = score(p, g);
  report.unparseable = unparseable;

  ArtifactHeader h;
  h.command = "evaluate";
  h.config = {{"format", o.format}};
  h.add_input(o.predictions);
  h.add_input(o.gold);
  write_artifact(o.out, h, [&](std::ostream& out) {
    if (o.format == "table") {
      write_report_table(out, report);
    } else {
      write_report_jsonl(out, report);
    }
  });
  return 0;
}

int cmd_prompt_classify(const Options& o) {
  const PromptMode mode = parse_prompt_mode(o.mode);
  const auto data = load_labeled(o.input);
  std::unique_ptr<FewShotSelector> selector;
  if (mode == PromptMode::FewShot) {
    if (o.train.empty()) throw ValidationError("few-shot mode needs --train");
    selector = std::make_unique<FewShotSelector>(load_labeled(o.train), o.min_df);
  }

  ArtifactHeader h;
  h.command = "prompt-classify";
  h.config = {{"mode", o.mode}, {"k", o.shots}, {"max_new_tokens", o.max_new_tokens}, {"min_df", o.min_df}};
  h.add_input(o.input);
  if (selector) h.add_input(o.train);

  if (!o.prompts_out.empty()) {
    write_artifact(o.prompts_out, h, [&](std::ostream& out) {
      for (const auto& s : data) {
        for (auto f : kAllFactors) {
          json j{{"sample_id", s.sample.sample_id},
                 {"factor", code(f)},
                 {"prompt", factor_prompt(s.sample, f, mode, selector.get(), o.shots)}};
          out << j.dump() << '\n';
        }
      }
    });
    if (o.out.empty()) return 0;
  }
  if (o.out.empty()) throw ValidationError("prompt-classify needs --out or --prompts-out");

  if (o.max_in_flight == 0 || o.max_in_flight > 64) throw ValidationError("--max-in-flight must be in [1, 64]");
  GenerationClient client(remote_transport(o.llm_url, o), o.max_new_tokens, o.max_in_flight);
  std::vector<json> records;
  std::size_t failures = 0, unparseable = 0;
  for (const auto& s : data) {
    const auto result = classify_with_llm(client, s.sample, mode, selector.get(), o.shots);
    Prediction p;
    p.labels = result.labels;
    for (std::size_t f = 0; f < kNumFactors; ++f) p.scores[f] = result.labels.test(f) ? 1.0 : 0.0;
    json j = prediction_record(s.sample, p, result.unparseable);
    json answers = json::object();
    for (auto f : kAllFactors) {
      const auto& a = result.answers[index_of(f)];
      const auto& err = result.errors[index_of(f)];
      if (!err.empty()) {
        answers[code(f)] = {{"error", err}};
        ++failures;
      } else if (a) {
        answers[code(f)] = {{"raw", a->raw_text}, {"parsed", answer_text(a->parsed)}};
      }
    }
    j["answers"] = answers;
    unparseable += result.unparseable;
    records.push_back(std::move(j));
  }
  write_artifact(o.out, h, [&](std::ostream& out) {
    for (const auto& r : records) out << r.dump() << '\n';
  });
  std::cerr << "prompt-classify: " << data.size() << " samples, " << data.size() * kNumFactors << " requests, "
            << unparseable << " unparseable, " << failures << " failed\n";
  if (failures > 0) throw TransportError(std::to_string(failures) + " generation requests failed");
  return 0;
}

int cmd_aggregate(const Options& o) {
  const auto data = load_labeled(o.input);
  RiskTimeSeries proto;
  proto.granularity = parse_granularity(o.granularity);
  if (!o.company.empty()) proto.filter.company_id = o.company;
  if (!o.sector.empty()) {
    const Sector s = parse_sector(o.sector);
    if (s == Sector::Unknown) throw ValidationError("--sector must name a known sector");
    proto.filter.sector = s;
  }
  const std::size_t parts = std::max<std::size_t>(1, o.partitions);
  const auto series = aggregate_partitioned(data, parts, proto);

  ArtifactHeader h;
  h.command = "aggregate";
  h.config = {{"granularity", o.granularity}, {"company", o.company}, {"sector", o.sector}};
  h.add_input(o.input);
  write_artifact(o.out, h, [&](std::ostream& out) { write_plot_data(out, series); });
  if (!o.series_out.empty()) {
    write_artifact(o.series_out, h, [&](std::ostream& out) { write_timeseries_jsonl(out, series); });
  }
  if (!o.distribution_out.empty()) {
    const auto d = aggregate_partitioned(data, parts, LabelDistribution{});
    write_artifact(o.distribution_out, h, [&](std::ostream& out) { write_label_distribution(out, d); });
  }
  if (!o.cooccurrence_out.empty()) {
    const auto m = aggregate_partitioned(data, parts, CooccurrenceMatrix{});
    write_artifact(o.cooccurrence_out, h, [&](std::ostream& out) { write_cooccurrence(out, m); });
  }
  if (!o.industry_out.empty()) {
    const auto d = aggregate_partitioned(data, parts, IndustryDistribution{});
    write_artifact(o.industry_out, h, [&](std::ostream& out) { write_industry(out, d); });
  }
  return 0;
}

int cmd_crosstab(const Options& o) {
  const auto data = load_labeled(o.input);
  ArtifactHeader h;
  h.command = "crosstab";
  h.add_input(o.input);
  std::unique_ptr<SentimentProvider> provider;
  std::string sentiment_url = o.sentiment_url;
  if (sentiment_url.empty() && o.sentiment_table.empty() && o.constant_sentiment.empty()) {
    if (const char* env = std::getenv("NEWSRISK_SENTIMENT_URL")) sentiment_url = env;
  }
  const int chosen = !o.sentiment_table.empty() + !sentiment_url.empty() + !o.constant_sentiment.empty();
  if (chosen != 1) throw ValidationError("choose exactly one of --sentiment-table, --sentiment-url, --constant");
  if (!o.sentiment_table.empty()) {
    provider = std::make_unique<TableSentiment>(TableSentiment::load(o.sentiment_table));
    h.config = {{"provider", "table"}};
    h.add_input(o.sentiment_table);
  } else if (!sentiment_url.empty()) {
    provider = std::make_unique<RemoteSentiment>(remote_transport(sentiment_url, o));
    h.config = {{"provider", "remote"}};
  } else {
    if (o.constant_sentiment.size() != 3) throw ValidationError("--constant needs three values");
    const SentimentTriple t{o.constant_sentiment[0], o.constant_sentiment[1], o.constant_sentiment[2]};
    if (!t.valid()) throw ValidationError("--constant must be a probability triple");
    provider = std::make_unique<ConstantSentiment>(t);
    h.config = {{"provider", "constant"}, {"triple", o.constant_sentiment}};
  }
  const auto crosstab = sentiment_crosstab(data, *provider);
  write_artifact(o.out, h, [&](std::ostream& out) { write_crosstab(out, crosstab); });
  return 0;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const TransportError*>(&e) ||
      dynamic_cast<const ProtocolError*>(&e)) {
    return kExitIo;
  }
  return kExitValidation;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  Options o;
  CLI::App app{"Company risk-factor extraction from financial news"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  auto* ingest = app.add_subcommand("ingest", "Truncate articles and build (article, company) samples");
  ingest->add_option("--corpus", o.corpus, "Articles JSONL")->required();
  ingest->add_option("--gazetteer", o.gazetteer, "Companies JSONL")->required();
  ingest->add_option("--out", o.out, "Samples JSONL")->required();

  auto* filter = app.add_subcommand("filter", "Keep articles whose headline hits the lexicon");
  filter->add_option("--corpus", o.corpus, "Articles JSONL")->required();
  filter->add_option("--lexicon", o.lexicon, "One term per line (default: built-in 53 terms)");
  filter->add_flag("--inflections", o.inflections, "Also match -s, -es, -ed, -ing forms");
  filter->add_option("--out", o.out, "Filtered articles JSONL")->required();
  filter->add_option("--report", o.report, "Per-headline match report");

  auto* serve = app.add_subcommand("annotate-serve", "Run the annotation HTTP service");
  serve->add_option("--data-dir", o.data_dir, "Store directory")->envname("NEWSRISK_DATA_DIR");
  serve->add_option("--listen", o.listen, "host:port (port 0 = ephemeral)")->envname("NEWSRISK_LISTEN");
  serve->add_option("--calibration-count", o.calibration_count, "Samples labeled by every annotator");
  serve->add_option("--static-dir", o.static_dir, "Directory served at /");
  serve->add_option("--enqueue", o.enqueue, "Samples JSONL to enqueue at startup");
  serve->add_option("--annotators", o.annotators, "Annotator ids for --enqueue")->delimiter(',');

  auto* split = app.add_subcommand("split", "Seeded train/validation/test split");
  split->add_option("--input", o.input, "Labeled JSONL")->required();
  split->add_option("--out-dir", o.out_dir, "Output directory")->required();
  split->add_option("--seed", o.split_seed, "Shuffle seed");
  split->add_flag("--no-group", o.no_group, "Split samples of one article independently");

  auto add_endpoint_options = [&](CLI::App* sub) {
    sub->add_option("--attempts", o.attempts, "Attempts per request")->check(CLI::Range(1, 100));
    sub->add_option("--backoff-ms", o.backoff_ms, "Initial retry backoff")->check(CLI::Range(0, 600000));
  };

  auto* train = app.add_subcommand("train", "Train a multi-label model");
  train->add_option("--train", o.train, "Labeled JSONL")->required();
  train->add_option("--family", o.family, "random | logreg | svm | knn");
  train->add_option("--out", o.out, "Model file")->required();
  train->add_option("--lambda", o.lambda, "L2 strength");
  train->add_option("--epochs", o.epochs, "Training epochs");
  train->add_option("--lr", o.learning_rate, "Logistic learning rate");
  train->add_option("--k", o.k, "KNN neighbors");
  train->add_option("--min-df", o.min_df, "Minimum document frequency");
  train->add_option("--seed", o.seed, "Training seed");
  train->add_option("--embedding", o.embedding, "KNN embedding: hashing | remote");
  train->add_option("--inference-url", o.inference_url, "Inference endpoint")->envname("NEWSRISK_INFERENCE_URL");
  add_endpoint_options(train);

  auto* predict = app.add_subcommand("predict", "Predict labels with a model or the inference endpoint");
  predict->add_option("--model", o.model, "Model file");
  predict->add_flag("--remote", o.remote, "Use the inference endpoint instead of a model");
  predict->add_option("--input", o.input, "Samples JSONL")->required();
  predict->add_option("--out", o.out, "Predictions JSONL")->required();
  predict->add_option("--inference-url", o.inference_url, "Inference endpoint")->envname("NEWSRISK_INFERENCE_URL");
  add_endpoint_options(predict);

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold labels");
  evaluate->add_option("--predictions", o.predictions, "Predictions JSONL")->required();
  evaluate->add_option("--gold", o.gold, "Gold JSONL")->required();
  evaluate->add_option("--out", o.out, "Report file")->required();
  evaluate->add_option("--format", o.format, "table | jsonl");

  auto* prompt = app.add_subcommand("prompt-classify", "Classify with a text-generation endpoint");
  prompt->add_option("--input", o.input, "Samples JSONL")->required();
  prompt->add_option("--out", o.out, "Predictions JSONL");
  prompt->add_option("--mode", o.mode, "zero | few");
  prompt->add_option("--train", o.train, "Labeled JSONL for few-shot demonstrations");
  prompt->add_option("--shots", o.shots, "Demonstrations per prompt")->check(CLI::PositiveNumber);
  prompt->add_option("--min-df", o.min_df, "Minimum document frequency for neighbor search");
  prompt->add_option("--llm-url", o.llm_url, "Generation endpoint")->envname("NEWSRISK_LLM_URL");
  prompt->add_option("--max-in-flight", o.max_in_flight, "Concurrent requests per sample");
  prompt->add_option("--max-new-tokens", o.max_new_tokens, "Generation length")->check(CLI::PositiveNumber);
  prompt->add_option("--prompts-out", o.prompts_out, "Write rendered prompts");
  add_endpoint_options(prompt);

  auto* aggregate = app.add_subcommand("aggregate", "Risk statistics and time series");
  aggregate->add_option("--input", o.input, "Labeled or predicted JSONL")->required();
  aggregate->add_option("--granularity", o.granularity, "month | year");
  aggregate->add_option("--company", o.company, "Restrict the series to one company id");
  aggregate->add_option("--sector", o.sector, "Restrict the series to one sector");
  aggregate->add_option("--partitions", o.partitions, "Parallel partitions");
  aggregate->add_option("--out", o.out, "Plot data CSV (period,factor,count,share)")->required();
  aggregate->add_option("--series-out", o.series_out, "Time series JSONL");
  aggregate->add_option("--distribution-out", o.distribution_out, "Label distribution table");
  aggregate->add_option("--cooccurrence-out", o.cooccurrence_out, "Co-occurrence matrix");
  aggregate->add_option("--industry-out", o.industry_out, "Per-sector distribution");

  auto* crosstab = app.add_subcommand("crosstab", "Mean sentiment per risk factor");
  crosstab->add_option("--input", o.input, "Labeled or predicted JSONL")->required();
  crosstab->add_option("--out", o.out, "Crosstab table")->required();
  crosstab->add_option("--sentiment-table", o.sentiment_table, "JSONL of {sample_id, positive, neutral, negative}");
  crosstab->add_option("--sentiment-url", o.sentiment_url, "Sentiment endpoint (fallback: NEWSRISK_SENTIMENT_URL)");
  crosstab->add_option("--constant", o.constant_sentiment, "Fixed triple")->expected(3)->delimiter(',');
  add_endpoint_options(crosstab);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitValidation;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(o);
    if (filter->parsed()) return cmd_filter(o);
    if (serve->parsed()) return cmd_annotate_serve(o);
    if (split->parsed()) return cmd_split(o);
    if (train->parsed()) return cmd_train(o);
    if (predict->parsed()) return cmd_predict(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (prompt->parsed()) return cmd_prompt_classify(o);
    if (aggregate->parsed()) return cmd_aggregate(o);
    if (crosstab->parsed()) return cmd_crosstab(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitValidation;
}

}  // namespace newsrisk
