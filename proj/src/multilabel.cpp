#include "newsrisk/multilabel.hpp"

#include <future>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "newsrisk/errors.hpp"

namespace newsrisk {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool random_flag(std::uint64_t seed, const std::string& sample_id, std::size_t factor) {
  const std::uint64_t h = mix64(seed ^ mix64(fnv1a64(sample_id) + factor));
  return (h >> 63) != 0;
}

std::string next_content_line(std::istream& in, const char* what) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() != '#') return line;
  }
  throw ParseError(std::string("model file ended before ") + what);
}

}  // namespace

std::vector<RiskLabelSet> random_predict(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<RiskLabelSet> out(n);
  for (auto& labels : out) {
    for (std::size_t f = 0; f < kNumFactors; ++f) labels.set(f, (rng() >> 63) != 0);
  }
  return out;
}

std::string_view family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::Random:
      return "random";
    case ModelFamily::Logistic:
      return "logreg";
    case ModelFamily::Svm:
      return "svm";
    case ModelFamily::Knn:
      return "knn";
  }
  return "unknown";
}

ModelFamily parse_family(std::string_view name) {
  if (name == "random") return ModelFamily::Random;
  if (name == "logreg" || name == "logistic") return ModelFamily::Logistic;
  if (name == "svm") return ModelFamily::Svm;
  if (name == "knn") return ModelFamily::Knn;
  throw ValidationError("unknown model family '" + std::string(name) + "'");
}

MultiLabelModel train_multilabel(const std::vector<Sample>& samples, const std::vector<RiskLabelSet>& gold,
                                 const TrainConfig& config, const EmbeddingProvider* embedder) {
  if (samples.empty()) throw TrainingError("training set is empty");
  if (samples.size() != gold.size()) throw ValidationError("gold labels are not aligned with samples");

  MultiLabelModel model;
  model.family_ = config.family;
  model.config_ = config;
  model.config_.linear.seed = config.seed;

  if (config.family == ModelFamily::Random) {
    for (auto& m : model.models_) m = RandomPredictor{config.seed};
    model.thresholds_.fill(0.5);
    return model;
  }

  std::vector<TokenList> docs;
  docs.reserve(samples.size());
  for (const auto& s : samples) docs.push_back(tokenize(s.truncated_text));
  model.vectorizer_ = std::make_shared<const Vectorizer>(Vectorizer::fit(docs, config.min_df));

  std::array<std::vector<bool>, kNumFactors> columns;
  std::array<bool, kNumFactors> single_class{};
  for (std::size_t f = 0; f < kNumFactors; ++f) {
    columns[f].reserve(gold.size());
    std::size_t positives = 0;
    for (const auto& g : gold) {
      columns[f].push_back(g.test(f));
      positives += g.test(f) ? 1 : 0;
    }
    single_class[f] = positives == 0 || positives == gold.size();
    if (single_class[f]) model.models_[f] = ConstantPredictor{positives == gold.size()};
  }

  if (config.family == ModelFamily::Knn) {
    model.thresholds_.fill(0.5);
    if (embedder) {
      model.embedding_kind_ = "external";
    } else {
      model.hashing_ = std::make_shared<const HashingEmbedding>(model.vectorizer_);
      embedder = model.hashing_.get();
    }
    std::vector<std::vector<double>> embeddings;
    embeddings.reserve(samples.size());
    for (const auto& s : samples) embeddings.push_back(embedder->embed(s));
    const std::size_t k = std::min(config.knn_k, samples.size());
    auto index = std::make_shared<KnnIndex>(k, embeddings.front().size());
    for (std::size_t i = 0; i < samples.size(); ++i) index->add(std::move(embeddings[i]), gold[i]);
    model.knn_ = std::move(index);
    for (std::size_t f = 0; f < kNumFactors; ++f) {
      if (!single_class[f]) model.models_[f] = KnnVote{};
    }
    return model;
  }

  const LinearKind kind = config.family == ModelFamily::Svm ? LinearKind::Hinge : LinearKind::Logistic;
  model.thresholds_.fill(default_threshold(kind));
  std::vector<SparseVector> X;
  X.reserve(docs.size());
  for (const auto& d : docs) X.push_back(model.vectorizer_->transform(d));

  auto fit_one = [&](std::size_t f) {
    return kind == LinearKind::Hinge ? train_svm(X, columns[f], model.config_.linear)
                                     : train_logistic(X, columns[f], model.config_.linear);
  };
  if (config.parallel) {
    std::array<std::future<LinearModel>, kNumFactors> pending;
    for (std::size_t f = 0; f < kNumFactors; ++f) {
      if (!single_class[f]) pending[f] = std::async(std::launch::async, fit_one, f);
    }
    for (std::size_t f = 0; f < kNumFactors; ++f) {
      if (!single_class[f]) model.models_[f] = pending[f].get();
    }
  } else {
    for (std::size_t f = 0; f < kNumFactors; ++f) {
      if (!single_class[f]) model.models_[f] = fit_one(f);
    }
  }
  return model;
}

Prediction MultiLabelModel::predict(const Sample& sample, const EmbeddingProvider* embedder) const {
  std::optional<SparseVector> features;
  std::optional<FactorScores> votes;
  Prediction out;
  for (std::size_t f = 0; f < kNumFactors; ++f) {
    std::visit(Overloaded{
                   [&](const ConstantPredictor& c) {
                     out.labels.set(f, c.label);
                     out.scores[f] = c.label ? 1.0 : 0.0;
                   },
                   [&](const RandomPredictor& r) {
                     const bool flag = random_flag(r.seed, sample.sample_id, f);
                     out.labels.set(f, flag);
                     out.scores[f] = flag ? 1.0 : 0.0;
                   },
                   [&](const LinearModel& m) {
                     if (!vectorizer_) throw PreconditionError("linear sub-model without a vectorizer");
                     if (!features) features = vectorizer_->transform_text(sample.truncated_text);
                     const auto p = predict_linear(m, *features, thresholds_[f]);
                     out.labels.set(f, p.label);
                     out.scores[f] = p.score;
                   },
                   [&](const KnnVote&) {
                     if (!knn_) throw PreconditionError("KNN sub-model without an index");
                     if (!votes) {
                       const EmbeddingProvider* provider = embedder ? embedder : hashing_.get();
                       if (!provider) {
                         throw PreconditionError("this KNN model needs an external embedding provider");
                       }
                       votes = knn_->vote_shares(provider->embed(sample));
                     }
                     out.scores[f] = (*votes)[f];
                     // Strict majority: split votes resolve to negative.
                     out.labels.set(f, (*votes)[f] > 0.5);
                   },
               },
               models_[f]);
  }
  return out;
}

Prediction predict_multilabel(const MultiLabelModel& model, const Sample& sample,
                              const EmbeddingProvider* embedder) {
  return model.predict(sample, embedder);
}

void MultiLabelModel::save(std::ostream& out) const {
  std::ostringstream s;
  s.precision(17);
  s << "newsrisk-model " << kFormatVersion << '\n';
  s << "family " << family_name(family_) << '\n';
  s << "config " << config_.seed << ' ' << config_.min_df << ' ' << config_.knn_k << ' '
    << config_.linear.l2_lambda << ' ' << config_.linear.epochs << ' ' << config_.linear.learning_rate << '\n';
  s << "thresholds";
  for (double t : thresholds_) s << ' ' << t;
  s << '\n';
  s << "embedding " << embedding_kind_ << '\n';
  out << s.str();
  if (vectorizer_) {
    vectorizer_->save(out);
  } else {
    out << "vectorizer none\n";
  }
  for (std::size_t f = 0; f < kNumFactors; ++f) {
    out << "factor " << f << ' ';
    std::visit(Overloaded{
                   [&](const ConstantPredictor& c) { out << "constant " << (c.label ? 1 : 0) << '\n'; },
                   [&](const RandomPredictor& r) { out << "random " << r.seed << '\n'; },
                   [&](const LinearModel& m) {
                     out << "linear\n";
                     m.save(out);
                   },
                   [&](const KnnVote&) { out << "knn\n"; },
               },
               models_[f]);
  }
  if (knn_) {
    knn_->save(out);
  } else {
    out << "knn-index none\n";
  }
}

MultiLabelModel MultiLabelModel::load(std::istream& in) {
  MultiLabelModel m;
  {
    std::istringstream header(next_content_line(in, "header"));
    std::string magic;
    int version = 0;
    header >> magic >> version;
    if (magic != "newsrisk-model" || version != kFormatVersion) throw ParseError("not a newsrisk model file");
  }
  {
    std::istringstream line(next_content_line(in, "family"));
    std::string key, family;
    line >> key >> family;
    if (key != "family") throw ParseError("expected 'family' line");
    try {
      m.family_ = parse_family(family);
    } catch (const ValidationError& e) {
      throw ParseError(e.what());
    }
    m.config_.family = m.family_;
  }
  {
    std::istringstream line(next_content_line(in, "config"));
    std::string key;
    line >> key >> m.config_.seed >> m.config_.min_df >> m.config_.knn_k >> m.config_.linear.l2_lambda >>
        m.config_.linear.epochs >> m.config_.linear.learning_rate;
    if (!line || key != "config") throw ParseError("bad 'config' line");
    m.config_.linear.seed = m.config_.seed;
  }
  {
    std::istringstream line(next_content_line(in, "thresholds"));
    std::string key;
    line >> key;
    for (double& t : m.thresholds_) line >> t;
    if (!line || key != "thresholds") throw ParseError("bad 'thresholds' line");
  }
  {
    std::istringstream line(next_content_line(in, "embedding"));
    std::string key;
    line >> key >> m.embedding_kind_;
    if (key != "embedding" || (m.embedding_kind_ != "hashing" && m.embedding_kind_ != "external")) {
      throw ParseError("bad 'embedding' line");
    }
  }
  {
    const auto pos = in.tellg();
    std::string line;
    std::getline(in, line);
    if (line != "vectorizer none") {
      in.seekg(pos);
      m.vectorizer_ = std::make_shared<const Vectorizer>(Vectorizer::load(in));
    }
  }
  for (std::size_t f = 0; f < kNumFactors; ++f) {
    std::istringstream line(next_content_line(in, "factor models"));
    std::string key, kind;
    std::size_t index = 0;
    line >> key >> index >> kind;
    if (key != "factor" || index != f) throw ParseError("expected sub-model for factor " + std::to_string(f));
    if (kind == "constant") {
      int label = 0;
      line >> label;
      m.models_[f] = ConstantPredictor{label != 0};
    } else if (kind == "random") {
      std::uint64_t seed = 0;
      line >> seed;
      m.models_[f] = RandomPredictor{seed};
    } else if (kind == "linear") {
      auto lm = LinearModel::load(in);
      if (!m.vectorizer_ || lm.dimension() != m.vectorizer_->dimension()) {
        throw ParseError("linear sub-model dimension does not match the vectorizer");
      }
      m.models_[f] = std::move(lm);
    } else if (kind == "knn") {
      m.models_[f] = KnnVote{};
    } else {
      throw ParseError("unknown sub-model kind '" + kind + "'");
    }
  }
  {
    const auto pos = in.tellg();
    std::string line;
    std::getline(in, line);
    if (line != "knn-index none") {
      in.seekg(pos);
      m.knn_ = std::make_shared<const KnnIndex>(KnnIndex::load(in));
    }
  }
  if (m.family_ == ModelFamily::Knn && m.embedding_kind_ == "hashing" && m.vectorizer_) {
    m.hashing_ = std::make_shared<const HashingEmbedding>(m.vectorizer_);
  }
  return m;
}

}  // namespace newsrisk
