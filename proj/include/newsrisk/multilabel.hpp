#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "newsrisk/corpus.hpp"
#include "newsrisk/embedding.hpp"
#include "newsrisk/endpoint.hpp"
#include "newsrisk/knn.hpp"
#include "newsrisk/linear_model.hpp"
#include "newsrisk/risk_factor.hpp"
#include "newsrisk/vectorizer.hpp"

namespace newsrisk {

/// Seven-flag fair-coin baseline: 7 * n independent draws from one seeded generator.
std::vector<RiskLabelSet> random_predict(std::uint64_t seed, std::size_t n);

enum class ModelFamily { Random, Logistic, Svm, Knn };

std::string_view family_name(ModelFamily f);
/// Accepts random, logreg (or logistic), svm, knn. Throws ValidationError.
ModelFamily parse_family(std::string_view name);

struct TrainConfig {
  ModelFamily family = ModelFamily::Logistic;
  LinearHyper linear;
  std::size_t knn_k = 5;
  std::size_t min_df = 1;
  std::uint64_t seed = 42;
  /// Train the seven sub-models concurrently.
  bool parallel = true;
};

/// Sub-model for a factor whose training labels hold a single class.
struct ConstantPredictor {
  bool label = false;
  friend bool operator==(const ConstantPredictor&, const ConstantPredictor&) = default;
};

/// Fair coin keyed on (seed, sample_id, factor).
struct RandomPredictor {
  std::uint64_t seed = 0;
  friend bool operator==(const RandomPredictor&, const RandomPredictor&) = default;
};

/// Majority vote over the model's shared KNN index for one factor.
struct KnnVote {
  friend bool operator==(const KnnVote&, const KnnVote&) = default;
};

using FactorModel = std::variant<ConstantPredictor, RandomPredictor, LinearModel, KnnVote>;

/// Seven independent binary sub-models sharing one read-only vectorizer.
class MultiLabelModel {
 public:
  static constexpr int kFormatVersion = 1;

  ModelFamily family() const { return family_; }
  const TrainConfig& config() const { return config_; }

  /// Null for the random family.
  const Vectorizer* vectorizer() const { return vectorizer_.get(); }
  const KnnIndex* knn_index() const { return knn_.get(); }
  /// "hashing" (built-in projection) or "external" (caller supplies a provider).
  const std::string& embedding_kind() const { return embedding_kind_; }

  const FactorModel& factor_model(RiskFactor f) const { return models_[index_of(f)]; }
  void set_factor_model(RiskFactor f, FactorModel model) { models_[index_of(f)] = std::move(model); }

  double threshold(RiskFactor f) const { return thresholds_[index_of(f)]; }
  void set_threshold(RiskFactor f, double t) { thresholds_[index_of(f)] = t; }

  /// Per-factor prediction. KNN models with external embeddings need `embedder`.
  Prediction predict(const Sample& sample, const EmbeddingProvider* embedder = nullptr) const;

  void save(std::ostream& out) const;
  static MultiLabelModel load(std::istream& in);

 private:
  friend MultiLabelModel train_multilabel(const std::vector<Sample>&, const std::vector<RiskLabelSet>&,
                                          const TrainConfig&, const EmbeddingProvider*);

  ModelFamily family_ = ModelFamily::Logistic;
  TrainConfig config_;
  std::shared_ptr<const Vectorizer> vectorizer_;
  std::shared_ptr<const KnnIndex> knn_;
  std::shared_ptr<const HashingEmbedding> hashing_;
  std::string embedding_kind_ = "hashing";
  std::array<FactorModel, kNumFactors> models_;
  std::array<double, kNumFactors> thresholds_{};
};

/// Fits the vectorizer on the training texts, then one sub-model per factor.
/// Factors whose gold column is single-class get a ConstantPredictor.
/// Throws TrainingError on an empty training set.
MultiLabelModel train_multilabel(const std::vector<Sample>& samples, const std::vector<RiskLabelSet>& gold,
                                 const TrainConfig& config, const EmbeddingProvider* embedder = nullptr);

Prediction predict_multilabel(const MultiLabelModel& model, const Sample& sample,
                              const EmbeddingProvider* embedder = nullptr);

}  // namespace newsrisk
