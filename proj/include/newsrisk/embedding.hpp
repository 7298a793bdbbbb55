#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "newsrisk/corpus.hpp"
#include "newsrisk/endpoint.hpp"
#include "newsrisk/vectorizer.hpp"

namespace newsrisk {

/// 64-bit FNV-1a; stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view data);
/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Produces document embeddings for the KNN classifier.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<double> embed(const Sample& sample) const = 0;
  virtual std::string name() const = 0;
};

/// Signed feature hashing of a sample's TF-IDF vector into `dims` buckets,
/// L2-normalized.
class HashingEmbedding : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDims = 1024;

  explicit HashingEmbedding(std::shared_ptr<const Vectorizer> vectorizer, std::size_t dims = kDefaultDims);
  std::vector<double> embed(const Sample& sample) const override;
  std::vector<double> embed_vector(const SparseVector& tfidf) const;
  std::string name() const override { return "hashing"; }
  std::size_t dims() const { return dims_; }

 private:
  std::shared_ptr<const Vectorizer> vectorizer_;
  std::size_t dims_;
  std::vector<std::uint64_t> column_hash_;
};

/// Embeddings from the inference endpoint ("embed" task).
class RemoteEmbedding : public EmbeddingProvider {
 public:
  explicit RemoteEmbedding(std::shared_ptr<InferenceClient> client) : client_(std::move(client)) {}
  std::vector<double> embed(const Sample& sample) const override {
    return client_->embed(sample.truncated_text, sample.company_name);
  }
  std::string name() const override { return "remote"; }

 private:
  std::shared_ptr<InferenceClient> client_;
};

}  // namespace newsrisk
