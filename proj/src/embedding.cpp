#include "newsrisk/embedding.hpp"

#include <cmath>

#include "newsrisk/errors.hpp"

namespace newsrisk {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

HashingEmbedding::HashingEmbedding(std::shared_ptr<const Vectorizer> vectorizer, std::size_t dims)
    : vectorizer_(std::move(vectorizer)), dims_(dims) {
  if (!vectorizer_) throw ValidationError("HashingEmbedding needs a fitted vectorizer");
  if (dims_ == 0) throw ValidationError("embedding dimension must be positive");
  column_hash_.reserve(vectorizer_->dimension());
  for (std::size_t c = 0; c < vectorizer_->dimension(); ++c) {
    column_hash_.push_back(mix64(fnv1a64(vectorizer_->term(c))));
  }
}

std::vector<double> HashingEmbedding::embed_vector(const SparseVector& tfidf) const {
  std::vector<double> out(dims_, 0.0);
  for (std::size_t i = 0; i < tfidf.indices.size(); ++i) {
    const std::uint64_t h = column_hash_[tfidf.indices[i]];
    const double sign = (h >> 63) ? -1.0 : 1.0;
    out[h % dims_] += sign * tfidf.values[i];
  }
  double n = 0.0;
  for (double v : out) n += v * v;
  if (n > 0.0) {
    n = std::sqrt(n);
    for (double& v : out) v /= n;
  }
  return out;
}

std::vector<double> HashingEmbedding::embed(const Sample& sample) const {
  return embed_vector(vectorizer_->transform_text(sample.truncated_text));
}

}  // namespace newsrisk
