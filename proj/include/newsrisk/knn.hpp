#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "newsrisk/dataset.hpp"
#include "newsrisk/risk_factor.hpp"

namespace newsrisk {

/// Cosine similarity; 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Stored (embedding, labels) pairs searched by cosine similarity.
class KnnIndex {
 public:
  struct Neighbor {
    std::size_t index;
    double similarity;
  };

  /// Throws ValidationError when k or dim is zero.
  KnnIndex(std::size_t k, std::size_t dim);

  /// Throws DimensionError on a dimension mismatch.
  void add(std::vector<double> embedding, RiskLabelSet labels);

  std::size_t k() const { return k_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return labels_.size(); }
  const std::vector<double>& embedding(std::size_t i) const { return embeddings_[i]; }
  const RiskLabelSet& labels(std::size_t i) const { return labels_[i]; }

  /// The k most similar stored points, most similar first; equal
  /// similarities are ordered by lower stored index.
  /// Throws PreconditionError when the index holds fewer than k points.
  std::vector<Neighbor> nearest(std::span<const double> query) const;

  /// Per-factor share of the k neighbors that are positive.
  FactorScores vote_shares(std::span<const double> query) const;

  void save(std::ostream& out) const;
  static KnnIndex load(std::istream& in);

 private:
  std::size_t k_;
  std::size_t dim_;
  std::vector<std::vector<double>> embeddings_;
  std::vector<double> norms_;
  std::vector<RiskLabelSet> labels_;
};

/// Per-factor strict majority over the k nearest neighbors; split votes are negative.
RiskLabelSet knn_predict(const KnnIndex& index, std::span<const double> query);

}  // namespace newsrisk
