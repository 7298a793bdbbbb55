#include "newsrisk/knn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "newsrisk/errors.hpp"

namespace newsrisk {

namespace {

double l2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine similarity of vectors with different dimensions");
  const double na = l2(a), nb = l2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot / (na * nb);
}

KnnIndex::KnnIndex(std::size_t k, std::size_t dim) : k_(k), dim_(dim) {
  if (k == 0) throw ValidationError("k must be positive");
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
}

void KnnIndex::add(std::vector<double> embedding, RiskLabelSet labels) {
  if (embedding.size() != dim_) {
    throw DimensionError("embedding has dimension " + std::to_string(embedding.size()) + ", index expects " +
                         std::to_string(dim_));
  }
  norms_.push_back(l2(embedding));
  embeddings_.push_back(std::move(embedding));
  labels_.push_back(labels);
}

std::vector<KnnIndex::Neighbor> KnnIndex::nearest(std::span<const double> query) const {
  if (query.size() != dim_) {
    throw DimensionError("query has dimension " + std::to_string(query.size()) + ", index expects " +
                         std::to_string(dim_));
  }
  if (size() < k_) {
    throw PreconditionError("index holds " + std::to_string(size()) + " points, fewer than k=" +
                            std::to_string(k_));
  }
  const double qn = l2(query);
  std::vector<Neighbor> all(size());
  for (std::size_t i = 0; i < size(); ++i) {
    double sim = 0.0;
    if (qn > 0.0 && norms_[i] > 0.0) {
      const auto& e = embeddings_[i];
      double dot = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) dot += query[d] * e[d];
      sim = dot / (qn * norms_[i]);
    }
    all[i] = {i, sim};
  }
  auto closer = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.index < b.index;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k_), all.end(), closer);
  all.resize(k_);
  return all;
}

FactorScores KnnIndex::vote_shares(std::span<const double> query) const {
  FactorScores shares{};
  const auto neighbors = nearest(query);
  for (const auto& n : neighbors) {
    for (std::size_t f = 0; f < kNumFactors; ++f) {
      if (labels_[n.index].test(f)) shares[f] += 1.0;
    }
  }
  for (double& s : shares) s /= static_cast<double>(neighbors.size());
  return shares;
}

RiskLabelSet knn_predict(const KnnIndex& index, std::span<const double> query) {
  const auto neighbors = index.nearest(query);
  RiskLabelSet out;
  for (std::size_t f = 0; f < kNumFactors; ++f) {
    std::size_t positive = 0;
    for (const auto& n : neighbors) positive += index.labels(n.index).test(f) ? 1 : 0;
    out.set(f, 2 * positive > neighbors.size());
  }
  return out;
}

void KnnIndex::save(std::ostream& out) const {
  std::ostringstream s;
  s.precision(17);
  s << "knn-index 1 " << size() << ' ' << dim_ << ' ' << k_ << '\n';
  for (std::size_t i = 0; i < size(); ++i) {
    s << labels_[i].to_bitstring();
    for (double v : embeddings_[i]) s << ' ' << v;
    s << '\n';
  }
  out << s.str();
}

KnnIndex KnnIndex::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing knn index header");
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  std::size_t n = 0, dim = 0, k = 0;
  header >> magic >> version >> n >> dim >> k;
  if (!header || magic != "knn-index" || version != 1) throw ParseError("bad knn index header '" + line + "'");
  KnnIndex index(k, dim);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw ParseError("knn index truncated at row " + std::to_string(i));
    std::istringstream row(line);
    std::string bits;
    row >> bits;
    std::vector<double> e(dim);
    for (auto& v : e) {
      if (!(row >> v)) throw ParseError("bad knn index row " + std::to_string(i));
    }
    index.add(std::move(e), RiskLabelSet::from_bitstring(bits));
  }
  return index;
}

}  // namespace newsrisk
