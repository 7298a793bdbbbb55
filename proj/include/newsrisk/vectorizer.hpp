#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "newsrisk/sparse.hpp"

namespace newsrisk {

using TokenList = std::vector<std::string>;

/// Unigrams followed by bigrams ("a b", single-space join) of a token stream.
std::vector<std::string> ngrams(const TokenList& tokens, std::size_t ngram_max = 2);

/// TF-IDF featurizer over unigrams and bigrams. Immutable once fitted.
///
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1, raw counts for term frequency,
/// L2-normalized rows. Columns are assigned in lexicographic n-gram order,
/// so the column layout depends only on the fitted vocabulary.
class Vectorizer {
 public:
  static constexpr int kFormatVersion = 1;

  /// Throws TrainingError on an empty corpus or min_df < 1.
  static Vectorizer fit(const std::vector<TokenList>& docs, std::size_t min_df = 1);

  SparseVector transform(const TokenList& doc) const;
  /// tokenize + transform.
  SparseVector transform_text(std::string_view text) const;

  std::size_t dimension() const { return terms_.size(); }
  std::size_t num_docs() const { return num_docs_; }
  std::size_t min_df() const { return min_df_; }
  std::size_t ngram_max() const { return ngram_max_; }

  std::optional<std::size_t> column(const std::string& ngram) const;
  const std::string& term(std::size_t column) const { return terms_[column]; }
  double idf(std::size_t column) const { return idf_[column]; }
  std::size_t df(std::size_t column) const { return df_[column]; }

  /// Versioned flat text: "vectorizer <version> <V> <N> <min_df> <ngram_max>",
  /// then one "<ngram>\t<df>\t<idf>" line per column.
  void save(std::ostream& out) const;
  static Vectorizer load(std::istream& in);

  friend bool operator==(const Vectorizer& a, const Vectorizer& b) {
    return a.terms_ == b.terms_ && a.df_ == b.df_ && a.idf_ == b.idf_ &&
           a.num_docs_ == b.num_docs_ && a.min_df_ == b.min_df_;
  }

 private:
  void rebuild_index();

  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t num_docs_ = 0;
  std::size_t min_df_ = 1;
  std::size_t ngram_max_ = 2;
};

}  // namespace newsrisk
