#include "newsrisk/vectorizer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "newsrisk/corpus.hpp"
#include "newsrisk/errors.hpp"

namespace newsrisk {

std::vector<std::string> ngrams(const TokenList& tokens, std::size_t ngram_max) {
  std::vector<std::string> out(tokens.begin(), tokens.end());
  if (ngram_max >= 2) {
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      out.push_back(tokens[i] + ' ' + tokens[i + 1]);
    }
  }
  return out;
}

Vectorizer Vectorizer::fit(const std::vector<TokenList>& docs, std::size_t min_df) {
  if (docs.empty()) throw TrainingError("cannot fit a vectorizer on an empty corpus");
  if (min_df < 1) throw TrainingError("min_df must be at least 1");

  std::map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    auto grams = ngrams(doc);
    std::sort(grams.begin(), grams.end());
    grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
    for (auto& g : grams) ++df[std::move(g)];
  }

  Vectorizer v;
  v.num_docs_ = docs.size();
  v.min_df_ = min_df;
  const double n = static_cast<double>(docs.size());
  for (auto& [term, count] : df) {
    if (count < min_df) continue;
    v.terms_.push_back(term);
    v.df_.push_back(count);
    v.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  v.rebuild_index();
  return v;
}

void Vectorizer::rebuild_index() {
  index_.clear();
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], i);
}

std::optional<std::size_t> Vectorizer::column(const std::string& ngram) const {
  auto it = index_.find(ngram);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SparseVector Vectorizer::transform(const TokenList& doc) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& g : ngrams(doc, ngram_max_)) {
    if (auto it = index_.find(g); it != index_.end()) counts[static_cast<std::uint32_t>(it->second)] += 1.0;
  }
  SparseVector out;
  out.dim = terms_.size();
  out.indices.reserve(counts.size());
  out.values.reserve(counts.size());
  for (const auto& [col, count] : counts) {
    out.indices.push_back(col);
    out.values.push_back(count * idf_[col]);
  }
  out.normalize();
  return out;
}

SparseVector Vectorizer::transform_text(std::string_view text) const { return transform(tokenize(text)); }

void Vectorizer::save(std::ostream& out) const {
  out << "vectorizer " << kFormatVersion << ' ' << terms_.size() << ' ' << num_docs_ << ' '
      << min_df_ << ' ' << ngram_max_ << '\n';
  std::ostringstream line;
  line.precision(17);
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    line.str({});
    line << terms_[i] << '\t' << df_[i] << '\t' << idf_[i] << '\n';
    out << line.str();
  }
}

Vectorizer Vectorizer::load(std::istream& in) {
  std::string line;
  do {
    if (!std::getline(in, line)) throw ParseError("missing vectorizer header");
  } while (line.empty() || line.front() == '#');

  std::istringstream header(line);
  std::string magic;
  int version = 0;
  std::size_t dim = 0;
  Vectorizer v;
  header >> magic >> version >> dim >> v.num_docs_ >> v.min_df_ >> v.ngram_max_;
  if (!header || magic != "vectorizer") throw ParseError("bad vectorizer header '" + line + "'");
  if (version != kFormatVersion) {
    throw ParseError("unsupported vectorizer version " + std::to_string(version));
  }
  v.terms_.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    if (!std::getline(in, line)) throw ParseError("vectorizer truncated at column " + std::to_string(i));
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw ParseError("bad vectorizer column line '" + line + "'");
    }
    v.terms_.push_back(line.substr(0, t1));
    v.df_.push_back(std::stoull(line.substr(t1 + 1, t2 - t1 - 1)));
    v.idf_.push_back(std::strtod(line.c_str() + t2 + 1, nullptr));
  }
  v.rebuild_index();
  if (v.index_.size() != v.terms_.size()) throw ParseError("duplicate n-gram in vectorizer file");
  return v;
}

}  // namespace newsrisk
