#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "newsrisk/corpus.hpp"

namespace newsrisk {

/// Set of lowercase single-token terms used to pre-filter headlines.
class Lexicon {
 public:
  Lexicon() = default;
  /// Throws ValidationError if a term is not exactly one token.
  explicit Lexicon(const std::vector<std::string>& terms);

  bool contains(std::string_view term) const { return terms_.contains(std::string(term)); }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const std::set<std::string>& terms() const { return terms_; }

 private:
  std::set<std::string> terms_;
};

/// The 53 curated risk unigrams.
const Lexicon& default_lexicon();

/// One term per line; '#' starts a comment. Multi-token lines are rejected
/// with a ParseError carrying the line number.
Lexicon read_lexicon(std::istream& in);
Lexicon load_lexicon(const std::string& path);

struct MatchOptions {
  /// Also accept a lexicon term followed by one of {s, es, ed, ing}.
  bool inflections = false;
};

struct HeadlineMatch {
  bool matched = false;
  /// Lexicon terms hit, sorted.
  std::set<std::string> hits;
};

HeadlineMatch headline_matches(std::string_view headline, const Lexicon& lexicon,
                               const MatchOptions& options = {});

/// Articles whose headline matches, in input order.
std::vector<NewsArticle> filter_corpus(const std::vector<NewsArticle>& articles,
                                       const Lexicon& lexicon, const MatchOptions& options = {});

}  // namespace newsrisk
