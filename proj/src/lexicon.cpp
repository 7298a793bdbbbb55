#include "newsrisk/lexicon.hpp"

#include <array>
#include <fstream>
#include <istream>

#include "newsrisk/errors.hpp"

namespace newsrisk {

namespace {

constexpr std::array<std::string_view, 4> kSuffixes = {"s", "es", "ed", "ing"};

bool matches_term(const std::string& token, const Lexicon& lexicon, const MatchOptions& options,
                  std::string& term) {
  if (lexicon.contains(token)) {
    term = token;
    return true;
  }
  if (!options.inflections) return false;
  for (auto suffix : kSuffixes) {
    if (token.size() > suffix.size() && token.ends_with(suffix)) {
      auto stem = token.substr(0, token.size() - suffix.size());
      if (lexicon.contains(stem)) {
        term = std::move(stem);
        return true;
      }
    }
  }
  return false;
}

}  // namespace

Lexicon::Lexicon(const std::vector<std::string>& terms) {
  for (const auto& t : terms) {
    auto tokens = tokenize(t);
    if (tokens.size() != 1) {
      throw ValidationError("lexicon term '" + t + "' is not a single token");
    }
    terms_.insert(std::move(tokens.front()));
  }
}

const Lexicon& default_lexicon() {
  static const Lexicon kDefault({
      "affect",   "ban",         "cash",      "cashflow",  "challenge", "competition",
      "concern",  "crackdown",   "cut",       "debt",      "decline",   "decrease",
      "delay",    "demand",      "downgrade", "drop",      "fail",      "finance",
      "harm",     "hit",         "impact",    "inflation", "layoff",    "liable",
      "limit",    "lose",        "loss",      "lowest",    "operation", "plunge",
      "pressure", "protest",     "regulation", "restriction", "risk",   "rival",
      "shortage", "shrink",      "slump",     "strike",    "struggle",  "sue",
      "suffer",   "supply",      "suspend",   "tension",   "unable",    "uncertain",
      "volatile", "warn",        "weak",      "worsen",    "worst",
  });
  return kDefault;
}

Lexicon read_lexicon(std::istream& in) {
  std::vector<std::string> terms;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 1 || normalize_whitespace(line).find(' ') != std::string::npos) {
      throw ParseError("lexicon entry must be a single token: '" + normalize_whitespace(line) + "'",
                       line_no);
    }
    terms.push_back(tokens.front());
  }
  return Lexicon(terms);
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon file '" + path + "'");
  return read_lexicon(in);
}

HeadlineMatch headline_matches(std::string_view headline, const Lexicon& lexicon,
                               const MatchOptions& options) {
  HeadlineMatch result;
  if (lexicon.empty()) return result;
  std::string term;
  for (const auto& token : tokenize(headline)) {
    if (matches_term(token, lexicon, options, term)) result.hits.insert(term);
  }
  result.matched = !result.hits.empty();
  return result;
}

std::vector<NewsArticle> filter_corpus(const std::vector<NewsArticle>& articles,
                                       const Lexicon& lexicon, const MatchOptions& options) {
  std::vector<NewsArticle> out;
  for (const auto& a : articles) {
    if (headline_matches(a.headline, lexicon, options).matched) out.push_back(a);
  }
  return out;
}

}  // namespace newsrisk
