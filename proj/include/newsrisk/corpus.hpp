#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "newsrisk/timestamp.hpp"

namespace newsrisk {

/// Number of body sentences kept after the headline.
inline constexpr std::size_t kRetainedSentences = 5;

enum class Listing { Public, Private };

/// The 12 top-level industry sectors plus an explicit unknown sentinel.
enum class Sector {
  HealthCare,
  Financials,
  Technology,
  Energy,
  ConsumerDiscretionary,
  Utilities,
  Communications,
  RealEstate,
  ConsumerStaples,
  Industrials,
  Materials,
  Government,
  Unknown,
};

inline constexpr std::size_t kNumSectors = 12;

std::string_view sector_name(Sector s);
/// Exact sector name ("Real Estate"); "unknown" or empty maps to Sector::Unknown.
/// Anything else throws ParseError.
Sector parse_sector(std::string_view name);

std::string_view listing_name(Listing l);
Listing parse_listing(std::string_view name);

struct CompanyMention {
  std::string article_id;
  std::string company_id;
  std::string surface_form;

  friend bool operator==(const CompanyMention&, const CompanyMention&) = default;
};

struct NewsArticle {
  std::string article_id;
  Timestamp published_at{};
  std::string headline;
  std::vector<std::string> body_sentences;
  std::size_t raw_token_count = 0;
  /// Mentions supplied with the record; empty when the record carried none.
  std::vector<CompanyMention> mentions;

  friend bool operator==(const NewsArticle&, const NewsArticle&) = default;
};

struct Company {
  std::string company_id;
  std::string name;
  std::vector<std::string> aliases;
  Listing listing = Listing::Public;
  Sector sector = Sector::Unknown;
};

using SectorMap = std::unordered_map<std::string, Sector>;

/// One (article, target company) pair: the unit of labeling and prediction.
struct Sample {
  std::string sample_id;
  std::string article_id;
  std::string company_id;
  std::string company_name;
  std::string truncated_text;
  Timestamp published_at{};
  Sector sector = Sector::Unknown;

  friend bool operator==(const Sample&, const Sample&) = default;
};

std::string make_sample_id(std::string_view article_id, std::string_view company_id);

// Text primitives.

/// Terminators are . ! ? followed by whitespace and an uppercase letter, or by
/// end of text. Periods between digits and after known abbreviations never split.
std::vector<std::string> split_sentences(std::string_view text);

/// Maximal runs of letters/digits, ASCII-lowercased.
std::vector<std::string> tokenize(std::string_view text);

struct TokenSpan {
  std::string text;   // lowercased
  std::size_t begin;  // byte offsets into the source text
  std::size_t end;
};
std::vector<TokenSpan> tokenize_with_spans(std::string_view text);

/// Collapses whitespace runs into single spaces and trims.
std::string normalize_whitespace(std::string_view text);

/// Headline followed by a newline and the first five body sentences joined by
/// single spaces. Headline alone when the body is empty.
std::string truncate(const NewsArticle& article);

/// Copy of `article` with the body cut to the retained sentences.
NewsArticle truncated_article(const NewsArticle& article);

// Records.

NewsArticle parse_article(std::string_view line, std::size_t line_no = 0);
std::string serialize_article(const NewsArticle& article);

/// Reads line-delimited article records. Blank lines and '#' header lines are
/// skipped. Duplicate article ids are rejected.
std::vector<NewsArticle> read_corpus(std::istream& in);
std::vector<NewsArticle> load_corpus(const std::string& path);
void write_corpus(std::ostream& out, const std::vector<NewsArticle>& articles);

Company parse_company(std::string_view line, std::size_t line_no = 0);
std::vector<Company> read_gazetteer(std::istream& in);
std::vector<Company> load_gazetteer(const std::string& path);
SectorMap sector_map(const std::vector<Company>& gazetteer);

// Mentions and samples.

/// Alias matching over the truncated text. Case-insensitive, on token
/// boundaries, longest alias first; each span is claimed by at most one
/// company and each company yields at most one mention.
std::vector<CompanyMention> extract_mentions(const NewsArticle& article,
                                             const std::vector<Company>& gazetteer);

/// Reusable alias index for matching many articles against one gazetteer.
class MentionMatcher {
 public:
  explicit MentionMatcher(const std::vector<Company>& gazetteer);
  std::vector<CompanyMention> match(const NewsArticle& article) const;
  std::vector<CompanyMention> match_text(std::string_view article_id, std::string_view text) const;

 private:
  struct Alias {
    std::vector<std::string> tokens;
    std::size_t company;
    std::size_t chars;
  };
  std::vector<std::string> company_ids_;
  std::unordered_map<std::string, std::vector<Alias>> by_first_token_;
};

struct SampleBuildStats {
  std::size_t articles = 0;
  std::size_t samples = 0;
  std::size_t articles_without_mentions = 0;
  std::size_t dropped_supplied_mentions = 0;
};

/// One sample per distinct company mentioned in each article's truncated
/// text. Mentions supplied with a record win over gazetteer extraction;
/// supplied mentions whose surface form is absent from the truncated text are
/// dropped.
std::vector<Sample> build_samples(const std::vector<NewsArticle>& articles,
                                  const std::vector<Company>& gazetteer,
                                  SampleBuildStats* stats = nullptr);

}  // namespace newsrisk
