#include "newsrisk/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "json.hpp"
#include "newsrisk/errors.hpp"

namespace newsrisk {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kNumSectors> kSectorNames = {
    "Health Care",    "Financials",  "Technology",       "Energy",
    "Consumer Discretionary",        "Utilities",        "Communications",
    "Real Estate",    "Consumer Staples",                "Industrials",
    "Materials",      "Government",
};

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
bool is_ascii_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }
bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_ascii_alnum(unsigned char c) {
  return is_ascii_digit(c) || (c >= 'a' && c <= 'z') || is_ascii_upper(c);
}
char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

const std::unordered_set<std::string_view>& abbreviations() {
  static const std::unordered_set<std::string_view> kAbbrev = {
      "Inc.",  "Co.",   "Corp.", "Ltd.",  "Cos.",  "Bros.", "Plc.",  "Mr.",   "Mrs.",  "Ms.",
      "Dr.",   "Prof.", "Sen.",  "Rep.",  "Gov.",  "Gen.",  "Lt.",   "Col.",  "St.",   "Jr.",
      "Sr.",   "No.",   "vs.",   "etc.",  "e.g.",  "i.e.",  "U.S.",  "U.K.",  "U.N.",  "E.U.",
      "Jan.",  "Feb.",  "Mar.",  "Apr.",  "Aug.",  "Sept.", "Sep.",  "Oct.",  "Nov.",  "Dec.",
      "approx.", "est.", "Ave.", "Dept.", "Mt.",
  };
  return kAbbrev;
}

// Word ending at `period` (inclusive), without leading opening punctuation.
std::string_view word_before(std::string_view text, std::size_t period) {
  std::size_t start = period;
  while (start > 0 && !is_ascii_space(static_cast<unsigned char>(text[start - 1]))) --start;
  while (start < period && is_opener(text[start])) ++start;
  return text.substr(start, period - start + 1);
}

bool suppresses_split(std::string_view word) {
  if (abbreviations().contains(word)) return true;
  // Single-letter initial such as "J."
  return word.size() == 2 && is_ascii_upper(static_cast<unsigned char>(word[0]));
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_ascii_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Decodes one UTF-8 code point at `pos`; returns its length (>=1). Invalid
// sequences decode as U+FFFD with length 1.
std::size_t decode_utf8(std::string_view s, std::size_t pos, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) {
      cp = ((b0 & 0x1F) << 6) | c1;
      return 2;
    }
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) {
      cp = ((b0 & 0x0F) << 12) | (c1 << 6) | c2;
      return 3;
    }
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      cp = ((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3;
      return 4;
    }
  }
  cp = 0xFFFD;
  return 1;
}

// Non-ASCII code points count as letters unless they fall in a punctuation,
// space or symbol block.
bool is_word_codepoint(char32_t cp) {
  if (cp < 0x80) return is_ascii_alnum(static_cast<unsigned char>(cp));
  if (cp == 0xFFFD) return false;
  if (cp <= 0xBF) return false;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  return true;
}

std::string require_string(const json& j, const char* key, std::size_t line_no) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'", line_no);
  if (!it->is_string()) throw ParseError(std::string("field '") + key + "' must be a string", line_no);
  return it->get<std::string>();
}

json parse_json_line(std::string_view line, std::size_t line_no) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw ParseError("record must be a JSON object", line_no);
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed record: ") + e.what(), line_no);
  }
}

bool skippable(std::string_view line) {
  const auto t = trim(line);
  return t.empty() || t.front() == '#';
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
  return out;
}

}  // namespace

std::string_view sector_name(Sector s) {
  if (s == Sector::Unknown) return "unknown";
  return kSectorNames[static_cast<std::size_t>(s)];
}

Sector parse_sector(std::string_view name) {
  if (name.empty() || name == "unknown") return Sector::Unknown;
  for (std::size_t i = 0; i < kSectorNames.size(); ++i) {
    if (kSectorNames[i] == name) return static_cast<Sector>(i);
  }
  throw ParseError("unknown sector '" + std::string(name) + "'");
}

std::string_view listing_name(Listing l) { return l == Listing::Public ? "public" : "private"; }

Listing parse_listing(std::string_view name) {
  if (name == "public") return Listing::Public;
  if (name == "private") return Listing::Private;
  throw ParseError("listing must be 'public' or 'private', got '" + std::string(name) + "'");
}

std::string make_sample_id(std::string_view article_id, std::string_view company_id) {
  std::string id;
  id.reserve(article_id.size() + company_id.size() + 1);
  id.append(article_id).append(":").append(company_id);
  return id;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  const std::size_t n = text.size();
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    const auto s = trim(text.substr(start, end - start));
    if (!s.empty()) out.emplace_back(s);
    start = end;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if (!is_terminator(c)) continue;
    if (c == '.' && i > 0 && i + 1 < n && is_ascii_digit(static_cast<unsigned char>(text[i - 1])) &&
        is_ascii_digit(static_cast<unsigned char>(text[i + 1]))) {
      continue;
    }
    std::size_t j = i + 1;
    while (j < n && (is_terminator(text[j]) || is_closer(text[j]))) ++j;

    bool boundary = false;
    if (j == n) {
      boundary = true;
    } else if (is_ascii_space(static_cast<unsigned char>(text[j]))) {
      std::size_t k = j;
      while (k < n && is_ascii_space(static_cast<unsigned char>(text[k]))) ++k;
      if (k == n) {
        boundary = true;
      } else {
        std::size_t first = k;
        while (first < n && is_opener(text[first])) ++first;
        boundary = first < n && is_ascii_upper(static_cast<unsigned char>(text[first]));
      }
    }
    if (boundary && c == '.' && suppresses_split(word_before(text, i))) boundary = false;
    if (boundary) emit(j);
    i = j - 1;
  }
  emit(n);
  return out;
}

std::vector<TokenSpan> tokenize_with_spans(std::string_view text) {
  std::vector<TokenSpan> out;
  std::size_t pos = 0;
  std::size_t begin = 0;
  bool in_token = false;
  std::string current;
  while (pos < text.size()) {
    char32_t cp = 0;
    const std::size_t len = decode_utf8(text, pos, cp);
    if (is_word_codepoint(cp)) {
      if (!in_token) {
        in_token = true;
        begin = pos;
        current.clear();
      }
      if (len == 1) {
        current.push_back(ascii_lower(text[pos]));
      } else {
        current.append(text.substr(pos, len));
      }
    } else if (in_token) {
      out.push_back({std::move(current), begin, pos});
      current = {};
      in_token = false;
    }
    pos += len;
  }
  if (in_token) out.push_back({std::move(current), begin, text.size()});
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  auto spans = tokenize_with_spans(text);
  std::vector<std::string> out;
  out.reserve(spans.size());
  for (auto& s : spans) out.push_back(std::move(s.text));
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_ascii_space(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::string truncate(const NewsArticle& article) {
  std::string out = article.headline;
  const std::size_t keep = std::min(kRetainedSentences, article.body_sentences.size());
  for (std::size_t i = 0; i < keep; ++i) {
    out.push_back(i == 0 ? '\n' : ' ');
    out += article.body_sentences[i];
  }
  return out;
}

NewsArticle truncated_article(const NewsArticle& article) {
  NewsArticle out = article;
  if (out.body_sentences.size() > kRetainedSentences) out.body_sentences.resize(kRetainedSentences);
  return out;
}

NewsArticle parse_article(std::string_view line, std::size_t line_no) {
  const json j = parse_json_line(line, line_no);
  NewsArticle a;
  a.article_id = require_string(j, "article_id", line_no);
  if (a.article_id.empty()) throw ParseError("article_id must be non-empty", line_no);
  try {
    a.published_at = parse_iso8601(require_string(j, "published_at", line_no));
  } catch (const ParseError& e) {
    if (e.line()) throw;
    throw ParseError(e.what(), line_no);
  }
  a.headline = normalize_whitespace(require_string(j, "headline", line_no));
  if (a.headline.empty()) throw ParseError("headline must be non-empty", line_no);

  auto add_body = [&](const std::string& chunk) {
    for (auto& s : split_sentences(normalize_whitespace(chunk))) a.body_sentences.push_back(std::move(s));
  };
  if (auto it = j.find("sentences"); it != j.end()) {
    if (!it->is_array()) throw ParseError("field 'sentences' must be an array", line_no);
    for (const auto& s : *it) {
      if (!s.is_string()) throw ParseError("sentences must be strings", line_no);
      add_body(s.get<std::string>());
    }
  } else if (auto body = j.find("body"); body != j.end()) {
    if (!body->is_string()) throw ParseError("field 'body' must be a string", line_no);
    add_body(body->get<std::string>());
  }

  if (auto it = j.find("mentions"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("field 'mentions' must be an array", line_no);
    for (const auto& m : *it) {
      if (!m.is_object()) throw ParseError("mention must be an object", line_no);
      CompanyMention cm{a.article_id, require_string(m, "company_id", line_no),
                        require_string(m, "surface_form", line_no)};
      if (cm.company_id.empty()) throw ParseError("mention company_id must be non-empty", line_no);
      a.mentions.push_back(std::move(cm));
    }
  }

  std::string full = a.headline;
  for (const auto& s : a.body_sentences) full.append(" ").append(s);
  a.raw_token_count = tokenize(full).size();
  return a;
}

std::string serialize_article(const NewsArticle& article) {
  json j;
  j["article_id"] = article.article_id;
  j["published_at"] = format_iso8601(article.published_at);
  j["headline"] = article.headline;
  j["sentences"] = article.body_sentences;
  if (!article.mentions.empty()) {
    json ms = json::array();
    for (const auto& m : article.mentions) {
      ms.push_back({{"company_id", m.company_id}, {"surface_form", m.surface_form}});
    }
    j["mentions"] = std::move(ms);
  }
  return j.dump();
}

std::vector<NewsArticle> read_corpus(std::istream& in) {
  std::vector<NewsArticle> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    auto a = parse_article(line, line_no);
    if (!seen.insert(a.article_id).second) {
      throw ParseError("duplicate article_id '" + a.article_id + "'", line_no);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<NewsArticle> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file '" + path + "'");
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<NewsArticle>& articles) {
  for (const auto& a : articles) out << serialize_article(a) << '\n';
}

Company parse_company(std::string_view line, std::size_t line_no) {
  const json j = parse_json_line(line, line_no);
  Company c;
  c.company_id = require_string(j, "company_id", line_no);
  if (c.company_id.empty()) throw ParseError("company_id must be non-empty", line_no);
  c.name = require_string(j, "name", line_no);
  if (auto it = j.find("aliases"); it != j.end()) {
    if (!it->is_array()) throw ParseError("field 'aliases' must be an array", line_no);
    for (const auto& a : *it) {
      if (!a.is_string()) throw ParseError("aliases must be strings", line_no);
      c.aliases.push_back(a.get<std::string>());
    }
  }
  try {
    if (auto it = j.find("listing"); it != j.end()) c.listing = parse_listing(it->get<std::string>());
    if (auto it = j.find("sector"); it != j.end() && !it->is_null()) {
      c.sector = parse_sector(it->get<std::string>());
    }
  } catch (const ParseError& e) {
    throw ParseError(e.what(), line_no);
  } catch (const json::exception& e) {
    throw ParseError(e.what(), line_no);
  }
  if (c.aliases.empty() && c.name.empty()) throw ParseError("company needs a name or aliases", line_no);
  return c;
}

std::vector<Company> read_gazetteer(std::istream& in) {
  std::vector<Company> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    auto c = parse_company(line, line_no);
    if (!seen.insert(c.company_id).second) {
      throw ParseError("duplicate company_id '" + c.company_id + "'", line_no);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Company> load_gazetteer(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open gazetteer file '" + path + "'");
  return read_gazetteer(in);
}

SectorMap sector_map(const std::vector<Company>& gazetteer) {
  SectorMap m;
  for (const auto& c : gazetteer) m[c.company_id] = c.sector;
  return m;
}

MentionMatcher::MentionMatcher(const std::vector<Company>& gazetteer) {
  company_ids_.reserve(gazetteer.size());
  for (std::size_t ci = 0; ci < gazetteer.size(); ++ci) {
    const auto& company = gazetteer[ci];
    company_ids_.push_back(company.company_id);
    std::vector<std::string> surfaces = company.aliases;
    if (surfaces.empty()) surfaces.push_back(company.name);
    for (const auto& surface : surfaces) {
      auto tokens = tokenize(surface);
      if (tokens.empty()) continue;
      const auto first = tokens.front();
      by_first_token_[first].push_back({std::move(tokens), ci, surface.size()});
    }
  }
}

std::vector<CompanyMention> MentionMatcher::match(const NewsArticle& article) const {
  return match_text(article.article_id, truncate(article));
}

std::vector<CompanyMention> MentionMatcher::match_text(std::string_view article_id,
                                                       std::string_view text) const {
  const auto tokens = tokenize_with_spans(text);
  struct Candidate {
    std::size_t start;
    std::size_t length;
    std::size_t chars;
    std::size_t company;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = by_first_token_.find(tokens[i].text);
    if (it == by_first_token_.end()) continue;
    for (const auto& alias : it->second) {
      if (i + alias.tokens.size() > tokens.size()) continue;
      bool ok = true;
      for (std::size_t k = 1; k < alias.tokens.size() && ok; ++k) {
        ok = tokens[i + k].text == alias.tokens[k];
      }
      if (ok) candidates.push_back({i, alias.tokens.size(), alias.chars, alias.company});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.length != b.length) return a.length > b.length;
    if (a.chars != b.chars) return a.chars > b.chars;
    if (a.start != b.start) return a.start < b.start;
    return a.company < b.company;
  });

  std::vector<bool> claimed(tokens.size(), false);
  std::vector<bool> company_done(company_ids_.size(), false);
  std::vector<Candidate> accepted;
  for (const auto& c : candidates) {
    if (company_done[c.company]) continue;
    bool free = true;
    for (std::size_t k = c.start; k < c.start + c.length && free; ++k) free = !claimed[k];
    if (!free) continue;
    for (std::size_t k = c.start; k < c.start + c.length; ++k) claimed[k] = true;
    company_done[c.company] = true;
    accepted.push_back(c);
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const Candidate& a, const Candidate& b) { return a.start < b.start; });

  std::vector<CompanyMention> out;
  out.reserve(accepted.size());
  for (const auto& c : accepted) {
    const auto begin = tokens[c.start].begin;
    const auto end = tokens[c.start + c.length - 1].end;
    out.push_back({std::string(article_id), company_ids_[c.company],
                   std::string(text.substr(begin, end - begin))});
  }
  return out;
}

std::vector<CompanyMention> extract_mentions(const NewsArticle& article,
                                             const std::vector<Company>& gazetteer) {
  if (gazetteer.empty()) return {};
  return MentionMatcher(gazetteer).match(article);
}

std::vector<Sample> build_samples(const std::vector<NewsArticle>& articles,
                                  const std::vector<Company>& gazetteer, SampleBuildStats* stats) {
  SampleBuildStats local;
  const MentionMatcher matcher(gazetteer);
  std::unordered_map<std::string_view, const Company*> by_id;
  for (const auto& c : gazetteer) by_id.emplace(c.company_id, &c);

  std::vector<Sample> out;
  for (const auto& article : articles) {
    ++local.articles;
    const std::string text = truncate(article);
    std::vector<CompanyMention> mentions;
    if (!article.mentions.empty()) {
      const std::string lowered = lowercase(text);
      for (const auto& m : article.mentions) {
        if (m.surface_form.empty() || lowered.find(lowercase(m.surface_form)) == std::string::npos) {
          ++local.dropped_supplied_mentions;
          continue;
        }
        mentions.push_back(m);
      }
    } else {
      mentions = matcher.match_text(article.article_id, text);
    }

    std::unordered_set<std::string> seen;
    for (const auto& m : mentions) {
      if (!seen.insert(m.company_id).second) continue;
      Sample s;
      s.sample_id = make_sample_id(article.article_id, m.company_id);
      s.article_id = article.article_id;
      s.company_id = m.company_id;
      s.truncated_text = text;
      s.published_at = article.published_at;
      if (auto it = by_id.find(m.company_id); it != by_id.end()) {
        s.company_name = it->second->name.empty() ? m.surface_form : it->second->name;
        s.sector = it->second->sector;
      } else {
        s.company_name = m.surface_form;
      }
      out.push_back(std::move(s));
    }
    if (seen.empty()) ++local.articles_without_mentions;
  }
  local.samples = out.size();
  if (stats) *stats = local;
  return out;
}

}  // namespace newsrisk
