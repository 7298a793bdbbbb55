#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "newsrisk/dataset.hpp"
#include "newsrisk/errors.hpp"

namespace newsrisk {

using nlohmann::json;

namespace {

std::string get_string(const json& j, const char* key, std::size_t line_no, bool required = true) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw ParseError(std::string("missing field '") + key + "'", line_no);
    return {};
  }
  if (!it->is_string()) throw ParseError(std::string("field '") + key + "' must be a string", line_no);
  return it->get<std::string>();
}

}  // namespace

json to_json(const Sample& s) {
  return json{{"sample_id", s.sample_id},
              {"article_id", s.article_id},
              {"company_id", s.company_id},
              {"company_name", s.company_name},
              {"published_at", format_iso8601(s.published_at)},
              {"sector", std::string(sector_name(s.sector))},
              {"text", s.truncated_text}};
}

Sample sample_from_json(const json& j, std::size_t line_no) {
  if (!j.is_object()) throw ParseError("record must be a JSON object", line_no);
  Sample s;
  s.article_id = get_string(j, "article_id", line_no);
  s.company_id = get_string(j, "company_id", line_no);
  s.sample_id = get_string(j, "sample_id", line_no, false);
  if (s.sample_id.empty()) s.sample_id = make_sample_id(s.article_id, s.company_id);
  s.company_name = get_string(j, "company_name", line_no, false);
  if (s.company_name.empty()) s.company_name = s.company_id;
  s.truncated_text = get_string(j, "text", line_no);
  try {
    const auto ts = get_string(j, "published_at", line_no, false);
    if (!ts.empty()) s.published_at = parse_iso8601(ts);
    s.sector = parse_sector(get_string(j, "sector", line_no, false));
  } catch (const ParseError& e) {
    if (e.line()) throw;
    throw ParseError(e.what(), line_no);
  }
  return s;
}

json to_json(const LabeledSample& s) {
  json j = to_json(s.sample);
  j["labels"] = s.labels.codes();
  if (s.scores) j["scores"] = *s.scores;
  if (!s.source.empty()) j["source"] = s.source;
  return j;
}

LabeledSample labeled_from_json(const json& j, std::size_t line_no) {
  LabeledSample out;
  out.sample = sample_from_json(j, line_no);
  if (auto it = j.find("labels"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("field 'labels' must be an array of factor codes", line_no);
    std::vector<std::string> codes;
    for (const auto& c : *it) {
      if (!c.is_string()) throw ParseError("labels must be strings", line_no);
      codes.push_back(c.get<std::string>());
    }
    try {
      out.labels = RiskLabelSet::from_codes(codes);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (auto it = j.find("scores"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != kNumFactors) {
      throw ParseError("field 'scores' must hold 7 numbers", line_no);
    }
    FactorScores scores{};
    for (std::size_t i = 0; i < kNumFactors; ++i) {
      if (!(*it)[i].is_number()) throw ParseError("scores must be numbers", line_no);
      scores[i] = (*it)[i].get<double>();
    }
    out.scores = scores;
  }
  out.source = get_string(j, "source", line_no, false);
  return out;
}

void for_each_record(std::istream& in, const std::function<void(const json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    }
    fn(j, line_no);
  }
}

std::vector<LabeledSample> read_labeled(std::istream& in) {
  std::vector<LabeledSample> out;
  std::unordered_set<std::string> seen;
  for_each_record(in, [&](const json& j, std::size_t line_no) {
    auto s = labeled_from_json(j, line_no);
    if (!seen.insert(s.sample.sample_id).second) {
      throw ParseError("duplicate sample_id '" + s.sample.sample_id + "'", line_no);
    }
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<LabeledSample> load_labeled(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_labeled(in);
}

void write_labeled(std::ostream& out, const std::vector<LabeledSample>& samples) {
  for (const auto& s : samples) out << to_json(s).dump() << '\n';
}

std::vector<Sample> read_samples(std::istream& in) {
  std::vector<Sample> out;
  std::unordered_set<std::string> seen;
  for_each_record(in, [&](const json& j, std::size_t line_no) {
    auto s = sample_from_json(j, line_no);
    if (!seen.insert(s.sample_id).second) {
      throw ParseError("duplicate sample_id '" + s.sample_id + "'", line_no);
    }
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<Sample> load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_samples(in);
}

void write_samples(std::ostream& out, const std::vector<Sample>& samples) {
  for (const auto& s : samples) out << to_json(s).dump() << '\n';
}

}  // namespace newsrisk
