#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "newsrisk/corpus.hpp"
#include "newsrisk/risk_factor.hpp"

namespace newsrisk {

using FactorScores = std::array<double, kNumFactors>;

/// A sample with gold labels or predictions attached. This is the record
/// format shared by gold datasets, prediction files and split outputs.
struct LabeledSample {
  Sample sample;
  RiskLabelSet labels;
  std::optional<FactorScores> scores;
  /// Provenance of gold labels ("adjudicated", "single-annotator"); empty for predictions.
  std::string source;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

nlohmann::json to_json(const Sample& s);
Sample sample_from_json(const nlohmann::json& j, std::size_t line_no = 0);

nlohmann::json to_json(const LabeledSample& s);
/// Missing "labels" reads as all-false.
LabeledSample labeled_from_json(const nlohmann::json& j, std::size_t line_no = 0);

/// Calls `fn(record, line_no)` for every JSON object line, skipping blank and '#' lines.
void for_each_record(std::istream& in,
                     const std::function<void(const nlohmann::json&, std::size_t)>& fn);

std::vector<LabeledSample> read_labeled(std::istream& in);
std::vector<LabeledSample> load_labeled(const std::string& path);
void write_labeled(std::ostream& out, const std::vector<LabeledSample>& samples);

std::vector<Sample> read_samples(std::istream& in);
std::vector<Sample> load_samples(const std::string& path);
void write_samples(std::ostream& out, const std::vector<Sample>& samples);

}  // namespace newsrisk
