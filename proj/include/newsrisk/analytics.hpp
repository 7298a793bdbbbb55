#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <future>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "newsrisk/dataset.hpp"
#include "newsrisk/endpoint.hpp"

namespace newsrisk {

// Every accumulator below is a commutative monoid: add() folds one sample,
// merge() combines two partial results, and merging partitions in any order
// equals a serial fold.

/// Per-factor positive counts, the no-risk count and a histogram over the
/// number of positive labels per sample (index 0..7).
struct LabelDistribution {
  std::size_t n = 0;
  std::array<std::size_t, kNumFactors> counts{};
  std::size_t no_risk = 0;
  std::array<std::size_t, kNumFactors + 1> histogram{};

  void add(const LabeledSample& s);
  void merge(const LabelDistribution& other);
  friend bool operator==(const LabelDistribution&, const LabelDistribution&) = default;
};

/// Symmetric pair counts; the diagonal is undefined.
struct CooccurrenceMatrix {
  std::array<std::array<std::size_t, kNumFactors>, kNumFactors> counts{};

  /// Number of samples with both a and b positive; nullopt on the diagonal.
  std::optional<std::size_t> at(RiskFactor a, RiskFactor b) const;

  void add(const LabeledSample& s);
  void merge(const CooccurrenceMatrix& other);
  friend bool operator==(const CooccurrenceMatrix&, const CooccurrenceMatrix&) = default;
};

struct SectorRow {
  std::size_t samples = 0;
  std::array<std::size_t, kNumFactors> counts{};

  std::size_t label_total() const;
  /// counts[f] over all positive labels in the sector (0 when none).
  double share_of_labels(RiskFactor f) const;
  /// counts[f] over the sector's samples.
  double share_of_samples(RiskFactor f) const;
  friend bool operator==(const SectorRow&, const SectorRow&) = default;
};

/// Samples without a known sector are excluded and tallied.
struct IndustryDistribution {
  std::map<Sector, SectorRow> sectors;
  std::size_t excluded = 0;

  void add(const LabeledSample& s);
  void merge(const IndustryDistribution& other);
  friend bool operator==(const IndustryDistribution&, const IndustryDistribution&) = default;
};

enum class Granularity { Month, Year };
Granularity parse_granularity(std::string_view name);

struct SeriesFilter {
  std::optional<std::string> company_id;
  std::optional<Sector> sector;

  bool accepts(const LabeledSample& s) const;
};

struct PeriodCounts {
  /// Samples (article, company pairs) in the period after filtering.
  std::size_t article_count = 0;
  std::array<std::size_t, kNumFactors> positive{};

  double share(RiskFactor f) const;
  friend bool operator==(const PeriodCounts&, const PeriodCounts&) = default;
};

/// Period keys are "YYYY-MM" or "YYYY" at UTC calendar boundaries.
struct RiskTimeSeries {
  Granularity granularity = Granularity::Month;
  SeriesFilter filter;
  std::map<std::string, PeriodCounts> periods;

  void add(const LabeledSample& s);
  void merge(const RiskTimeSeries& other);
  friend bool operator==(const RiskTimeSeries& a, const RiskTimeSeries& b) {
    return a.granularity == b.granularity && a.periods == b.periods;
  }
};

LabelDistribution label_distribution(const std::vector<LabeledSample>& samples);
CooccurrenceMatrix cooccurrence(const std::vector<LabeledSample>& samples);
IndustryDistribution industry_distribution(const std::vector<LabeledSample>& samples);
RiskTimeSeries risk_timeseries(const std::vector<LabeledSample>& samples, Granularity granularity,
                               const SeriesFilter& filter = {});

/// Folds contiguous chunks on separate threads and merges the partial results
/// in chunk order. `prototype` carries any configuration (granularity, filter).
template <class Acc>
Acc aggregate_partitioned(const std::vector<LabeledSample>& samples, std::size_t partitions, const Acc& prototype) {
  if (partitions <= 1 || samples.size() < 2) {
    Acc acc = prototype;
    for (const auto& s : samples) acc.add(s);
    return acc;
  }
  const std::size_t chunk = (samples.size() + partitions - 1) / partitions;
  std::vector<std::future<Acc>> parts;
  for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
    const std::size_t end = std::min(samples.size(), begin + chunk);
    parts.push_back(std::async(std::launch::async, [&samples, &prototype, begin, end] {
      Acc acc = prototype;
      for (std::size_t i = begin; i < end; ++i) acc.add(samples[i]);
      return acc;
    }));
  }
  Acc total = prototype;
  for (auto& p : parts) total.merge(p.get());
  return total;
}

// Sentiment.

struct SentimentTriple {
  double positive = 0.0;
  double neutral = 0.0;
  double negative = 0.0;

  double sum() const { return positive + neutral + negative; }
  /// Components in [0,1] summing to 1 within 1e-6.
  bool valid() const;
};

/// Estimates a (positive, neutral, negative) distribution for one sample.
/// Throws on failure; callers skip and tally such samples.
class SentimentProvider {
 public:
  virtual ~SentimentProvider() = default;
  virtual SentimentTriple sentiment(const Sample& sample) = 0;
};

class ConstantSentiment : public SentimentProvider {
 public:
  explicit ConstantSentiment(SentimentTriple t) : triple_(t) {}
  SentimentTriple sentiment(const Sample&) override { return triple_; }

 private:
  SentimentTriple triple_;
};

/// Precomputed triples keyed by sample_id, read from records
/// {sample_id, positive, neutral, negative}.
class TableSentiment : public SentimentProvider {
 public:
  explicit TableSentiment(std::unordered_map<std::string, SentimentTriple> table) : table_(std::move(table)) {}
  static TableSentiment load(const std::string& path);
  SentimentTriple sentiment(const Sample& sample) override;

 private:
  std::unordered_map<std::string, SentimentTriple> table_;
};

/// Request {text, company_name, task: "sentiment"}, response
/// {probabilities: [positive, neutral, negative]}.
class RemoteSentiment : public SentimentProvider {
 public:
  explicit RemoteSentiment(std::shared_ptr<JsonTransport> transport) : transport_(std::move(transport)) {}
  SentimentTriple sentiment(const Sample& sample) override;

 private:
  std::shared_ptr<JsonTransport> transport_;
};

struct SentimentCrosstab {
  /// Mean triple over samples where the factor is positive; absent when none are.
  std::array<std::optional<SentimentTriple>, kNumFactors> factors;
  std::array<std::size_t, kNumFactors> factor_samples{};
  /// Mean triple over all scored samples.
  std::optional<SentimentTriple> background;
  std::size_t scored = 0;
  std::size_t skipped = 0;
};

SentimentCrosstab sentiment_crosstab(const std::vector<LabeledSample>& samples, SentimentProvider& provider);

// Writers. Tabular outputs are tab-separated with a header row.

void write_label_distribution(std::ostream& out, const LabelDistribution& d);
void write_cooccurrence(std::ostream& out, const CooccurrenceMatrix& m);
void write_industry(std::ostream& out, const IndustryDistribution& d);
/// Plot-data export: period,factor,count,share.
void write_plot_data(std::ostream& out, const RiskTimeSeries& series);
/// Line-delimited records, one per (period, factor).
void write_timeseries_jsonl(std::ostream& out, const RiskTimeSeries& series);
void write_crosstab(std::ostream& out, const SentimentCrosstab& c);

}  // namespace newsrisk
