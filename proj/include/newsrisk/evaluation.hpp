#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "newsrisk/dataset.hpp"
#include "newsrisk/risk_factor.hpp"

namespace newsrisk {

/// Train/validation/test proportions 484:126:106 (out of 716).
struct SplitSpec {
  static constexpr std::array<std::uint64_t, 3> kWeights = {484, 126, 106};
  static constexpr std::uint64_t kTotalWeight = 716;

  std::uint64_t seed = 13;
  /// Keep every sample of an article in the same split.
  bool group_by_article = true;
};

/// Largest-remainder apportionment of n over the split weights; remainder ties
/// go to train, then validation, then test.
std::array<std::size_t, 3> split_sizes(std::size_t n);

template <class T>
struct Split {
  std::vector<T> train;
  std::vector<T> validation;
  std::vector<T> test;
};

/// Seeded shuffle of article groups, then greedy fill toward split_sizes().
/// With singleton groups (or grouping disabled) the sizes match split_sizes()
/// exactly. The input order inside each output follows the shuffle.
/// Throws ValidationError for fewer than 3 samples.
Split<LabeledSample> split_dataset(const std::vector<LabeledSample>& samples, const SplitSpec& spec = {});

/// Index-level form of split_dataset, keyed by group ids.
Split<std::size_t> split_indices(const std::vector<std::string>& group_ids, const SplitSpec& spec = {});

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// 0/0 resolves to 0 for precision, recall and F1.
double precision(const Confusion& c);
double recall(const Confusion& c);
double f1(const Confusion& c);

struct FactorScore {
  Confusion counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::size_t n = 0;
  std::array<FactorScore, kNumFactors> factors;
  double macro_f1 = 0.0;
  Confusion micro_counts;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  std::optional<std::size_t> unparseable;
};

/// Throws ValidationError when the two lists differ in length.
EvalReport score(const std::vector<RiskLabelSet>& predictions, const std::vector<RiskLabelSet>& gold);

/// Table of factor, TP, FP, FN, TN, P, R, F1 followed by a summary line.
void write_report_table(std::ostream& out, const EvalReport& report);
/// One JSON record per factor plus a summary record.
void write_report_jsonl(std::ostream& out, const EvalReport& report);

}  // namespace newsrisk
