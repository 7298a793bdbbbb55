#include "newsrisk/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <random>

#include "newsrisk/errors.hpp"

namespace newsrisk {

using nlohmann::json;

std::array<std::size_t, 3> split_sizes(std::size_t n) {
  std::array<std::size_t, 3> sizes{};
  std::array<std::uint64_t, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::uint64_t scaled = static_cast<std::uint64_t>(n) * SplitSpec::kWeights[i];
    sizes[i] = static_cast<std::size_t>(scaled / SplitSpec::kTotalWeight);
    remainders[i] = scaled % SplitSpec::kTotalWeight;
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[order[i]];
  return sizes;
}

Split<std::size_t> split_indices(const std::vector<std::string>& group_ids, const SplitSpec& spec) {
  const std::size_t n = group_ids.size();
  if (n < 3) throw ValidationError("splitting needs at least 3 samples, got " + std::to_string(n));

  // Groups in first-appearance order.
  std::vector<std::vector<std::size_t>> groups;
  if (spec.group_by_article) {
    std::map<std::string, std::size_t> slot;
    for (std::size_t i = 0; i < n; ++i) {
      auto [it, inserted] = slot.emplace(group_ids[i], groups.size());
      if (inserted) groups.emplace_back();
      groups[it->second].push_back(i);
    }
  } else {
    groups.reserve(n);
    for (std::size_t i = 0; i < n; ++i) groups.push_back({i});
  }

  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = groups.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(groups[i - 1], groups[j]);
  }

  const auto targets = split_sizes(n);
  std::array<std::vector<std::size_t>*, 3> parts;
  Split<std::size_t> out;
  parts = {&out.train, &out.validation, &out.test};
  for (const auto& g : groups) {
    std::size_t dest = 3;
    for (std::size_t p = 0; p < 3; ++p) {
      if (parts[p]->size() + g.size() <= targets[p]) {
        dest = p;
        break;
      }
    }
    if (dest == 3) {
      // No split has room for the whole group: place it where the deficit is largest.
      long best = std::numeric_limits<long>::min();
      for (std::size_t p = 0; p < 3; ++p) {
        const long deficit = static_cast<long>(targets[p]) - static_cast<long>(parts[p]->size());
        if (deficit > best) {
          best = deficit;
          dest = p;
        }
      }
    }
    parts[dest]->insert(parts[dest]->end(), g.begin(), g.end());
  }
  return out;
}

Split<LabeledSample> split_dataset(const std::vector<LabeledSample>& samples, const SplitSpec& spec) {
  std::vector<std::string> groups;
  groups.reserve(samples.size());
  for (const auto& s : samples) groups.push_back(spec.group_by_article ? s.sample.article_id : s.sample.sample_id);
  const auto idx = split_indices(groups, spec);
  Split<LabeledSample> out;
  for (auto i : idx.train) out.train.push_back(samples[i]);
  for (auto i : idx.validation) out.validation.push_back(samples[i]);
  for (auto i : idx.test) out.test.push_back(samples[i]);
  return out;
}

double precision(const Confusion& c) {
  return c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const Confusion& c) {
  return c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double f1(const Confusion& c) {
  const double p = precision(c), r = recall(c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

EvalReport score(const std::vector<RiskLabelSet>& predictions, const std::vector<RiskLabelSet>& gold) {
  if (predictions.size() != gold.size()) {
    throw ValidationError("predictions (" + std::to_string(predictions.size()) + ") and gold (" +
                          std::to_string(gold.size()) + ") differ in length");
  }
  EvalReport r;
  r.n = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t f = 0; f < kNumFactors; ++f) {
      const bool p = predictions[i].test(f), g = gold[i].test(f);
      auto& c = r.factors[f].counts;
      if (p && g) {
        ++c.tp;
      } else if (p) {
        ++c.fp;
      } else if (g) {
        ++c.fn;
      } else {
        ++c.tn;
      }
    }
  }
  double macro = 0.0;
  for (auto& fs : r.factors) {
    fs.precision = precision(fs.counts);
    fs.recall = recall(fs.counts);
    fs.f1 = f1(fs.counts);
    macro += fs.f1;
    r.micro_counts.tp += fs.counts.tp;
    r.micro_counts.fp += fs.counts.fp;
    r.micro_counts.fn += fs.counts.fn;
    r.micro_counts.tn += fs.counts.tn;
  }
  r.macro_f1 = macro / static_cast<double>(kNumFactors);
  r.micro_precision = precision(r.micro_counts);
  r.micro_recall = recall(r.micro_counts);
  r.micro_f1 = f1(r.micro_counts);
  return r;
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %6s %6s %6s %6s %8s %8s %8s\n", "factor", "TP", "FP", "FN", "TN", "P", "R",
                "F1");
  out << buf;
  for (auto f : kAllFactors) {
    const auto& s = report.factors[index_of(f)];
    std::snprintf(buf, sizeof buf, "%-24s %6zu %6zu %6zu %6zu %8.4f %8.4f %8.4f\n", code(f).data(), s.counts.tp,
                  s.counts.fp, s.counts.fn, s.counts.tn, s.precision, s.recall, s.f1);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "summary n=%zu macro_f1=%.4f micro_precision=%.4f micro_recall=%.4f micro_f1=%.4f",
                report.n, report.macro_f1, report.micro_precision, report.micro_recall, report.micro_f1);
  out << buf;
  if (report.unparseable) out << " unparseable=" << *report.unparseable;
  out << '\n';
}

void write_report_jsonl(std::ostream& out, const EvalReport& report) {
  for (auto f : kAllFactors) {
    const auto& s = report.factors[index_of(f)];
    json j{{"factor", code(f)},      {"tp", s.counts.tp},        {"fp", s.counts.fp},
           {"fn", s.counts.fn},      {"tn", s.counts.tn},        {"precision", s.precision},
           {"recall", s.recall},     {"f1", s.f1}};
    out << j.dump() << '\n';
  }
  json summary{{"summary", true},
               {"n", report.n},
               {"macro_f1", report.macro_f1},
               {"micro_precision", report.micro_precision},
               {"micro_recall", report.micro_recall},
               {"micro_f1", report.micro_f1}};
  if (report.unparseable) summary["unparseable"] = *report.unparseable;
  out << summary.dump() << '\n';
}

}  // namespace newsrisk
