#include "newsrisk/analytics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "newsrisk/errors.hpp"
#include "newsrisk/timestamp.hpp"

namespace newsrisk {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void LabelDistribution::add(const LabeledSample& s) {
  ++n;
  for (std::size_t f = 0; f < kNumFactors; ++f) counts[f] += s.labels.test(f) ? 1 : 0;
  if (s.labels.none()) ++no_risk;
  ++histogram[s.labels.count()];
}

void LabelDistribution::merge(const LabelDistribution& other) {
  n += other.n;
  no_risk += other.no_risk;
  for (std::size_t f = 0; f < kNumFactors; ++f) counts[f] += other.counts[f];
  for (std::size_t k = 0; k <= kNumFactors; ++k) histogram[k] += other.histogram[k];
}

std::optional<std::size_t> CooccurrenceMatrix::at(RiskFactor a, RiskFactor b) const {
  if (a == b) return std::nullopt;
  return counts[index_of(a)][index_of(b)];
}

void CooccurrenceMatrix::add(const LabeledSample& s) {
  for (std::size_t a = 0; a < kNumFactors; ++a) {
    if (!s.labels.test(a)) continue;
    for (std::size_t b = 0; b < kNumFactors; ++b) {
      if (a != b && s.labels.test(b)) ++counts[a][b];
    }
  }
}

void CooccurrenceMatrix::merge(const CooccurrenceMatrix& other) {
  for (std::size_t a = 0; a < kNumFactors; ++a) {
    for (std::size_t b = 0; b < kNumFactors; ++b) counts[a][b] += other.counts[a][b];
  }
}

std::size_t SectorRow::label_total() const {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

double SectorRow::share_of_labels(RiskFactor f) const { return ratio(counts[index_of(f)], label_total()); }

double SectorRow::share_of_samples(RiskFactor f) const { return ratio(counts[index_of(f)], samples); }

void IndustryDistribution::add(const LabeledSample& s) {
  if (s.sample.sector == Sector::Unknown) {
    ++excluded;
    return;
  }
  auto& row = sectors[s.sample.sector];
  ++row.samples;
  for (std::size_t f = 0; f < kNumFactors; ++f) row.counts[f] += s.labels.test(f) ? 1 : 0;
}

void IndustryDistribution::merge(const IndustryDistribution& other) {
  excluded += other.excluded;
  for (const auto& [sector, row] : other.sectors) {
    auto& mine = sectors[sector];
    mine.samples += row.samples;
    for (std::size_t f = 0; f < kNumFactors; ++f) mine.counts[f] += row.counts[f];
  }
}

Granularity parse_granularity(std::string_view name) {
  if (name == "month") return Granularity::Month;
  if (name == "year") return Granularity::Year;
  throw ValidationError("granularity must be 'month' or 'year', got '" + std::string(name) + "'");
}

bool SeriesFilter::accepts(const LabeledSample& s) const {
  if (company_id && s.sample.company_id != *company_id) return false;
  if (sector && s.sample.sector != *sector) return false;
  return true;
}

double PeriodCounts::share(RiskFactor f) const { return ratio(positive[index_of(f)], article_count); }

void RiskTimeSeries::add(const LabeledSample& s) {
  if (!filter.accepts(s)) return;
  const auto key = granularity == Granularity::Month ? month_key(s.sample.published_at) : year_key(s.sample.published_at);
  auto& p = periods[key];
  ++p.article_count;
  for (std::size_t f = 0; f < kNumFactors; ++f) p.positive[f] += s.labels.test(f) ? 1 : 0;
}

void RiskTimeSeries::merge(const RiskTimeSeries& other) {
  for (const auto& [key, counts] : other.periods) {
    auto& p = periods[key];
    p.article_count += counts.article_count;
    for (std::size_t f = 0; f < kNumFactors; ++f) p.positive[f] += counts.positive[f];
  }
}

LabelDistribution label_distribution(const std::vector<LabeledSample>& samples) {
  return aggregate_partitioned(samples, 1, LabelDistribution{});
}

CooccurrenceMatrix cooccurrence(const std::vector<LabeledSample>& samples) {
  return aggregate_partitioned(samples, 1, CooccurrenceMatrix{});
}

IndustryDistribution industry_distribution(const std::vector<LabeledSample>& samples) {
  return aggregate_partitioned(samples, 1, IndustryDistribution{});
}

RiskTimeSeries risk_timeseries(const std::vector<LabeledSample>& samples, Granularity granularity,
                               const SeriesFilter& filter) {
  RiskTimeSeries proto;
  proto.granularity = granularity;
  proto.filter = filter;
  return aggregate_partitioned(samples, 1, proto);
}

bool SentimentTriple::valid() const {
  for (double v : {positive, neutral, negative}) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return std::abs(sum() - 1.0) <= 1e-6;
}

TableSentiment TableSentiment::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sentiment table '" + path + "'");
  std::unordered_map<std::string, SentimentTriple> table;
  for_each_record(in, [&](const json& j, std::size_t line_no) {
    try {
      SentimentTriple t{j.at("positive").get<double>(), j.at("neutral").get<double>(),
                        j.at("negative").get<double>()};
      table[j.at("sample_id").get<std::string>()] = t;
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad sentiment record: ") + e.what(), line_no);
    }
  });
  return TableSentiment(std::move(table));
}

SentimentTriple TableSentiment::sentiment(const Sample& sample) {
  auto it = table_.find(sample.sample_id);
  if (it == table_.end()) throw NotFoundError("no sentiment for sample '" + sample.sample_id + "'");
  return it->second;
}

SentimentTriple RemoteSentiment::sentiment(const Sample& sample) {
  const json response =
      transport_->post({{"text", sample.truncated_text}, {"company_name", sample.company_name}, {"task", "sentiment"}});
  const auto it = response.find("probabilities");
  if (it == response.end() || !it->is_array() || it->size() != 3) {
    throw ProtocolError("sentiment response needs 'probabilities' with 3 numbers");
  }
  for (const auto& v : *it) {
    if (!v.is_number()) throw ProtocolError("sentiment probabilities must be numbers");
  }
  return {(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>()};
}

SentimentCrosstab sentiment_crosstab(const std::vector<LabeledSample>& samples, SentimentProvider& provider) {
  SentimentCrosstab out;
  std::array<SentimentTriple, kNumFactors> sums{};
  SentimentTriple total{};
  auto accumulate = [](SentimentTriple& acc, const SentimentTriple& t) {
    acc.positive += t.positive;
    acc.neutral += t.neutral;
    acc.negative += t.negative;
  };
  for (const auto& s : samples) {
    SentimentTriple t;
    try {
      t = provider.sentiment(s.sample);
    } catch (const Error&) {
      ++out.skipped;
      continue;
    }
    if (!t.valid()) {
      ++out.skipped;
      continue;
    }
    ++out.scored;
    accumulate(total, t);
    for (std::size_t f = 0; f < kNumFactors; ++f) {
      if (!s.labels.test(f)) continue;
      ++out.factor_samples[f];
      accumulate(sums[f], t);
    }
  }
  auto mean = [](const SentimentTriple& sum, std::size_t n) {
    const double d = static_cast<double>(n);
    return SentimentTriple{sum.positive / d, sum.neutral / d, sum.negative / d};
  };
  if (out.scored > 0) out.background = mean(total, out.scored);
  for (std::size_t f = 0; f < kNumFactors; ++f) {
    if (out.factor_samples[f] > 0) out.factors[f] = mean(sums[f], out.factor_samples[f]);
  }
  return out;
}

void write_label_distribution(std::ostream& out, const LabelDistribution& d) {
  out << "factor\tcount\tshare\n";
  for (auto f : kAllFactors) {
    out << code(f) << '\t' << d.counts[index_of(f)] << '\t' << fixed(ratio(d.counts[index_of(f)], d.n)) << '\n';
  }
  out << "no_risk\t" << d.no_risk << '\t' << fixed(ratio(d.no_risk, d.n)) << '\n';
  out << "total\t" << d.n << '\t' << fixed(d.n == 0 ? 0.0 : 1.0) << '\n';
  out << "\npositive_labels\tsamples\n";
  for (std::size_t k = 0; k <= kNumFactors; ++k) out << k << '\t' << d.histogram[k] << '\n';
}

void write_cooccurrence(std::ostream& out, const CooccurrenceMatrix& m) {
  out << "factor";
  for (auto f : kAllFactors) out << '\t' << short_name(f);
  out << '\n';
  for (auto a : kAllFactors) {
    out << short_name(a);
    for (auto b : kAllFactors) {
      const auto v = m.at(a, b);
      out << '\t';
      if (v) {
        out << *v;
      } else {
        out << "N/A";
      }
    }
    out << '\n';
  }
}

void write_industry(std::ostream& out, const IndustryDistribution& d) {
  out << "sector\tfactor\tsamples\tcount\tshare_of_labels\tshare_of_samples\n";
  for (const auto& [sector, row] : d.sectors) {
    for (auto f : kAllFactors) {
      out << sector_name(sector) << '\t' << code(f) << '\t' << row.samples << '\t' << row.counts[index_of(f)] << '\t'
          << fixed(row.share_of_labels(f)) << '\t' << fixed(row.share_of_samples(f)) << '\n';
    }
  }
  out << "excluded\t" << d.excluded << '\n';
}

void write_plot_data(std::ostream& out, const RiskTimeSeries& series) {
  out << "period,factor,count,share\n";
  for (const auto& [period, p] : series.periods) {
    for (auto f : kAllFactors) {
      out << period << ',' << code(f) << ',' << p.positive[index_of(f)] << ',' << fixed(p.share(f)) << '\n';
    }
  }
}

void write_timeseries_jsonl(std::ostream& out, const RiskTimeSeries& series) {
  for (const auto& [period, p] : series.periods) {
    for (auto f : kAllFactors) {
      json j{{"period", period},
             {"factor", code(f)},
             {"positive_count", p.positive[index_of(f)]},
             {"article_count", p.article_count},
             {"share", p.share(f)}};
      out << j.dump() << '\n';
    }
  }
}

void write_crosstab(std::ostream& out, const SentimentCrosstab& c) {
  out << "factor\tsamples\tpositive\tneutral\tnegative\n";
  auto row = [&](std::string_view name, std::size_t n, const std::optional<SentimentTriple>& t) {
    out << name << '\t' << n;
    if (t) {
      out << '\t' << fixed(t->positive) << '\t' << fixed(t->neutral) << '\t' << fixed(t->negative) << '\n';
    } else {
      out << "\tN/A\tN/A\tN/A\n";
    }
  };
  for (auto f : kAllFactors) row(code(f), c.factor_samples[index_of(f)], c.factors[index_of(f)]);
  row("background", c.scored, c.background);
  out << "skipped\t" << c.skipped << '\n';
}

}  // namespace newsrisk
