#include "newsrisk/annotation_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "newsrisk/errors.hpp"

namespace newsrisk {

using nlohmann::json;

std::string_view batch_name(Batch b) { return b == Batch::Calibration ? "calibration" : "solo"; }

Batch parse_batch(std::string_view name) {
  if (name == "calibration") return Batch::Calibration;
  if (name == "solo") return Batch::Solo;
  throw ValidationError("unknown batch '" + std::string(name) + "'");
}

std::string_view status_name(RecordStatus s) {
  switch (s) {
    case RecordStatus::Draft:
      return "draft";
    case RecordStatus::Submitted:
      return "submitted";
    case RecordStatus::Rejected:
      return "rejected";
  }
  return "submitted";
}

RecordStatus parse_status(std::string_view name) {
  if (name == "draft") return RecordStatus::Draft;
  if (name == "submitted") return RecordStatus::Submitted;
  if (name == "rejected") return RecordStatus::Rejected;
  throw ValidationError("status must be draft, submitted or rejected, got '" + std::string(name) + "'");
}

std::string_view gold_source_name(GoldSource s) {
  return s == GoldSource::Adjudicated ? "adjudicated" : "single-annotator";
}

namespace {

GoldSource parse_gold_source(std::string_view name) {
  if (name == "adjudicated") return GoldSource::Adjudicated;
  if (name == "single-annotator") return GoldSource::SingleAnnotator;
  throw ValidationError("unknown gold source '" + std::string(name) + "'");
}

json assignment_to_json(const Assignment& a) {
  return {{"sample_id", a.sample_id}, {"annotator_id", a.annotator_id}, {"batch", batch_name(a.batch)}};
}

Assignment assignment_from_json(const json& j) {
  return {j.at("sample_id").get<std::string>(), j.at("annotator_id").get<std::string>(),
          parse_batch(j.at("batch").get<std::string>())};
}

json flag_to_json(const Flag& f) {
  return {{"sample_id", f.sample_id},
          {"flagged_by", f.flagged_by},
          {"reason", f.reason},
          {"flagged_at", format_iso8601(f.flagged_at)}};
}

Flag flag_from_json(const json& j) {
  return {j.at("sample_id").get<std::string>(), j.at("flagged_by").get<std::string>(),
          j.at("reason").get<std::string>(), parse_iso8601(j.at("flagged_at").get<std::string>())};
}

GoldRecord gold_from_json(const json& j) {
  return {j.at("sample_id").get<std::string>(),
          RiskLabelSet::from_codes(j.at("labels").get<std::vector<std::string>>()),
          j.at("adjudicated_by").get<std::string>(), parse_gold_source(j.at("source").get<std::string>()),
          parse_iso8601(j.at("decided_at").get<std::string>())};
}

bool is_final(RecordStatus s) { return s != RecordStatus::Draft; }

}  // namespace

json to_json(const AnnotationRecord& r) {
  json j{{"sample_id", r.sample_id},
         {"annotator_id", r.annotator_id},
         {"labels", r.labels.codes()},
         {"no_risk_confirmed", r.no_risk_confirmed},
         {"submitted_at", format_iso8601(r.submitted_at)},
         {"status", status_name(r.status)}};
  if (!r.reason.empty()) j["reason"] = r.reason;
  return j;
}

AnnotationRecord record_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("annotation must be an object");
  AnnotationRecord r;
  try {
    r.sample_id = j.at("sample_id").get<std::string>();
    r.annotator_id = j.value("annotator_id", std::string());
    if (auto it = j.find("labels"); it != j.end()) {
      r.labels = RiskLabelSet::from_codes(it->get<std::vector<std::string>>());
    }
    r.no_risk_confirmed = j.value("no_risk_confirmed", false);
    if (auto it = j.find("submitted_at"); it != j.end()) r.submitted_at = parse_iso8601(it->get<std::string>());
    r.status = parse_status(j.value("status", std::string("submitted")));
    r.reason = j.value("reason", std::string());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed annotation: ") + e.what());
  } catch (const ParseError& e) {
    throw ValidationError(std::string("malformed annotation: ") + e.what());
  }
  return r;
}

json to_json(const GoldRecord& g) {
  return {{"sample_id", g.sample_id},
          {"labels", g.labels.codes()},
          {"adjudicated_by", g.adjudicated_by},
          {"source", gold_source_name(g.source)},
          {"decided_at", format_iso8601(g.decided_at)}};
}

json to_json(const DisagreementReport& r) {
  json conflicts = json::array();
  for (const auto& c : r.conflicts) {
    conflicts.push_back({{"factor", code(c.factor)}, {"positive", c.positive}, {"negative", c.negative}});
  }
  return {{"sample_id", r.sample_id},
          {"annotators", r.annotators},
          {"unanimous", r.unanimous()},
          {"conflicts", conflicts}};
}

json to_json(const AgreementStats& s) {
  json factors = json::array();
  for (auto f : kAllFactors) {
    factors.push_back(
        {{"factor", code(f)}, {"raw_agreement", s.raw_agreement[index_of(f)]}, {"kappa", s.kappa[index_of(f)]}});
  }
  return {{"eligible_samples", s.eligible_samples}, {"annotator_pairs", s.annotator_pairs}, {"factors", factors}};
}

bool AnnotationState::has_assignment(const std::string& sample_id, const std::string& annotator_id) const {
  return std::any_of(assignments.begin(), assignments.end(), [&](const Assignment& a) {
    return a.sample_id == sample_id && a.annotator_id == annotator_id;
  });
}

const AnnotationRecord* AnnotationState::current(const std::string& sample_id,
                                                 const std::string& annotator_id) const {
  auto it = records.find({sample_id, annotator_id});
  if (it == records.end()) return nullptr;
  for (auto r = it->second.rbegin(); r != it->second.rend(); ++r) {
    if (is_final(r->status)) return &*r;
  }
  return nullptr;
}

std::vector<const AnnotationRecord*> AnnotationState::submissions(const std::string& sample_id) const {
  std::vector<const AnnotationRecord*> out;
  for (auto it = records.lower_bound({sample_id, std::string()}); it != records.end() && it->first.first == sample_id;
       ++it) {
    const auto* r = current(sample_id, it->first.second);
    if (r && r->status == RecordStatus::Submitted) out.push_back(r);
  }
  return out;
}

const GoldRecord* AnnotationState::current_gold(const std::string& sample_id) const {
  auto it = gold.find(sample_id);
  return it == gold.end() || it->second.empty() ? nullptr : &it->second.back();
}

std::vector<std::string> AnnotationState::annotators_of(const std::string& sample_id) const {
  std::vector<std::string> out;
  for (const auto& a : assignments) {
    if (a.sample_id == sample_id) out.push_back(a.annotator_id);
  }
  return out;
}

json AnnotationState::to_json() const {
  json samples_j = json::array();
  for (const auto& id : sample_order) samples_j.push_back(newsrisk::to_json(samples.at(id)));
  json assignments_j = json::array();
  for (const auto& a : assignments) assignments_j.push_back(assignment_to_json(a));
  json records_j = json::array();
  for (const auto& [key, history] : records) {
    for (const auto& r : history) records_j.push_back(newsrisk::to_json(r));
  }
  json flags_j = json::array();
  for (const auto& [id, list] : flags) {
    for (const auto& f : list) flags_j.push_back(flag_to_json(f));
  }
  json gold_j = json::array();
  for (const auto& [id, list] : gold) {
    for (const auto& g : list) gold_j.push_back(newsrisk::to_json(g));
  }
  return {{"samples", samples_j},
          {"assignments", assignments_j},
          {"records", records_j},
          {"flags", flags_j},
          {"gold", gold_j}};
}

AnnotationState AnnotationState::from_json(const json& j) {
  AnnotationState s;
  apply_event(s, {{"op", "enqueue"}, {"samples", j.at("samples")}, {"assignments", j.at("assignments")}});
  for (const auto& r : j.at("records")) apply_event(s, {{"op", "submit"}, {"record", r}});
  for (const auto& f : j.at("flags")) apply_event(s, {{"op", "flag"}, {"flag", f}});
  for (const auto& g : j.at("gold")) apply_event(s, {{"op", "adjudicate"}, {"gold", g}});
  return s;
}

void apply_event(AnnotationState& state, const json& event) {
  const std::string op = event.at("op").get<std::string>();
  if (op == "enqueue") {
    for (const auto& sj : event.at("samples")) {
      Sample s = sample_from_json(sj);
      const std::string id = s.sample_id;
      state.sample_order.push_back(id);
      state.samples.emplace(id, std::move(s));
      state.batches.emplace(id, Batch::Solo);
    }
    for (const auto& aj : event.at("assignments")) {
      Assignment a = assignment_from_json(aj);
      if (a.batch == Batch::Calibration) state.batches[a.sample_id] = Batch::Calibration;
      state.assignments.push_back(std::move(a));
    }
  } else if (op == "submit") {
    AnnotationRecord r = record_from_json(event.at("record"));
    state.records[{r.sample_id, r.annotator_id}].push_back(std::move(r));
  } else if (op == "flag") {
    Flag f = flag_from_json(event.at("flag"));
    state.flags[f.sample_id].push_back(std::move(f));
  } else if (op == "adjudicate") {
    GoldRecord g = gold_from_json(event.at("gold"));
    state.gold[g.sample_id].push_back(std::move(g));
  } else if (op == "snapshot") {
    state = AnnotationState::from_json(event.at("state"));
  } else {
    throw ParseError("unknown log event '" + op + "'");
  }
}

AnnotationStore::AnnotationStore(std::filesystem::path dir, StoreOptions options)
    : dir_(std::move(dir)), options_(std::move(options)), state_(std::make_shared<AnnotationState>()) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create data directory '" + dir_.string() + "'");
  log_path_ = dir_ / kLogName;
  replay();
  open_log();
}

AnnotationStore::~AnnotationStore() {
  if (fd_ >= 0) ::close(fd_);
}

void AnnotationStore::replay() {
  std::ifstream in(log_path_, std::ios::binary);
  if (!in) return;
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();

  auto state = std::make_shared<AnnotationState>();
  std::size_t pos = 0, line_no = 0, good_end = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) break;  // torn final write
    ++line_no;
    const std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) {
      good_end = pos;
      continue;
    }
    try {
      apply_event(*state, json::parse(line));
    } catch (const std::exception& e) {
      throw ParseError(std::string("corrupt annotation log: ") + e.what(), line_no);
    }
    ++events_;
    good_end = pos;
  }
  if (good_end < content.size()) std::filesystem::resize_file(log_path_, good_end);
  state_ = std::move(state);
}

void AnnotationStore::open_log() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = ::open(log_path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IoError("cannot open annotation log '" + log_path_.string() + "': " + std::strerror(errno));
}

Timestamp AnnotationStore::now() const {
  if (options_.clock) return options_.clock();
  return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::shared_ptr<const AnnotationState> AnnotationStore::snapshot() const {
  std::lock_guard lock(publish_);
  return state_;
}

std::size_t AnnotationStore::events_since_compaction() const {
  std::lock_guard lock(writer_);
  return events_;
}

namespace {

void write_all(int fd, const std::string& data, const std::string& what) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("write to " + what + " failed: " + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) throw IoError("fsync of " + what + " failed: " + std::strerror(errno));
}

}  // namespace

// Caller holds writer_.
void AnnotationStore::commit(const json& event) {
  auto next = std::make_shared<AnnotationState>(*state_);
  apply_event(*next, event);
  write_all(fd_, event.dump() + "\n", log_path_.string());
  {
    std::lock_guard lock(publish_);
    state_ = std::move(next);
  }
  ++events_;
  if (options_.compact_every > 0 && events_ >= options_.compact_every) rewrite_log();
}

// Caller holds writer_.
void AnnotationStore::rewrite_log() {
  const auto tmp = log_path_.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw IoError("cannot write '" + tmp + "'");
  try {
    write_all(fd, json{{"op", "snapshot"}, {"state", state_->to_json()}}.dump() + "\n", tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  std::error_code ec;
  std::filesystem::rename(tmp, log_path_, ec);
  if (ec) throw IoError("cannot replace annotation log: " + ec.message());
  open_log();
  events_ = 0;
}

void AnnotationStore::compact() {
  std::lock_guard lock(writer_);
  rewrite_log();
}

std::vector<Assignment> AnnotationStore::enqueue(const std::vector<Sample>& samples,
                                                 const std::vector<std::string>& annotators,
                                                 std::size_t calibration_count) {
  if (annotators.empty()) throw ValidationError("enqueue needs at least one annotator");
  if (calibration_count > samples.size()) {
    throw ValidationError("calibration_count " + std::to_string(calibration_count) + " exceeds " +
                          std::to_string(samples.size()) + " samples");
  }
  std::set<std::string> seen_annotators;
  for (const auto& a : annotators) {
    if (a.empty()) throw ValidationError("annotator id must be non-empty");
    if (!seen_annotators.insert(a).second) throw ValidationError("duplicate annotator '" + a + "'");
  }

  std::lock_guard lock(writer_);
  std::set<std::string> seen_samples;
  for (const auto& s : samples) {
    if (s.sample_id.empty()) throw ValidationError("sample id must be non-empty");
    if (!seen_samples.insert(s.sample_id).second) throw ValidationError("duplicate sample '" + s.sample_id + "'");
    if (state_->samples.count(s.sample_id)) throw ValidationError("sample '" + s.sample_id + "' already enqueued");
  }

  std::vector<Assignment> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i < calibration_count) {
      for (const auto& a : annotators) out.push_back({samples[i].sample_id, a, Batch::Calibration});
    } else {
      out.push_back({samples[i].sample_id, annotators[(i - calibration_count) % annotators.size()], Batch::Solo});
    }
  }
  json samples_j = json::array();
  for (const auto& s : samples) samples_j.push_back(to_json(s));
  json assignments_j = json::array();
  for (const auto& a : out) assignments_j.push_back(assignment_to_json(a));
  commit({{"op", "enqueue"}, {"samples", samples_j}, {"assignments", assignments_j}});
  return out;
}

AnnotationRecord AnnotationStore::submit(AnnotationRecord record) {
  if (record.sample_id.empty()) throw ValidationError("annotation needs a sample_id");
  if (record.annotator_id.empty()) throw ValidationError("annotation needs an annotator_id");
  if (record.status == RecordStatus::Submitted) {
    if (record.labels.none() && !record.no_risk_confirmed) {
      throw ValidationError("all-false labels need no_risk_confirmed");
    }
    if (!record.labels.none() && record.no_risk_confirmed) {
      throw ValidationError("no_risk_confirmed conflicts with positive labels");
    }
  }
  if (record.status == RecordStatus::Rejected && record.reason.empty()) {
    throw ValidationError("a rejection needs a reason");
  }

  std::lock_guard lock(writer_);
  if (!state_->has_assignment(record.sample_id, record.annotator_id)) {
    throw AuthorizationError("annotator '" + record.annotator_id + "' has no assignment for sample '" +
                             record.sample_id + "'");
  }
  if (record.submitted_at == Timestamp{}) record.submitted_at = now();
  commit({{"op", "submit"}, {"record", to_json(record)}});
  return record;
}

Flag AnnotationStore::flag(const std::string& sample_id, const std::string& flagged_by, const std::string& reason) {
  std::lock_guard lock(writer_);
  if (!state_->samples.count(sample_id)) throw NotFoundError("unknown sample '" + sample_id + "'");
  Flag f{sample_id, flagged_by, reason, now()};
  commit({{"op", "flag"}, {"flag", flag_to_json(f)}});
  return f;
}

DisagreementReport AnnotationStore::disagreements(const std::string& sample_id) const {
  const auto state = snapshot();
  if (!state->samples.count(sample_id)) throw NotFoundError("unknown sample '" + sample_id + "'");
  const auto subs = state->submissions(sample_id);
  if (subs.size() < 2) {
    throw PreconditionError("sample '" + sample_id + "' has " + std::to_string(subs.size()) +
                            " submissions; disagreement review needs 2");
  }
  DisagreementReport report;
  report.sample_id = sample_id;
  for (const auto* r : subs) report.annotators.push_back(r->annotator_id);
  for (auto f : kAllFactors) {
    FactorConflict c{f, {}, {}};
    for (const auto* r : subs) (r->labels[f] ? c.positive : c.negative).push_back(r->annotator_id);
    if (!c.positive.empty() && !c.negative.empty()) report.conflicts.push_back(std::move(c));
  }
  return report;
}

GoldRecord AnnotationStore::adjudicate(const std::string& sample_id, const RiskLabelSet& labels,
                                       const std::string& adjudicator) {
  if (adjudicator.empty()) throw ValidationError("adjudication needs an adjudicator");
  std::lock_guard lock(writer_);
  if (!state_->samples.count(sample_id)) throw NotFoundError("unknown sample '" + sample_id + "'");
  const bool calibration_ready =
      state_->batches.at(sample_id) == Batch::Calibration && state_->submissions(sample_id).size() >= 2;
  const bool flagged = state_->flags.count(sample_id) > 0;
  if (!calibration_ready && !flagged) {
    throw PreconditionError("sample '" + sample_id +
                            "' is neither a calibration sample with 2 submissions nor flagged");
  }
  GoldRecord g{sample_id, labels, adjudicator, GoldSource::Adjudicated, now()};
  commit({{"op", "adjudicate"}, {"gold", to_json(g)}});
  return g;
}

AgreementStats AnnotationStore::agreement_stats() const {
  const auto state = snapshot();
  struct PairCounts {
    std::array<std::array<std::size_t, 4>, kNumFactors> cells{};  // [11, 10, 01, 00]
    std::size_t n = 0;
  };
  std::map<std::pair<std::string, std::string>, PairCounts> pairs;
  AgreementStats stats;
  std::array<std::size_t, kNumFactors> agree{};
  std::size_t comparisons = 0;
  for (const auto& id : state->sample_order) {
    if (state->batches.at(id) != Batch::Calibration) continue;
    const auto subs = state->submissions(id);
    if (subs.size() < 2) continue;
    ++stats.eligible_samples;
    for (std::size_t i = 0; i < subs.size(); ++i) {
      for (std::size_t j = i + 1; j < subs.size(); ++j) {
        auto& pc = pairs[{subs[i]->annotator_id, subs[j]->annotator_id}];
        ++pc.n;
        ++comparisons;
        for (std::size_t f = 0; f < kNumFactors; ++f) {
          const bool a = subs[i]->labels.test(f), b = subs[j]->labels.test(f);
          ++pc.cells[f][a ? (b ? 0 : 1) : (b ? 2 : 3)];
          if (a == b) ++agree[f];
        }
      }
    }
  }
  if (stats.eligible_samples == 0) {
    throw PreconditionError("agreement needs a calibration sample with at least 2 submissions");
  }
  stats.annotator_pairs = pairs.size();
  for (std::size_t f = 0; f < kNumFactors; ++f) {
    stats.raw_agreement[f] = static_cast<double>(agree[f]) / static_cast<double>(comparisons);
    double kappa_sum = 0.0;
    for (const auto& [key, pc] : pairs) {
      const double n = static_cast<double>(pc.n);
      const auto& c = pc.cells[f];
      const double p_o = static_cast<double>(c[0] + c[3]) / n;
      const double pa = static_cast<double>(c[0] + c[1]) / n;
      const double pb = static_cast<double>(c[0] + c[2]) / n;
      const double p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
      kappa_sum += p_e >= 1.0 ? 1.0 : (p_o - p_e) / (1.0 - p_e);
    }
    stats.kappa[f] = kappa_sum / static_cast<double>(pairs.size());
  }
  return stats;
}

GoldExport AnnotationStore::export_gold() const {
  const auto state = snapshot();
  GoldExport out;
  for (const auto& [id, sample] : state->samples) {
    if (const auto* g = state->current_gold(id)) {
      out.records.push_back({sample, g->labels, std::nullopt, std::string(gold_source_name(g->source))});
      continue;
    }
    if (state->batches.at(id) == Batch::Calibration) {
      ++out.excluded_calibration;
      continue;
    }
    const auto annotators = state->annotators_of(id);
    const AnnotationRecord* r = annotators.empty() ? nullptr : state->current(id, annotators.front());
    if (!r) {
      ++out.unlabeled;
    } else if (r->status == RecordStatus::Rejected) {
      ++out.excluded_rejected;
    } else {
      out.records.push_back(
          {sample, r->labels, std::nullopt, std::string(gold_source_name(GoldSource::SingleAnnotator))});
    }
  }
  return out;
}

std::vector<Assignment> AnnotationStore::queue(const std::string& annotator_id) const {
  const auto state = snapshot();
  std::vector<Assignment> out;
  for (const auto& a : state->assignments) {
    if (a.annotator_id == annotator_id && !state->current(a.sample_id, a.annotator_id)) out.push_back(a);
  }
  return out;
}

std::optional<Sample> AnnotationStore::sample(const std::string& sample_id) const {
  const auto state = snapshot();
  auto it = state->samples.find(sample_id);
  if (it == state->samples.end()) return std::nullopt;
  return it->second;
}

void write_gold(std::ostream& out, const GoldExport& gold) { write_labeled(out, gold.records); }

std::vector<LabeledSample> import_gold(std::istream& in) { return read_labeled(in); }

}  // namespace newsrisk
