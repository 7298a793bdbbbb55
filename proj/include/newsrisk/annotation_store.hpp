#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "newsrisk/dataset.hpp"
#include "newsrisk/risk_factor.hpp"
#include "newsrisk/timestamp.hpp"

namespace newsrisk {

enum class Batch { Calibration, Solo };
std::string_view batch_name(Batch b);
Batch parse_batch(std::string_view name);

struct Assignment {
  std::string sample_id;
  std::string annotator_id;
  Batch batch = Batch::Solo;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

enum class RecordStatus { Draft, Submitted, Rejected };
std::string_view status_name(RecordStatus s);
RecordStatus parse_status(std::string_view name);

struct AnnotationRecord {
  std::string sample_id;
  std::string annotator_id;
  RiskLabelSet labels;
  bool no_risk_confirmed = false;
  Timestamp submitted_at{};
  RecordStatus status = RecordStatus::Submitted;
  /// Required for Rejected (wrong mention, low-quality text).
  std::string reason;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

enum class GoldSource { Adjudicated, SingleAnnotator };
std::string_view gold_source_name(GoldSource s);

struct GoldRecord {
  std::string sample_id;
  RiskLabelSet labels;
  std::string adjudicated_by;
  GoldSource source = GoldSource::Adjudicated;
  Timestamp decided_at{};

  friend bool operator==(const GoldRecord&, const GoldRecord&) = default;
};

struct Flag {
  std::string sample_id;
  std::string flagged_by;
  std::string reason;
  Timestamp flagged_at{};

  friend bool operator==(const Flag&, const Flag&) = default;
};

struct FactorConflict {
  RiskFactor factor;
  std::vector<std::string> positive;
  std::vector<std::string> negative;

  friend bool operator==(const FactorConflict&, const FactorConflict&) = default;
};

/// Conflicts only for factors where annotators split; empty means unanimous.
struct DisagreementReport {
  std::string sample_id;
  std::vector<std::string> annotators;
  std::vector<FactorConflict> conflicts;

  bool unanimous() const { return conflicts.empty(); }
};

struct AgreementStats {
  std::size_t eligible_samples = 0;
  /// Annotator pairs with at least one shared calibration submission.
  std::size_t annotator_pairs = 0;
  /// Share of agreeing (sample, annotator pair) comparisons.
  std::array<double, kNumFactors> raw_agreement{};
  /// Two-rater Cohen's kappa per annotator pair, averaged over pairs.
  std::array<double, kNumFactors> kappa{};
};

struct GoldExport {
  /// Sorted by sample_id.
  std::vector<LabeledSample> records;
  std::size_t excluded_calibration = 0;
  std::size_t excluded_rejected = 0;
  std::size_t unlabeled = 0;
};

/// Current view of the store. Records and gold keep full history; the current
/// value is the last element.
struct AnnotationState {
  std::vector<std::string> sample_order;
  std::map<std::string, Sample> samples;
  std::map<std::string, Batch> batches;
  std::vector<Assignment> assignments;
  /// (sample_id, annotator_id) -> every record in submission order.
  std::map<std::pair<std::string, std::string>, std::vector<AnnotationRecord>> records;
  std::map<std::string, std::vector<Flag>> flags;
  std::map<std::string, std::vector<GoldRecord>> gold;

  bool has_assignment(const std::string& sample_id, const std::string& annotator_id) const;
  /// Latest Submitted or Rejected record; drafts never count.
  const AnnotationRecord* current(const std::string& sample_id, const std::string& annotator_id) const;
  /// Current Submitted records for a sample, ordered by annotator.
  std::vector<const AnnotationRecord*> submissions(const std::string& sample_id) const;
  const GoldRecord* current_gold(const std::string& sample_id) const;
  std::vector<std::string> annotators_of(const std::string& sample_id) const;

  nlohmann::json to_json() const;
  static AnnotationState from_json(const nlohmann::json& j);

  friend bool operator==(const AnnotationState&, const AnnotationState&) = default;
};

struct StoreOptions {
  /// Rewrite the log as one snapshot after this many appended events (0 = never).
  std::size_t compact_every = 1000;
  std::function<Timestamp()> clock;
};

/// File-backed annotation store. Every mutation is validated, appended to
/// `<dir>/annotations.log` as one JSON line, then applied; opening a store
/// replays the log, ignoring a torn final line. Mutations serialize through
/// one writer; readers work on immutable snapshots.
class AnnotationStore {
 public:
  explicit AnnotationStore(std::filesystem::path dir, StoreOptions options = {});
  ~AnnotationStore();
  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  static constexpr std::string_view kLogName = "annotations.log";

  /// First calibration_count samples go to every annotator, the rest round-robin.
  /// Throws ValidationError on no annotators, duplicate annotators or samples,
  /// already-enqueued samples or calibration_count > samples.
  std::vector<Assignment> enqueue(const std::vector<Sample>& samples, const std::vector<std::string>& annotators,
                                  std::size_t calibration_count);

  /// Throws AuthorizationError without a matching assignment and
  /// ValidationError when labels and no_risk_confirmed disagree or a
  /// rejection lacks a reason.
  AnnotationRecord submit(AnnotationRecord record);

  /// Throws NotFoundError for an unknown sample.
  Flag flag(const std::string& sample_id, const std::string& flagged_by, const std::string& reason);

  /// Throws NotFoundError for an unknown sample, PreconditionError for fewer
  /// than 2 submissions.
  DisagreementReport disagreements(const std::string& sample_id) const;

  /// Allowed for calibration samples with at least 2 submissions and for flagged
  /// samples; otherwise PreconditionError.
  GoldRecord adjudicate(const std::string& sample_id, const RiskLabelSet& labels, const std::string& adjudicator);

  /// Over calibration samples with at least 2 submissions; PreconditionError if none.
  AgreementStats agreement_stats() const;

  GoldExport export_gold() const;

  /// Pending assignments (no Submitted or Rejected record) in ingest order.
  std::vector<Assignment> queue(const std::string& annotator_id) const;
  std::optional<Sample> sample(const std::string& sample_id) const;

  std::shared_ptr<const AnnotationState> snapshot() const;
  /// Rewrites the log as a single snapshot event via temp file and rename.
  void compact();

  const std::filesystem::path& log_path() const { return log_path_; }
  std::size_t events_since_compaction() const;

 private:
  void replay();
  void commit(const nlohmann::json& event);
  void rewrite_log();
  void open_log();
  Timestamp now() const;

  std::filesystem::path dir_;
  std::filesystem::path log_path_;
  StoreOptions options_;
  int fd_ = -1;
  std::size_t events_ = 0;

  mutable std::mutex writer_;
  mutable std::mutex publish_;
  std::shared_ptr<const AnnotationState> state_;
};

/// Applies one log event to `state`. Shared by live mutation and replay.
void apply_event(AnnotationState& state, const nlohmann::json& event);

nlohmann::json to_json(const AnnotationRecord& r);
AnnotationRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GoldRecord& g);
nlohmann::json to_json(const DisagreementReport& r);
nlohmann::json to_json(const AgreementStats& s);

/// Gold file format is the labeled-sample record format with `source`.
void write_gold(std::ostream& out, const GoldExport& gold);
std::vector<LabeledSample> import_gold(std::istream& in);

}  // namespace newsrisk
