#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include "promptlit/practice_flow.hpp"
#include "promptlit/record_log.hpp"

namespace promptlit {

/// Human pass/fail verdict for one (attempt, dimension).
struct HumanGrade {
  AttemptRef attempt;
  Dimension dimension = Dimension::Relevance;
  bool pass = false;
  friend bool operator==(const HumanGrade&, const HumanGrade&) = default;
};

/// Human 0/1 score for an open-ended test item.
struct OpenEndedLabel {
  std::string student_id;
  std::string item_id;
  std::string occasion;  // "pre" | "post"
  int score = 0;
  friend bool operator==(const OpenEndedLabel&, const OpenEndedLabel&) = default;
};

/// Rating of a grader explanation on the 1 / 0.5 / 0 scale.
struct ExplanationRating {
  AttemptRef attempt;
  Dimension dimension = Dimension::Relevance;
  double rating = 0;
  friend bool operator==(const ExplanationRating&, const ExplanationRating&) = default;
};

using Label = std::variant<HumanGrade, OpenEndedLabel, ExplanationRating>;

nlohmann::json label_to_json(const Label& label);
Label label_from_json(const nlohmann::json& j);

/// Label file: CSV with header
/// `type,session_id,scenario_id,attempt_index,dimension,student_id,item_id,occasion,value`
/// where type is grade | oe_score | explanation_rating.
std::vector<Label> parse_label_csv(std::string_view document);
std::string labels_to_csv(const std::vector<Label>& labels);

class StoreError : public Error {
 public:
  enum class Kind { UnknownSession, DuplicateSession, ConflictingEvent };
  StoreError(Kind kind, std::string message) : Error(std::move(message)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class AppendOutcome { Appended, Duplicate };

/// Event-sourced persistence: an append-only record log plus periodic
/// snapshot files. Session states are always rebuilt by replaying events.
class Store {
 public:
  /// In-memory store.
  Store();
  /// Persistent store under `data_dir` (records.ndjson, snapshot.json).
  explicit Store(const std::filesystem::path& data_dir, std::size_t snapshot_every = 200);

  /// Validates the event against the session state and appends it.
  /// Re-delivery of an already stored (session, sequence) event is a no-op.
  AppendOutcome append_event(const SessionEvent& event, Timestamp written_at);

  void append_labels(const std::vector<Label>& labels, Timestamp written_at);
  void record_config_version(const nlohmann::json& config, Timestamp written_at);

  std::optional<SessionState> session(const std::string& session_id) const;
  std::vector<SessionState> sessions() const;
  std::vector<SessionEvent> events(const std::string& session_id) const;
  /// Every event of every session, sessions in id order.
  std::vector<SessionEvent> all_events() const;
  std::vector<Label> labels() const;
  std::size_t record_count() const;

  /// Writes snapshot.json for the current state and logs a snapshot marker.
  void snapshot(Timestamp written_at);
  /// Whether the last open used a snapshot file.
  bool loaded_from_snapshot() const { return loaded_from_snapshot_; }

 private:
  void apply_record(const PersistedRecord& record);
  void maybe_snapshot(Timestamp written_at);

  mutable std::shared_mutex mutex_;
  std::optional<std::filesystem::path> dir_;
  std::size_t snapshot_every_ = 0;
  std::size_t events_since_snapshot_ = 0;
  bool loaded_from_snapshot_ = false;
  RecordLog log_;
  std::map<std::string, SessionState> states_;
  std::map<std::string, std::vector<SessionEvent>> events_;
  std::vector<Label> labels_;
};

}  // namespace promptlit
