#include "promptlit/store.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

#include "promptlit/csv.hpp"

namespace promptlit {

using nlohmann::json;

namespace {

json attempt_json(const AttemptRef& a) {
  return {{"session_id", a.session_id}, {"scenario_id", a.scenario_id}, {"attempt_index", a.attempt_index}};
}

AttemptRef attempt_from(const json& j) {
  return {j.at("session_id").get<std::string>(), j.at("scenario_id").get<std::string>(),
          j.at("attempt_index").get<int>()};
}

Dimension dimension_from(const std::string& name) {
  auto d = parse_dimension(name);
  if (!d) throw PreconditionError("unknown dimension '" + name + "'");
  return *d;
}

constexpr std::string_view kLabelHeader =
    "type,session_id,scenario_id,attempt_index,dimension,student_id,item_id,occasion,value";

}  // namespace

json label_to_json(const Label& label) {
  return std::visit(
      [](const auto& l) -> json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, HumanGrade>) {
          return {{"type", "grade"}, {"attempt", attempt_json(l.attempt)},
                  {"dimension", to_string(l.dimension)}, {"pass", l.pass}};
        } else if constexpr (std::is_same_v<T, OpenEndedLabel>) {
          return {{"type", "oe_score"}, {"student_id", l.student_id}, {"item_id", l.item_id},
                  {"occasion", l.occasion}, {"score", l.score}};
        } else {
          return {{"type", "explanation_rating"}, {"attempt", attempt_json(l.attempt)},
                  {"dimension", to_string(l.dimension)}, {"rating", l.rating}};
        }
      },
      label);
}

Label label_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "grade") {
    return HumanGrade{attempt_from(j.at("attempt")), dimension_from(j.at("dimension").get<std::string>()),
                      j.at("pass").get<bool>()};
  }
  if (type == "oe_score") {
    return OpenEndedLabel{j.at("student_id").get<std::string>(), j.at("item_id").get<std::string>(),
                          j.at("occasion").get<std::string>(), j.at("score").get<int>()};
  }
  if (type == "explanation_rating") {
    return ExplanationRating{attempt_from(j.at("attempt")), dimension_from(j.at("dimension").get<std::string>()),
                             j.at("rating").get<double>()};
  }
  throw PreconditionError("unknown label type '" + type + "'");
}

std::vector<Label> parse_label_csv(std::string_view document) {
  const auto rows = csv::parse(document);
  if (rows.empty() || text::join(rows.front(), ",") != kLabelHeader) {
    throw PreconditionError("label file must start with the header: " + std::string(kLabelHeader));
  }
  std::vector<Label> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::string where = "label row " + std::to_string(i + 1);
    if (r.size() != 9) throw PreconditionError(where + ": expected 9 fields");
    const std::string& type = r[0];
    const std::string value = text::trim(r[8]);
    try {
      if (type == "grade" || type == "explanation_rating") {
        AttemptRef a{r[1], r[2], std::stoi(r[3])};
        const Dimension d = dimension_from(r[4]);
        if (type == "grade") {
          if (value != "0" && value != "1") throw PreconditionError("grade value must be 0 or 1");
          out.emplace_back(HumanGrade{a, d, value == "1"});
        } else {
          std::size_t used = 0;
          const double rating = std::stod(value, &used);
          if (used != value.size()) throw PreconditionError("rating must be numeric");
          out.emplace_back(ExplanationRating{a, d, rating});
        }
      } else if (type == "oe_score") {
        if (value != "0" && value != "1") throw PreconditionError("OE score must be 0 or 1");
        if (r[7] != "pre" && r[7] != "post") throw PreconditionError("occasion must be pre or post");
        out.emplace_back(OpenEndedLabel{r[5], r[6], r[7], value == "1" ? 1 : 0});
      } else {
        throw PreconditionError("unknown label type '" + type + "'");
      }
    } catch (const PreconditionError& e) {
      throw PreconditionError(where + ": " + e.what());
    } catch (const std::logic_error& e) {
      throw PreconditionError(where + ": malformed number");
    }
  }
  return out;
}

std::string labels_to_csv(const std::vector<Label>& labels) {
  std::string out = std::string(kLabelHeader) + "\n";
  for (const auto& label : labels) {
    csv::Row row(9);
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, OpenEndedLabel>) {
            row = {"oe_score", "", "", "", "", l.student_id, l.item_id, l.occasion, std::to_string(l.score)};
          } else {
            row[1] = l.attempt.session_id;
            row[2] = l.attempt.scenario_id;
            row[3] = std::to_string(l.attempt.attempt_index);
            row[4] = std::string(to_string(l.dimension));
            if constexpr (std::is_same_v<T, HumanGrade>) {
              row[0] = "grade";
              row[8] = l.pass ? "1" : "0";
            } else {
              row[0] = "explanation_rating";
              row[8] = l.rating == 0.5 ? "0.5" : (l.rating == 1.0 ? "1" : (l.rating == 0.0 ? "0" : std::to_string(l.rating)));
            }
          }
        },
        label);
    out += csv::format_row(row);
  }
  return out;
}

Store::Store() = default;

Store::Store(const std::filesystem::path& data_dir, std::size_t snapshot_every)
    : dir_(data_dir), snapshot_every_(snapshot_every), log_(data_dir / "records.ndjson") {
  const auto& records = log_.records();
  std::size_t replay_from = 0;
  const auto snap_path = data_dir / "snapshot.json";
  if (std::filesystem::exists(snap_path)) {
    std::ifstream in(snap_path);
    std::stringstream buf;
    buf << in.rdbuf();
    json snap = json::parse(buf.str(), nullptr, false);
    if (!snap.is_discarded() && snap.contains("sessions") && snap.contains("record_count") &&
        snap.contains("checksum") &&
        snap["checksum"].get<std::uint32_t>() == payload_checksum(snap["sessions"]) &&
        snap["record_count"].get<std::size_t>() <= records.size()) {
      replay_from = snap["record_count"].get<std::size_t>();
      for (const auto& s : snap["sessions"]) {
        auto state = SessionState::from_json(s);
        states_[state.session_id] = state;
      }
      loaded_from_snapshot_ = true;
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i < replay_from) {
      // States come from the snapshot; keep the raw history.
      if (r.kind == RecordKind::Event) {
        auto e = SessionEvent::from_json(r.payload);
        events_[e.session_id].push_back(std::move(e));
      } else if (r.kind == RecordKind::Label) {
        for (const auto& l : r.payload.at("labels")) labels_.push_back(label_from_json(l));
      }
      continue;
    }
    apply_record(r);
  }
}

void Store::apply_record(const PersistedRecord& r) {
  if (r.kind == RecordKind::Event) {
    auto e = SessionEvent::from_json(r.payload);
    if (e.kind == EventKind::Started) {
      states_[e.session_id] = replay(std::span<const SessionEvent>(&e, 1));
    } else {
      auto it = states_.find(e.session_id);
      if (it == states_.end()) {
        throw StoreError(StoreError::Kind::UnknownSession, "log references unknown session " + e.session_id);
      }
      it->second = apply(it->second, e);
    }
    events_[e.session_id].push_back(std::move(e));
  } else if (r.kind == RecordKind::Label) {
    for (const auto& l : r.payload.at("labels")) labels_.push_back(label_from_json(l));
  }
}

AppendOutcome Store::append_event(const SessionEvent& event, Timestamp written_at) {
  std::unique_lock lock(mutex_);
  SessionState next;
  auto it = states_.find(event.session_id);
  if (event.kind == EventKind::Started) {
    if (it != states_.end()) {
      if (events_[event.session_id].front() == event) return AppendOutcome::Duplicate;
      throw StoreError(StoreError::Kind::DuplicateSession, "session " + event.session_id + " already exists");
    }
    next = replay(std::span<const SessionEvent>(&event, 1));
  } else {
    if (it == states_.end()) {
      throw StoreError(StoreError::Kind::UnknownSession, "unknown session " + event.session_id);
    }
    if (event.sequence_no >= 1 && event.sequence_no < it->second.next_sequence) {
      const auto& stored = events_[event.session_id][event.sequence_no - 1];
      if (stored == event) return AppendOutcome::Duplicate;
      throw StoreError(StoreError::Kind::ConflictingEvent,
                       "a different event is already stored at sequence " + std::to_string(event.sequence_no));
    }
    next = apply(it->second, event);
  }
  log_.append(RecordKind::Event, event.to_json(), written_at);
  states_[event.session_id] = std::move(next);
  events_[event.session_id].push_back(event);
  ++events_since_snapshot_;
  maybe_snapshot(written_at);
  return AppendOutcome::Appended;
}

void Store::append_labels(const std::vector<Label>& labels, Timestamp written_at) {
  std::unique_lock lock(mutex_);
  json payload = {{"labels", json::array()}};
  for (const auto& l : labels) payload["labels"].push_back(label_to_json(l));
  log_.append(RecordKind::Label, std::move(payload), written_at);
  labels_.insert(labels_.end(), labels.begin(), labels.end());
}

void Store::record_config_version(const json& config, Timestamp written_at) {
  std::unique_lock lock(mutex_);
  log_.append(RecordKind::ConfigVersion, config, written_at);
}

std::optional<SessionState> Store::session(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = states_.find(id);
  if (it == states_.end()) return std::nullopt;
  return it->second;
}

std::vector<SessionState> Store::sessions() const {
  std::shared_lock lock(mutex_);
  std::vector<SessionState> out;
  for (const auto& [_, s] : states_) out.push_back(s);
  return out;
}

std::vector<SessionEvent> Store::events(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = events_.find(id);
  return it == events_.end() ? std::vector<SessionEvent>{} : it->second;
}

std::vector<SessionEvent> Store::all_events() const {
  std::shared_lock lock(mutex_);
  std::vector<SessionEvent> out;
  for (const auto& [_, list] : events_) out.insert(out.end(), list.begin(), list.end());
  return out;
}

std::vector<Label> Store::labels() const {
  std::shared_lock lock(mutex_);
  return labels_;
}

std::size_t Store::record_count() const {
  std::shared_lock lock(mutex_);
  return log_.size();
}

void Store::maybe_snapshot(Timestamp written_at) {
  if (!dir_ || snapshot_every_ == 0 || events_since_snapshot_ < snapshot_every_) return;
  events_since_snapshot_ = 0;
  json sessions = json::array();
  for (const auto& [_, s] : states_) sessions.push_back(s.to_json());
  const json snap = {
      {"record_count", log_.size()},
      {"sessions", sessions},
      {"checksum", payload_checksum(sessions)},
  };
  const auto tmp = *dir_ / "snapshot.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << snap.dump() << '\n';
    if (!out) throw IoError("failed to write snapshot");
  }
  std::filesystem::rename(tmp, *dir_ / "snapshot.json");
  log_.append(RecordKind::Snapshot, {{"file", "snapshot.json"}, {"record_count", snap["record_count"]}}, written_at);
}

void Store::snapshot(Timestamp written_at) {
  std::unique_lock lock(mutex_);
  events_since_snapshot_ = snapshot_every_ == 0 ? 1 : snapshot_every_;
  const auto saved = snapshot_every_;
  if (snapshot_every_ == 0) snapshot_every_ = 1;
  maybe_snapshot(written_at);
  snapshot_every_ = saved;
}

}  // namespace promptlit
