#include <doctest.h>

#include <fstream>

#include "flow_gen.hpp"
#include "oracles.hpp"
#include "promptlit/store.hpp"
#include "temp_dir.hpp"

using namespace promptlit;
using nlohmann::json;

namespace {

const Timestamp kT = parse_timestamp("2025-03-01T12:00:00Z");

void write_file(const std::filesystem::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << data;
}

StoreError::Kind store_kind(auto&& fn) {
  try {
    fn();
  } catch (const StoreError& e) {
    return e.kind();
  }
  FAIL("expected StoreError");
  return {};
}

}  // namespace

TEST_CASE("record encoding round trips and detects tampering") {
  PersistedRecord r{RecordKind::Label, json{{"a", 1}}, payload_checksum(json{{"a", 1}}), kT};
  const auto line = encode_record(r);
  CHECK(decode_record(line) == r);
  std::string tampered = line;
  tampered.replace(tampered.find("\"a\":1"), 5, "\"a\":2");
  CHECK_THROWS_AS(decode_record(tampered), CorruptRecord);
  CHECK_THROWS_AS(decode_record("{oops"), CorruptRecord);
  CHECK_THROWS_AS(decode_record(R"({"kind":"weird","payload":{},"checksum":"0","written_at":"2025-01-01T00:00:00Z"})"),
                  CorruptRecord);
}

TEST_CASE("a log truncated at any byte reopens to the complete-line prefix") {
  TempDir dir("trunc");
  const auto file = dir.path() / "log.ndjson";
  std::string full;
  {
    RecordLog log(file);
    for (int i = 0; i < 6; ++i) log.append(RecordKind::Event, json{{"i", i}, {"text", "line " + std::to_string(i)}}, kT);
    full = oracle::slurp(file.string());
  }
  for (std::size_t cut = 0; cut <= full.size(); ++cut) {
    const std::string part = full.substr(0, cut);
    write_file(file, part);
    RecordLog log(file);
    const auto complete = static_cast<std::size_t>(std::count(part.begin(), part.end(), '\n'));
    REQUIRE(log.size() == complete);
    for (std::size_t i = 0; i < complete; ++i) CHECK(log.records()[i].payload["i"] == static_cast<int>(i));
    // The torn tail is cut from the file so appends start on a clean line.
    CHECK(std::filesystem::file_size(file) == part.size() - log.discarded_tail_bytes());
    log.append(RecordKind::Event, json{{"i", 99}}, kT);
    RecordLog again(file);
    CHECK(again.size() == complete + 1);
  }
}

TEST_CASE("corruption before the last line is an error") {
  TempDir dir("corrupt");
  const auto file = dir.path() / "log.ndjson";
  {
    RecordLog log(file);
    for (int i = 0; i < 3; ++i) log.append(RecordKind::Event, json{{"i", i}}, kT);
  }
  std::string data = oracle::slurp(file.string());
  data[data.find("\"i\":0") + 4] = '7';
  write_file(file, data);
  CHECK_THROWS_AS(RecordLog{file}, CorruptRecord);
}

TEST_CASE("store persists sessions and rebuilds them by replay") {
  TempDir dir("persist");
  std::mt19937_64 rng(4);
  std::vector<std::vector<SessionEvent>> logs;
  {
    Store store(dir.path(), 0);
    for (int i = 0; i < 20; ++i) {
      logs.push_back(flowgen::random_legal_log(rng, 80, "s" + std::to_string(i)));
      for (const auto& e : logs.back()) CHECK(store.append_event(e, kT) == AppendOutcome::Appended);
    }
  }
  Store reopened(dir.path(), 0);
  CHECK_FALSE(reopened.loaded_from_snapshot());
  CHECK(reopened.sessions().size() == 20);
  for (const auto& log : logs) {
    CHECK(reopened.session(log.front().session_id) == replay(log));
    CHECK(reopened.events(log.front().session_id) == log);
  }
}

TEST_CASE("re-delivered events are no-ops and conflicting ones are rejected") {
  Store store;
  std::mt19937_64 rng(2);
  const auto log = flowgen::random_legal_log(rng, 30, "dup");
  for (const auto& e : log) store.append_event(e, kT);
  const auto before = store.record_count();
  for (const auto& e : log) CHECK(store.append_event(e, kT) == AppendOutcome::Duplicate);
  CHECK(store.record_count() == before);
  CHECK(store.session("dup") == replay(log));

  auto changed = log[1];
  changed.payload["extra"] = 1;
  CHECK(store_kind([&] { store.append_event(changed, kT); }) == StoreError::Kind::ConflictingEvent);
  auto restart = log[0];
  restart.payload["student_id"] = "someone-else";
  CHECK(store_kind([&] { store.append_event(restart, kT); }) == StoreError::Kind::DuplicateSession);
  auto orphan = log[1];
  orphan.session_id = "ghost";
  CHECK(store_kind([&] { store.append_event(orphan, kT); }) == StoreError::Kind::UnknownSession);
  // An illegal event leaves the store untouched.
  auto bad = log.back();
  bad.sequence_no = log.size() + 1;
  bad.kind = EventKind::Started;
  CHECK_THROWS(store.append_event(bad, kT));
  CHECK(store.record_count() == before);
}

TEST_CASE("snapshots are used on reopen and later events replay on top") {
  TempDir dir("snap");
  std::mt19937_64 rng(6);
  std::map<std::string, std::vector<SessionEvent>> logs;
  {
    Store store(dir.path(), 25);
    for (int i = 0; i < 8; ++i) {
      auto log = flowgen::random_legal_log(rng, 40, "p" + std::to_string(i));
      for (const auto& e : log) store.append_event(e, kT);
      logs[log.front().session_id] = log;
    }
  }
  CHECK(std::filesystem::exists(dir.path() / "snapshot.json"));
  {
    Store store(dir.path(), 25);
    CHECK(store.loaded_from_snapshot());
    for (const auto& [id, log] : logs) {
      CHECK(store.session(id) == replay(log));
      CHECK(store.events(id) == log);
    }
    // Continue one session after reopening.
    auto log = flowgen::random_legal_log(rng, 10, "late");
    for (const auto& e : log) store.append_event(e, kT);
    logs["late"] = log;
    store.snapshot(kT);
  }
  Store store(dir.path(), 25);
  CHECK(store.loaded_from_snapshot());
  CHECK(store.session("late") == replay(logs["late"]));

  // A damaged snapshot is ignored; the log alone rebuilds the same state.
  std::string snap = oracle::slurp((dir.path() / "snapshot.json").string());
  snap[snap.find("phase") + 9] ^= 1;
  write_file(dir.path() / "snapshot.json", snap);
  Store fallback(dir.path(), 25);
  CHECK_FALSE(fallback.loaded_from_snapshot());
  for (const auto& [id, log] : logs) CHECK(fallback.session(id) == replay(log));
}

TEST_CASE("labels persist and convert") {
  TempDir dir("labels");
  const std::vector<Label> labels = {
      HumanGrade{{"a", "s1", 1}, Dimension::Relevance, true},
      OpenEndedLabel{"stu", "OE1", "pre", 1},
      ExplanationRating{{"a", "s1", 1}, Dimension::Relevance, 0.5},
  };
  {
    Store store(dir.path());
    store.append_labels(labels, kT);
    store.record_config_version(json{{"port", 1}}, kT);
  }
  Store store(dir.path());
  CHECK(store.labels() == labels);
  CHECK(parse_label_csv(labels_to_csv(labels)) == labels);
  for (const auto& l : labels) CHECK(label_from_json(label_to_json(l)) == l);
}

TEST_CASE("label CSV errors name the row") {
  const std::string header = "type,session_id,scenario_id,attempt_index,dimension,student_id,item_id,occasion,value\n";
  auto error_of = [](const std::string& doc) {
    try {
      parse_label_csv(doc);
    } catch (const PreconditionError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(error_of("a,b\n").find("header") != std::string::npos);
  CHECK(error_of(header + "grade,a,s1,1,Relevance,,,,2\n").find("row 2") != std::string::npos);
  CHECK(error_of(header + "grade,a,s1,x,Relevance,,,,1\n").find("row 2") != std::string::npos);
  CHECK(error_of(header + "grade,a,s1,1,Vibes,,,,1\n").find("unknown dimension") != std::string::npos);
  CHECK(error_of(header + "oe_score,,,,,stu,OE1,mid,1\n").find("occasion") != std::string::npos);
  CHECK(error_of(header + "other,,,,,,,,1\n").find("unknown label type") != std::string::npos);
  CHECK(error_of(header + "explanation_rating,a,s1,1,Relevance,,,,high\n").find("row 2") != std::string::npos);
  CHECK(parse_label_csv(header).empty());
}
