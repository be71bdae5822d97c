#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "promptlit/domain.hpp"

namespace promptlit {

enum class RecordKind : std::uint8_t { Event, Snapshot, Label, ConfigVersion };
std::string_view to_string(RecordKind k);

/// One line of the append-only log.
struct PersistedRecord {
  RecordKind kind = RecordKind::Event;
  nlohmann::json payload;
  std::uint32_t checksum = 0;
  Timestamp written_at{};

  friend bool operator==(const PersistedRecord&, const PersistedRecord&) = default;
};

/// CRC-32 of the compact JSON dump of `payload`.
std::uint32_t payload_checksum(const nlohmann::json& payload);

std::string encode_record(const PersistedRecord& record);
/// Throws CorruptRecord on malformed JSON or checksum mismatch.
PersistedRecord decode_record(std::string_view line);

class CorruptRecord : public Error {
 public:
  using Error::Error;
};

/// Newline-delimited record file. Records are only ever appended; a torn
/// final line left by a crash is dropped (and cut from the file) on open.
class RecordLog {
 public:
  /// In-memory log with no backing file.
  RecordLog() = default;
  explicit RecordLog(std::filesystem::path file);

  const std::vector<PersistedRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  /// Bytes discarded from a torn tail when the file was opened.
  std::size_t discarded_tail_bytes() const { return discarded_tail_; }
  const std::optional<std::filesystem::path>& file() const { return file_; }

  /// Fills in the checksum, appends, and flushes to disk.
  const PersistedRecord& append(RecordKind kind, nlohmann::json payload, Timestamp written_at);

 private:
  std::optional<std::filesystem::path> file_;
  std::vector<PersistedRecord> records_;
  std::size_t discarded_tail_ = 0;
};

}  // namespace promptlit
