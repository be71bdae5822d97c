#include "promptlit/record_log.hpp"

#include <boost/crc.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace promptlit {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kKindNames = {"event", "snapshot", "label", "config-version"};

std::optional<RecordKind> parse_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<RecordKind>(i);
  }
  return std::nullopt;
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

}  // namespace

std::string_view to_string(RecordKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::uint32_t payload_checksum(const json& payload) {
  const std::string bytes = payload.dump();
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::string encode_record(const PersistedRecord& r) {
  json line = {
      {"kind", to_string(r.kind)},
      {"payload", r.payload},
      {"checksum", hex32(r.checksum)},
      {"written_at", format_timestamp(r.written_at)},
  };
  return line.dump();
}

PersistedRecord decode_record(std::string_view line) {
  json doc = json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw CorruptRecord("record is not a JSON object");
  try {
    PersistedRecord r;
    const auto kind = parse_kind(doc.at("kind").get<std::string>());
    if (!kind) throw CorruptRecord("unknown record kind");
    r.kind = *kind;
    r.payload = doc.at("payload");
    r.checksum = static_cast<std::uint32_t>(std::stoul(doc.at("checksum").get<std::string>(), nullptr, 16));
    r.written_at = parse_timestamp(doc.at("written_at").get<std::string>());
    if (payload_checksum(r.payload) != r.checksum) throw CorruptRecord("record checksum mismatch");
    return r;
  } catch (const CorruptRecord&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptRecord(std::string("malformed record: ") + e.what());
  }
}

RecordLog::RecordLog(std::filesystem::path file) : file_(std::move(file)) {
  if (file_->has_parent_path()) std::filesystem::create_directories(file_->parent_path());
  if (!std::filesystem::exists(*file_)) {
    std::ofstream create(*file_, std::ios::binary);
    if (!create) throw IoError("cannot create record log " + file_->string());
    return;
  }
  std::ifstream in(*file_, std::ios::binary);
  if (!in) throw IoError("cannot open record log " + file_->string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();

  std::size_t good_end = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    const auto nl = data.find('\n', pos);
    const bool last = nl == std::string::npos || nl + 1 == data.size();
    if (nl == std::string::npos) break;  // torn tail without newline
    try {
      records_.push_back(decode_record(std::string_view(data).substr(pos, nl - pos)));
      good_end = nl + 1;
    } catch (const CorruptRecord& e) {
      if (!last) {
        throw CorruptRecord("record log " + file_->string() + " is corrupt at byte " + std::to_string(pos) + ": " +
                            e.what());
      }
      break;
    }
    pos = nl + 1;
  }
  if (good_end < data.size()) {
    discarded_tail_ = data.size() - good_end;
    std::filesystem::resize_file(*file_, good_end);
  }
}

const PersistedRecord& RecordLog::append(RecordKind kind, json payload, Timestamp written_at) {
  PersistedRecord r;
  r.kind = kind;
  r.checksum = payload_checksum(payload);
  r.payload = std::move(payload);
  r.written_at = written_at;
  if (file_) {
    std::ofstream out(*file_, std::ios::binary | std::ios::app);
    out << encode_record(r) << '\n';
    out.flush();
    if (!out) throw IoError("failed to append to record log " + file_->string());
  }
  records_.push_back(std::move(r));
  return records_.back();
}

}  // namespace promptlit
