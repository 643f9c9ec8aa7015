#pragma once

#include "pds/crypto.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace pds {

enum class RecordKind { Geolocation, Photo };

constexpr std::size_t kGeolocationPayloadSize = 100;
constexpr std::size_t kPhotoPayloadSize = 1048576;

/// One user-generated datum.
struct SensedRecord {
    std::string user_id;
    std::int64_t timestamp_ms = 0;
    RecordKind kind = RecordKind::Geolocation;
    Bytes payload;
    bool personal = true;
};

/// "small" / "large" on the command line, "geolocation" / "photo" accepted too.
RecordKind parse_record_kind(std::string_view name);
std::string_view payload_label(RecordKind kind); // "small" or "large"

} // namespace pds
