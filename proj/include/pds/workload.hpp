#pragma once

#include "pds/record.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pds {

struct TraceRecord {
    std::string bus_id;
    std::int64_t timestamp = 0; // epoch seconds
    double lat = 0.0;
    double lon = 0.0;

    bool operator==(const TraceRecord&) const = default;
};

/// CSV with header `bus_id,timestamp,lat,lon`. Output is grouped by bus id
/// (lexicographic) and sorted by timestamp within a bus; duplicate
/// (bus, timestamp) rows keep the first occurrence. Throws ParseError with
/// the 1-based line number, EmptyTrace when no data rows remain.
std::vector<TraceRecord> parse_traces(std::istream& in);
std::vector<TraceRecord> load_traces(const std::string& path);

/// Writes the same CSV format parse_traces reads.
void write_traces_csv(std::ostream& out, const std::vector<TraceRecord>& records);

enum class ScheduleTiming {
    TraceTimed, // real timestamps inside each bus's densest window
    Uniform,    // one message per minute per user, users staggered
};

struct ScheduleOptions {
    std::size_t msgs_per_user = 15;
    std::int64_t duration_ms = 900000;
    RecordKind kind = RecordKind::Geolocation;
    std::uint64_t seed = 1;
    ScheduleTiming timing = ScheduleTiming::TraceTimed;
};

struct ScheduleEntry {
    std::int64_t offset_ms = 0;
    std::size_t user = 0;       // 0-based, position in the bus selection
    std::size_t index = 0;      // message number within the user, 0-based
    RecordKind kind = RecordKind::Geolocation;
    TraceRecord point;          // the trace point the message reports

    bool operator==(const ScheduleEntry&) const = default;
};

struct Schedule {
    std::vector<ScheduleEntry> entries; // sorted by (offset, user, index)
    std::vector<std::string> bus_ids;   // user i rides bus_ids[i]
    std::int64_t duration_ms = 900000;
    std::size_t n_users = 0;

    bool operator==(const Schedule&) const = default;
    std::string user_id(std::size_t user) const { return "user-" + bus_ids.at(user); }
};

/// Buses are shuffled by `seed` and the first n_users that have at least
/// msgs_per_user points inside some duration-long window are taken. For each,
/// the window starting at the trace point that covers the most points is used
/// (earliest on ties) and its first msgs_per_user points become messages,
/// timed relative to the window start. Throws InsufficientTraces.
Schedule build_schedule(const std::vector<TraceRecord>& traces, std::size_t n_users,
                        const ScheduleOptions& options = {});

/// Geolocation: `{"lat":..,"lon":..,"ts":..,"pad":"   "}` padded to exactly
/// 100 bytes. Photo: 1 MiB of pseudo-random bytes. Both deterministic in
/// (seed, user, index).
SensedRecord synth_payload(RecordKind kind, const TraceRecord& point, std::uint64_t seed,
                           std::size_t user, std::size_t index);
SensedRecord synth_payload(const Schedule& schedule, const ScheduleEntry& entry,
                           std::uint64_t seed);

std::string schedule_to_json(const Schedule& schedule);

/// Synthetic bus traces over central Rio de Janeiro: `n_buses` buses, each
/// starting within the first ten minutes and reporting every 35-85 s (with
/// occasional longer gaps) for `span_s` seconds.
std::vector<TraceRecord> synthesize_traces(std::size_t n_buses, std::uint64_t seed,
                                           std::int64_t span_s = 4200);

/// Converts a raw RioBuses dump (columns date,time,order,line,lat,lon,speed;
/// date as MM-DD-YYYY, time as HH:MM:SS, local time taken as UTC) into the
/// trace CSV. Rows that do not parse are skipped; returns rows written.
std::size_t convert_riobuses(std::istream& in, std::ostream& out);

} // namespace pds
