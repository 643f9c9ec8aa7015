#include "pds/workload.hpp"

#include "pds/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace pds {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t payload_key(std::uint64_t seed, std::size_t user, std::size_t index)
{
    std::uint64_t s = seed;
    std::uint64_t k = splitmix64(s);
    s = k ^ (static_cast<std::uint64_t>(user) * 0x100000001b3ull);
    k = splitmix64(s);
    s = k ^ static_cast<std::uint64_t>(index);
    return splitmix64(s);
}

} // namespace

std::vector<TraceRecord> parse_traces(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::map<std::string, std::map<std::int64_t, TraceRecord>> by_bus;

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = trim(line);
        if (view.empty()) {
            continue;
        }
        if (!header_seen) {
            auto cols = split(view, ',');
            if (cols.size() != 4 || trim(cols[0]) != "bus_id" || trim(cols[1]) != "timestamp" ||
                trim(cols[2]) != "lat" || trim(cols[3]) != "lon") {
                throw ParseError(line_no, "expected header bus_id,timestamp,lat,lon");
            }
            header_seen = true;
            continue;
        }
        auto cols = split(view, ',');
        if (cols.size() != 4) {
            throw ParseError(line_no, "expected 4 columns, got " + std::to_string(cols.size()));
        }
        TraceRecord r;
        r.bus_id = std::string(trim(cols[0]));
        if (r.bus_id.empty()) {
            throw ParseError(line_no, "empty bus_id");
        }
        if (!parse_number(cols[1], r.timestamp)) {
            throw ParseError(line_no, "bad timestamp");
        }
        if (!parse_number(cols[2], r.lat) || !std::isfinite(r.lat) || r.lat < -90.0 ||
            r.lat > 90.0) {
            throw ParseError(line_no, "latitude out of range");
        }
        if (!parse_number(cols[3], r.lon) || !std::isfinite(r.lon) || r.lon < -180.0 ||
            r.lon > 180.0) {
            throw ParseError(line_no, "longitude out of range");
        }
        by_bus[r.bus_id].try_emplace(r.timestamp, r);
    }
    if (!header_seen) {
        throw ParseError(line_no == 0 ? 1 : line_no, "missing header");
    }

    std::vector<TraceRecord> out;
    for (auto& [bus, points] : by_bus) {
        for (auto& [ts, r] : points) {
            out.push_back(std::move(r));
        }
    }
    if (out.empty()) {
        throw EmptyTrace("trace file has no data rows");
    }
    return out;
}

std::vector<TraceRecord> load_traces(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    return parse_traces(in);
}

void write_traces_csv(std::ostream& out, const std::vector<TraceRecord>& records)
{
    out << "bus_id,timestamp,lat,lon\n";
    char buf[64];
    for (const TraceRecord& r : records) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.lat, r.lon);
        out << r.bus_id << ',' << r.timestamp << ',' << buf << '\n';
    }
}

Schedule build_schedule(const std::vector<TraceRecord>& traces, std::size_t n_users,
                        const ScheduleOptions& options)
{
    if (options.msgs_per_user == 0 || options.duration_ms <= 0) {
        throw InsufficientTraces("schedule needs at least one message and a positive duration");
    }

    std::map<std::string, std::vector<const TraceRecord*>> by_bus;
    for (const TraceRecord& r : traces) {
        by_bus[r.bus_id].push_back(&r);
    }
    for (auto& [bus, pts] : by_bus) {
        std::stable_sort(pts.begin(), pts.end(), [](const TraceRecord* a, const TraceRecord* b) {
            return a->timestamp < b->timestamp;
        });
    }

    std::vector<std::string> ids;
    ids.reserve(by_bus.size());
    for (const auto& [bus, pts] : by_bus) {
        ids.push_back(bus);
    }
    std::mt19937_64 rng(options.seed);
    for (std::size_t i = ids.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(ids[i - 1], ids[pick(rng)]);
    }

    Schedule schedule;
    schedule.duration_ms = options.duration_ms;
    schedule.n_users = n_users;

    for (const std::string& bus : ids) {
        if (schedule.bus_ids.size() == n_users) {
            break;
        }
        const auto& pts = by_bus[bus];
        std::size_t best_start = 0;
        std::size_t best_count = 0;
        std::size_t end = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            end = std::max(end, i);
            while (end < pts.size() &&
                   (pts[end]->timestamp - pts[i]->timestamp) * 1000 < options.duration_ms) {
                ++end;
            }
            if (end - i > best_count) {
                best_count = end - i;
                best_start = i;
            }
        }
        if (best_count < options.msgs_per_user) {
            continue;
        }
        const std::size_t user = schedule.bus_ids.size();
        schedule.bus_ids.push_back(bus);
        const std::int64_t start = pts[best_start]->timestamp;
        for (std::size_t k = 0; k < options.msgs_per_user; ++k) {
            const TraceRecord& p = *pts[best_start + k];
            ScheduleEntry e;
            e.user = user;
            e.index = k;
            e.kind = options.kind;
            e.point = p;
            if (options.timing == ScheduleTiming::TraceTimed) {
                e.offset_ms = (p.timestamp - start) * 1000;
            } else {
                const std::int64_t period = options.duration_ms /
                                            static_cast<std::int64_t>(options.msgs_per_user);
                e.offset_ms = static_cast<std::int64_t>(k) * period +
                              static_cast<std::int64_t>(user) * period /
                                  static_cast<std::int64_t>(n_users);
            }
            schedule.entries.push_back(std::move(e));
        }
    }

    if (schedule.bus_ids.size() < n_users) {
        throw InsufficientTraces("need " + std::to_string(n_users) + " buses with " +
                                 std::to_string(options.msgs_per_user) +
                                 " points in a window, found " +
                                 std::to_string(schedule.bus_ids.size()));
    }
    std::sort(schedule.entries.begin(), schedule.entries.end(),
              [](const ScheduleEntry& a, const ScheduleEntry& b) {
                  return std::tie(a.offset_ms, a.user, a.index) <
                         std::tie(b.offset_ms, b.user, b.index);
              });
    return schedule;
}

SensedRecord synth_payload(RecordKind kind, const TraceRecord& point, std::uint64_t seed,
                           std::size_t user, std::size_t index)
{
    SensedRecord rec;
    rec.user_id = point.bus_id;
    rec.timestamp_ms = point.timestamp * 1000;
    rec.kind = kind;
    rec.personal = true;

    if (kind == RecordKind::Geolocation) {
        char buf[128];
        int n = std::snprintf(buf, sizeof buf, "{\"lat\":%.6f,\"lon\":%.6f,\"ts\":%lld,\"pad\":\"",
                              point.lat, point.lon, static_cast<long long>(point.timestamp));
        std::string s(buf, static_cast<std::size_t>(n));
        if (s.size() + 2 > kGeolocationPayloadSize) {
            throw std::logic_error("geolocation record does not fit in 100 bytes");
        }
        s.append(kGeolocationPayloadSize - 2 - s.size(), ' ');
        s += "\"}";
        rec.payload.assign(s.begin(), s.end());
        return rec;
    }

    rec.payload.resize(kPhotoPayloadSize);
    std::uint64_t state = payload_key(seed, user, index);
    for (std::size_t i = 0; i < kPhotoPayloadSize; i += 8) {
        std::uint64_t v = splitmix64(state);
        for (int b = 0; b < 8; ++b) {
            rec.payload[i + b] = static_cast<std::uint8_t>(v >> (8 * b));
        }
    }
    return rec;
}

SensedRecord synth_payload(const Schedule& schedule, const ScheduleEntry& entry,
                           std::uint64_t seed)
{
    SensedRecord rec = synth_payload(entry.kind, entry.point, seed, entry.user, entry.index);
    rec.user_id = schedule.user_id(entry.user);
    return rec;
}

std::string schedule_to_json(const Schedule& schedule)
{
    nlohmann::ordered_json j;
    j["n_users"] = schedule.n_users;
    j["duration_ms"] = schedule.duration_ms;
    j["bus_ids"] = schedule.bus_ids;
    auto& entries = j["entries"] = nlohmann::ordered_json::array();
    for (const ScheduleEntry& e : schedule.entries) {
        entries.push_back({{"offset_ms", e.offset_ms},
                           {"user_id", schedule.user_id(e.user)},
                           {"index", e.index},
                           {"kind", payload_label(e.kind)},
                           {"timestamp", e.point.timestamp}});
    }
    return j.dump(2);
}

std::vector<TraceRecord> synthesize_traces(std::size_t n_buses, std::uint64_t seed,
                                           std::int64_t span_s)
{
    constexpr std::int64_t kEpochBase = 1390557600; // 2014-01-24 10:00 UTC
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    // micro-degrees, the CSV resolution, so a written trace parses back equal
    auto quantize = [](double deg) { return std::round(deg * 1e6) / 1e6; };

    std::vector<TraceRecord> out;
    for (std::size_t b = 0; b < n_buses; ++b) {
        char id[16];
        std::snprintf(id, sizeof id, "B%05zu", 10000 + b * 7);
        double lat = uniform(-22.98, -22.85);
        double lon = uniform(-43.35, -43.15);
        double heading = uniform(0.0, 2.0 * M_PI);
        double t = uniform(0.0, 600.0);
        while (t < static_cast<double>(span_s)) {
            out.push_back({id, kEpochBase + static_cast<std::int64_t>(t), quantize(lat), quantize(lon)});
            heading += uniform(-0.5, 0.5);
            lat = std::clamp(lat + 0.002 * std::sin(heading), -23.05, -22.75);
            lon = std::clamp(lon + 0.002 * std::cos(heading), -43.55, -43.10);
            t += uniform(35.0, 85.0);
            if (unit(rng) < 0.05) {
                t += uniform(60.0, 240.0);
            }
        }
    }
    return out;
}

std::size_t convert_riobuses(std::istream& in, std::ostream& out)
{
    out << "bus_id,timestamp,lat,lon\n";
    std::string line;
    std::size_t written = 0;
    char buf[64];
    while (std::getline(in, line)) {
        auto cols = split(trim(line), ',');
        if (cols.size() < 6) {
            continue;
        }
        int mo = 0, d = 0, y = 0, h = 0, mi = 0, s = 0;
        std::string date(trim(cols[0]));
        std::string time(trim(cols[1]));
        if (std::sscanf(date.c_str(), "%d-%d-%d", &mo, &d, &y) != 3 ||
            std::sscanf(time.c_str(), "%d:%d:%d", &h, &mi, &s) != 3) {
            continue; // header or garbage
        }
        double lat = 0, lon = 0;
        if (!parse_number(cols[4], lat) || !parse_number(cols[5], lon) || lat < -90 ||
            lat > 90 || lon < -180 || lon > 180) {
            continue;
        }
        std::tm tm{};
        tm.tm_year = y - 1900;
        tm.tm_mon = mo - 1;
        tm.tm_mday = d;
        tm.tm_hour = h;
        tm.tm_min = mi;
        tm.tm_sec = s;
        const std::int64_t ts = timegm(&tm);
        std::snprintf(buf, sizeof buf, "%.6f,%.6f", lat, lon);
        out << trim(cols[2]) << ',' << ts << ',' << buf << '\n';
        ++written;
    }
    return written;
}

} // namespace pds
