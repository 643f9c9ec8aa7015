#include "pds/bench.hpp"

#include "pds/errors.hpp"
#include "pds/remote_gateway.hpp"
#include "pds/sim_node.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <queue>
#include <sstream>
#include <thread>
#include <tuple>

namespace pds {

using ordered_json = nlohmann::ordered_json;

std::unique_ptr<Backend> make_backend(const RunConfig& config, const SimNodeConfig& node)
{
    if (config.backend == "sim") {
        return std::make_unique<SimulatedBackend>(node);
    }
    if (config.gw_url.empty()) {
        throw ConfigError("backend " + config.backend + " needs gw_url");
    }
    GatewayOptions options;
    options.base_url = config.gw_url;
    options.protocol = parse_gateway_protocol(config.backend);
    return std::make_unique<GatewayBackend>(std::move(options));
}

Schedule schedule_for(const RunConfig& config, const std::vector<TraceRecord>& traces)
{
    ScheduleOptions options;
    options.kind = config.payload;
    options.seed = config.seed;
    options.timing = config.timing;
    return build_schedule(traces, config.n_users, options);
}

namespace {

std::vector<std::vector<const ScheduleEntry*>> per_user(const Schedule& schedule)
{
    std::vector<std::vector<const ScheduleEntry*>> users(schedule.n_users);
    for (const ScheduleEntry& e : schedule.entries) {
        users.at(e.user).push_back(&e);
    }
    for (auto& u : users) {
        std::sort(u.begin(), u.end(), [](const ScheduleEntry* a, const ScheduleEntry* b) {
            return a->index < b->index;
        });
    }
    return users;
}

Measurement measure(const std::string& user_id, double offset, const PutReceipt& receipt)
{
    Measurement m;
    m.user_id = user_id;
    m.send_offset_ms = offset;
    m.outcome = receipt.outcome;
    if (receipt.ok()) {
        m.latency_ms = receipt.latency_ms;
    }
    return m;
}

RunResult run_virtual(const RunConfig& config, const Schedule& schedule, SimulatedBackend& node)
{
    RunResult result;
    result.config = config;
    result.measurements.reserve(schedule.entries.size());
    const double base = node.now_ms();
    const auto users = per_user(schedule);

    using Event = std::tuple<double, std::size_t, std::size_t>; // time, user, position
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
    for (std::size_t u = 0; u < users.size(); ++u) {
        if (!users[u].empty()) {
            events.emplace(base + static_cast<double>(users[u][0]->offset_ms), u, 0);
        }
    }

    double last_response = base;
    while (!events.empty()) {
        auto [t, u, pos] = events.top();
        events.pop();
        const ScheduleEntry& entry = *users[u][pos];
        SensedRecord record = synth_payload(schedule, entry, config.seed);
        PutReceipt receipt = node.put_at(t, record.payload);
        result.measurements.push_back(measure(record.user_id, t - base, receipt));

        const double response = t + receipt.latency_ms;
        last_response = std::max(last_response, response);
        if (pos + 1 < users[u].size()) {
            const double due = base + static_cast<double>(users[u][pos + 1]->offset_ms);
            events.emplace(std::max(due, response), u, pos + 1);
        }
    }
    node.advance_to(std::max(base + static_cast<double>(schedule.duration_ms), last_response));
    return result;
}

RunResult run_wall_clock(const RunConfig& config, const Schedule& schedule, Backend& backend)
{
    using clock = std::chrono::steady_clock;
    RunResult result;
    result.config = config;
    const auto users = per_user(schedule);
    const double scale = config.time_scale > 0 ? config.time_scale : 1.0;

    std::mutex sink_mutex;
    std::atomic<bool> abort{false};
    std::string abort_reason;
    const clock::time_point start = clock::now();
    auto since_start_ms = [&] {
        return std::chrono::duration<double, std::milli>(clock::now() - start).count();
    };

    std::vector<std::thread> threads;
    threads.reserve(users.size());
    for (std::size_t u = 0; u < users.size(); ++u) {
        threads.emplace_back([&, u] {
            for (const ScheduleEntry* entry : users[u]) {
                const auto due = start + std::chrono::duration_cast<clock::duration>(
                                             std::chrono::duration<double, std::milli>(
                                                 static_cast<double>(entry->offset_ms) / scale));
                std::this_thread::sleep_until(due);
                if (abort.load()) {
                    return;
                }
                SensedRecord record = synth_payload(schedule, *entry, config.seed);
                const double sent = since_start_ms();
                try {
                    PutReceipt receipt = backend.put(record.payload);
                    std::lock_guard lock(sink_mutex);
                    result.measurements.push_back(measure(record.user_id, sent, receipt));
                } catch (const TransportError& e) {
                    std::lock_guard lock(sink_mutex);
                    if (!abort.exchange(true)) {
                        abort_reason = e.what();
                    }
                    return;
                }
            }
        });
    }
    for (std::thread& t : threads) {
        t.join();
    }

    std::sort(result.measurements.begin(), result.measurements.end(),
              [](const Measurement& a, const Measurement& b) {
                  return std::tie(a.send_offset_ms, a.user_id) <
                         std::tie(b.send_offset_ms, b.user_id);
              });
    result.aborted = abort.load();
    result.abort_reason = abort_reason;
    return result;
}

} // namespace

RunResult run_scenario(const RunConfig& config, const Schedule& schedule, Backend& backend)
{
    if (schedule.n_users != config.n_users) {
        throw ConfigError("schedule has " + std::to_string(schedule.n_users) +
                          " users, config expects " + std::to_string(config.n_users));
    }
    if (auto* sim = dynamic_cast<SimulatedBackend*>(&backend)) {
        return run_virtual(config, schedule, *sim);
    }
    return run_wall_clock(config, schedule, backend);
}

std::vector<RunResult> run_sweep(const std::vector<RunConfig>& configs,
                                 const std::vector<TraceRecord>& traces, Backend& backend)
{
    std::vector<RunResult> results;
    results.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        if (i > 0) {
            const double interval = configs[i - 1].drain_interval_s;
            if (backend.kind() == BackendKind::Simulated) {
                drain(backend, interval);
            } else if (std::isfinite(interval) && interval > 0) {
                std::this_thread::sleep_for(std::chrono::duration<double>(
                    interval / configs[i - 1].time_scale));
            }
        }
        results.push_back(run_scenario(configs[i], schedule_for(configs[i], traces), backend));
    }
    return results;
}

std::vector<RunConfig> default_sweep(double drain_interval_s, std::uint64_t seed,
                                     std::size_t users_from, std::size_t users_to,
                                     std::size_t users_step)
{
    std::vector<RunConfig> out;
    for (RecordKind kind : {RecordKind::Geolocation, RecordKind::Photo}) {
        for (std::size_t n = users_from; n <= users_to; n += users_step) {
            RunConfig c;
            c.n_users = n;
            c.payload = kind;
            c.seed = seed;
            c.drain_interval_s = drain_interval_s;
            c.label = std::string(payload_label(kind)) + "-" + std::to_string(n);
            out.push_back(c);
            if (users_step == 0) {
                break;
            }
        }
    }
    return out;
}

SummaryStats summarize(const RunResult& result)
{
    SummaryStats s;
    double mean = 0.0;
    double m2 = 0.0;
    for (const Measurement& m : result.measurements) {
        if (m.outcome != Outcome::Ok) {
            ++s.n_err;
            continue;
        }
        ++s.n_ok;
        const double x = m.latency_ms.value();
        const double delta = x - mean;
        mean += delta / static_cast<double>(s.n_ok);
        m2 += delta * (x - mean);
    }
    const std::size_t total = s.n_ok + s.n_err;
    if (total > 0) {
        s.error_rate_pct = 100.0 * static_cast<double>(s.n_err) / static_cast<double>(total);
    }
    if (s.n_ok > 0) {
        s.mean_latency_ms = mean;
    }
    if (s.n_ok >= 2) {
        const double sd = std::sqrt(m2 / static_cast<double>(s.n_ok - 1));
        s.ci95_halfwidth_ms = kZ95 * sd / std::sqrt(static_cast<double>(s.n_ok));
    }
    return s;
}

SweepAnalysis analyze_sweep(const std::vector<RunResult>& results)
{
    SweepAnalysis a;
    std::optional<double> large_base;
    std::optional<double> small_base;
    bool any_small = false;
    bool small_ok = true;

    for (const RunResult& r : results) {
        const SummaryStats s = summarize(r);
        const double err = s.error_rate_pct.value_or(0.0);
        if (r.config.payload == RecordKind::Photo) {
            if (!large_base && s.mean_latency_ms) {
                large_base = s.mean_latency_ms;
            }
            const bool slow = s.mean_latency_ms && large_base && *s.mean_latency_ms > kTurningFactor * *large_base;
            if (!a.large_turning_point_users && (err > 5.0 || slow)) {
                a.large_turning_point_users = r.config.n_users;
            }
            if (!a.large_total_failure_users && s.n_err > 0 && s.n_ok == 0) {
                a.large_total_failure_users = r.config.n_users;
            }
        } else {
            any_small = true;
            if (!small_base && s.mean_latency_ms) {
                small_base = s.mean_latency_ms;
            }
            if (err >= 5.0 || !s.mean_latency_ms ||
                (small_base && *s.mean_latency_ms > 1.5 * *small_base)) {
                small_ok = false;
            }
        }
    }
    a.small_stable = any_small && small_ok;
    return a;
}

namespace {

std::string fmt(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string fmt(const std::optional<double>& v)
{
    return v ? fmt(*v) : std::string();
}

std::string run_label(const RunResult& r)
{
    if (!r.config.label.empty()) {
        return r.config.label;
    }
    return std::string(payload_label(r.config.payload)) + "-" + std::to_string(r.config.n_users);
}

std::optional<double> parse_cell(std::string_view cell)
{
    if (cell.empty()) {
        return std::nullopt;
    }
    double v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ConfigError("bad number in report: " + std::string(cell));
    }
    return v;
}

ordered_json opt_json(const std::optional<double>& v)
{
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> opt_from_json(const nlohmann::json& j)
{
    if (j.is_null()) {
        return std::nullopt;
    }
    return j.get<double>();
}

ordered_json interval_json(double v)
{
    return std::isfinite(v) ? ordered_json(v) : ordered_json("inf");
}

double interval_from_json(const nlohmann::json& j)
{
    if (j.is_string()) {
        return std::numeric_limits<double>::infinity();
    }
    return j.get<double>();
}

} // namespace

std::string summary_csv(const std::vector<RunResult>& results)
{
    std::string out =
        "label,n_users,payload,mean_latency_ms,ci95_halfwidth_ms,error_rate_pct,n_ok,n_err\n";
    for (const RunResult& r : results) {
        const SummaryStats s = summarize(r);
        out += run_label(r) + ',' + std::to_string(r.config.n_users) + ',' +
               std::string(payload_label(r.config.payload)) + ',' + fmt(s.mean_latency_ms) + ',' +
               fmt(s.ci95_halfwidth_ms) + ',' + fmt(s.error_rate_pct) + ',' +
               std::to_string(s.n_ok) + ',' + std::to_string(s.n_err) + '\n';
    }
    return out;
}

std::string results_json(const std::vector<RunResult>& results)
{
    ordered_json runs = ordered_json::array();
    for (const RunResult& r : results) {
        const SummaryStats s = summarize(r);
        ordered_json run;
        run["config"] = {{"label", run_label(r)},
                         {"backend", r.config.backend},
                         {"gw_url", r.config.gw_url},
                         {"n_users", r.config.n_users},
                         {"payload", payload_label(r.config.payload)},
                         {"seed", r.config.seed},
                         {"drain_interval_s", interval_json(r.config.drain_interval_s)},
                         {"timing", timing_label(r.config.timing)},
                         {"time_scale", r.config.time_scale}};
        run["aborted"] = r.aborted;
        run["abort_reason"] = r.abort_reason;
        run["summary"] = {{"mean_latency_ms", opt_json(s.mean_latency_ms)},
                          {"ci95_halfwidth_ms", opt_json(s.ci95_halfwidth_ms)},
                          {"error_rate_pct", opt_json(s.error_rate_pct)},
                          {"n_ok", s.n_ok},
                          {"n_err", s.n_err}};
        ordered_json ms = ordered_json::array();
        for (const Measurement& m : r.measurements) {
            ms.push_back({{"user_id", m.user_id},
                          {"send_offset_ms", m.send_offset_ms},
                          {"latency_ms", opt_json(m.latency_ms)},
                          {"outcome", status_code(m.outcome)}});
        }
        run["measurements"] = std::move(ms);
        runs.push_back(std::move(run));
    }
    ordered_json doc;
    doc["runs"] = std::move(runs);
    return doc.dump(1) + "\n";
}

std::vector<SummaryRow> parse_summary_csv(std::string_view csv)
{
    std::vector<SummaryRow> rows;
    std::istringstream in{std::string(csv)};
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.emplace_back();
        }
        if (cells.size() != 8) {
            throw ConfigError("summary row needs 8 cells: " + line);
        }
        SummaryRow row;
        row.label = cells[0];
        row.n_users = std::stoul(cells[1]);
        row.payload = cells[2];
        row.stats.mean_latency_ms = parse_cell(cells[3]);
        row.stats.ci95_halfwidth_ms = parse_cell(cells[4]);
        row.stats.error_rate_pct = parse_cell(cells[5]);
        row.stats.n_ok = std::stoul(cells[6]);
        row.stats.n_err = std::stoul(cells[7]);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<RunResult> parse_results_json(std::string_view text)
{
    const nlohmann::json doc = nlohmann::json::parse(text);
    std::vector<RunResult> out;
    for (const auto& run : doc.at("runs")) {
        RunResult r;
        const auto& c = run.at("config");
        r.config.label = c.at("label").get<std::string>();
        r.config.backend = c.at("backend").get<std::string>();
        r.config.gw_url = c.at("gw_url").get<std::string>();
        r.config.n_users = c.at("n_users").get<std::size_t>();
        r.config.payload = parse_record_kind(c.at("payload").get<std::string>());
        r.config.seed = c.at("seed").get<std::uint64_t>();
        r.config.drain_interval_s = interval_from_json(c.at("drain_interval_s"));
        r.config.timing = parse_timing(c.at("timing").get<std::string>());
        r.config.time_scale = c.at("time_scale").get<double>();
        r.aborted = run.at("aborted").get<bool>();
        r.abort_reason = run.at("abort_reason").get<std::string>();
        for (const auto& m : run.at("measurements")) {
            Measurement x;
            x.user_id = m.at("user_id").get<std::string>();
            x.send_offset_ms = m.at("send_offset_ms").get<double>();
            x.latency_ms = opt_from_json(m.at("latency_ms"));
            x.outcome = static_cast<Outcome>(m.at("outcome").get<int>());
            r.measurements.push_back(std::move(x));
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_file_atomic(const std::string& path, std::string_view content)
{
    namespace fs = std::filesystem;
    const std::string tmp = path + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + path);
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write failed for " + path);
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot replace " + path + ": " + ec.message());
    }
}

} // namespace pds
