#pragma once

#include "pds/config.hpp"
#include "pds/content_store.hpp"
#include "pds/workload.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pds {

struct Measurement {
    std::string user_id;
    double send_offset_ms = 0.0;      // actual dispatch time relative to run start
    std::optional<double> latency_ms; // present iff outcome == Ok
    Outcome outcome = Outcome::Ok;

    bool operator==(const Measurement&) const = default;
};

struct RunResult {
    RunConfig config;
    std::vector<Measurement> measurements;
    bool aborted = false;
    std::string abort_reason;

    bool operator==(const RunResult&) const = default;
};

struct SummaryStats {
    std::optional<double> mean_latency_ms;   // undefined when n_ok == 0
    std::optional<double> ci95_halfwidth_ms; // undefined when n_ok < 2
    std::optional<double> error_rate_pct;    // undefined for an empty run
    std::size_t n_ok = 0;
    std::size_t n_err = 0;

    bool operator==(const SummaryStats&) const = default;
};

/// Normal-approximation half width: 1.96 * sample stddev / sqrt(n).
constexpr double kZ95 = 1.96;

/// Builds the backend a RunConfig names. Simulated backends use `node`.
std::unique_ptr<Backend> make_backend(const RunConfig& config, const SimNodeConfig& node = {});

/// Executes one schedule. Users are independent requesters: each sends its
/// messages in order, a message going out at its offset or when the previous
/// response arrived, whichever is later; different users overlap.
///
/// On a SimulatedBackend this runs in virtual time starting at the node's
/// current clock, which is left at the end of the run (at least the schedule
/// duration). Remote backends run in wall-clock time, one thread per user,
/// with offsets divided by config.time_scale; a TransportError aborts the run
/// and the result keeps what was measured.
RunResult run_scenario(const RunConfig& config, const Schedule& schedule, Backend& backend);

/// Schedule for a RunConfig over the given traces.
Schedule schedule_for(const RunConfig& config, const std::vector<TraceRecord>& traces);

/// Runs configs strictly in order against one backend. After each run the
/// node drains for that run's drain_interval_s (an infinite interval resets
/// it); anything left over carries into the next run. Aborts are recorded and
/// the sweep continues.
std::vector<RunResult> run_sweep(const std::vector<RunConfig>& configs,
                                 const std::vector<TraceRecord>& traces, Backend& backend);

/// Small payloads for 10..100 users, then large payloads for 10..100.
std::vector<RunConfig> default_sweep(double drain_interval_s = 600.0, std::uint64_t seed = 1,
                                     std::size_t users_from = 10, std::size_t users_to = 100,
                                     std::size_t users_step = 10);

SummaryStats summarize(const RunResult& result);

constexpr double kTurningFactor = 5.0;

/// Reading of a sweep's shape.
struct SweepAnalysis {
    /// First large run with error rate above 5% or mean latency above
    /// kTurningFactor times that of the smallest large run.
    std::optional<std::size_t> large_turning_point_users;
    /// First large run in which every request failed.
    std::optional<std::size_t> large_total_failure_users;
    /// Every small run under 5% errors with mean latency at most 1.5x the
    /// smallest small run's.
    bool small_stable = false;
};
SweepAnalysis analyze_sweep(const std::vector<RunResult>& results);

/// One header line and one row per run:
/// label,n_users,payload,mean_latency_ms,ci95_halfwidth_ms,error_rate_pct,n_ok,n_err
/// Undefined statistics are empty cells.
std::string summary_csv(const std::vector<RunResult>& results);
/// Full measurement-level dump.
std::string results_json(const std::vector<RunResult>& results);

struct SummaryRow {
    std::string label;
    std::size_t n_users = 0;
    std::string payload;
    SummaryStats stats;

    bool operator==(const SummaryRow&) const = default;
};
std::vector<SummaryRow> parse_summary_csv(std::string_view csv);
std::vector<RunResult> parse_results_json(std::string_view json);

/// Writes via a temporary file in the same directory and a rename, so a
/// failure never leaves a partial file. Throws IoError naming the path.
void write_file_atomic(const std::string& path, std::string_view content);

} // namespace pds
