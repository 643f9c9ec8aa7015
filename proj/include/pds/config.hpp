#pragma once

#include "pds/record.hpp"
#include "pds/sim_node.hpp"
#include "pds/workload.hpp"

#include <string>
#include <string_view>

namespace pds {

/// One benchmark run.
struct RunConfig {
    std::string backend = "sim"; // sim | ipfs-gw | skynet-gw
    std::string gw_url;          // remote backends only
    std::size_t n_users = 10;
    RecordKind payload = RecordKind::Geolocation;
    std::uint64_t seed = 1;            // bus selection and payload bytes
    double drain_interval_s = 600.0;   // recovery after this run; inf = full reset
    std::string label;
    ScheduleTiming timing = ScheduleTiming::TraceTimed;
    double time_scale = 1.0;           // wall-clock compression for remote runs

    bool operator==(const RunConfig&) const = default;
};

/// Everything a config file can set.
struct BenchConfig {
    SimNodeConfig node;
    RunConfig run;
};

/// Accepts `key = value` lines (`#` comments) or one flat JSON object. Keys are
/// the SimNodeConfig and RunConfig field names; unknown keys and bad values
/// throw ConfigError. Settings are applied on top of `base`.
BenchConfig parse_config(std::string_view text, BenchConfig base = {});
BenchConfig load_config(const std::string& path, BenchConfig base = {});

/// Sets one field from its textual value. Throws ConfigError.
void apply_setting(BenchConfig& config, std::string_view key, std::string_view value);

std::string_view timing_label(ScheduleTiming timing);
ScheduleTiming parse_timing(std::string_view name);

} // namespace pds
