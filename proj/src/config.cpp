#include "pds/config.hpp"

#include "pds/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace pds {

namespace {

std::string_view trim(std::string_view s)
{
    const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && ws(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && ws(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

double to_double(std::string_view key, std::string_view v)
{
    if (v == "inf" || v == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    double out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
        throw ConfigError(std::string(key) + ": not a number: " + std::string(v));
    }
    return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v)
{
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
        throw ConfigError(std::string(key) + ": not a non-negative integer: " + std::string(v));
    }
    return out;
}

} // namespace

std::string_view timing_label(ScheduleTiming timing)
{
    return timing == ScheduleTiming::Uniform ? "uniform" : "trace";
}

ScheduleTiming parse_timing(std::string_view name)
{
    if (name == "trace") {
        return ScheduleTiming::TraceTimed;
    }
    if (name == "uniform") {
        return ScheduleTiming::Uniform;
    }
    throw ConfigError("unknown timing mode: " + std::string(name));
}

void apply_setting(BenchConfig& config, std::string_view key, std::string_view value)
{
    SimNodeConfig& n = config.node;
    RunConfig& r = config.run;
    value = trim(value);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
        value = value.substr(1, value.size() - 2);
    }

    if (key == "service_rate") {
        n.service_rate = to_double(key, value);
    } else if (key == "per_request_overhead") {
        n.per_request_overhead = to_double(key, value);
    } else if (key == "queue_capacity") {
        n.queue_capacity = to_uint(key, value);
    } else if (key == "request_timeout") {
        n.request_timeout = to_double(key, value);
    } else if (key == "backlog") {
        n.backlog = to_double(key, value);
    } else if (key == "rng_seed") {
        n.rng_seed = to_uint(key, value);
    } else if (key == "overload_efficiency") {
        n.overload_efficiency = to_double(key, value);
    } else if (key == "overhead_jitter") {
        n.overhead_jitter = to_double(key, value);
    } else if (key == "storage_budget") {
        n.storage_budget = to_uint(key, value);
    } else if (key == "backend") {
        if (value != "sim" && value != "ipfs-gw" && value != "skynet-gw") {
            throw ConfigError("backend must be sim, ipfs-gw or skynet-gw");
        }
        r.backend = std::string(value);
    } else if (key == "gw_url") {
        r.gw_url = std::string(value);
    } else if (key == "n_users") {
        r.n_users = to_uint(key, value);
    } else if (key == "payload") {
        r.payload = parse_record_kind(value);
    } else if (key == "seed") {
        r.seed = to_uint(key, value);
    } else if (key == "drain_interval_s") {
        r.drain_interval_s = to_double(key, value);
    } else if (key == "label") {
        r.label = std::string(value);
    } else if (key == "timing") {
        r.timing = parse_timing(value);
    } else if (key == "time_scale") {
        r.time_scale = to_double(key, value);
        if (!(r.time_scale > 0)) {
            throw ConfigError("time_scale must be positive");
        }
    } else {
        throw ConfigError("unknown config key: " + std::string(key));
    }
}

BenchConfig parse_config(std::string_view text, BenchConfig base)
{
    std::string_view body = trim(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad JSON config: ") + e.what());
        }
        for (const auto& [key, v] : j.items()) {
            std::string value = v.is_string() ? v.get<std::string>() : v.dump();
            apply_setting(base, key, value);
        }
    } else {
        std::istringstream in{std::string(text)};
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string_view l = line;
            if (auto hash = l.find('#'); hash != std::string_view::npos) {
                l = l.substr(0, hash);
            }
            l = trim(l);
            if (l.empty()) {
                continue;
            }
            auto eq = l.find('=');
            if (eq == std::string_view::npos) {
                throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
            }
            apply_setting(base, trim(l.substr(0, eq)), l.substr(eq + 1));
        }
    }
    base.node.validate();
    return base;
}

BenchConfig load_config(const std::string& path, BenchConfig base)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

} // namespace pds
