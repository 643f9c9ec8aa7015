#include "pds/bench.hpp"
#include "pds/config.hpp"
#include "pds/errors.hpp"
#include "pds/workload.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef PDS_DATA_DIR
#define PDS_DATA_DIR "data"
#endif

namespace {

struct Common {
    std::string config_path;
    std::string trace_path = PDS_DATA_DIR "/rio_buses_excerpt.csv";
    std::string out_dir;
    std::optional<std::string> backend;
    std::optional<std::string> gw_url;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> timing;
    std::optional<double> time_scale;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--config", c.config_path, "key=value or JSON config file");
    cmd->add_option("--trace", c.trace_path, "trace CSV (bus_id,timestamp,lat,lon)");
    cmd->add_option("--out", c.out_dir, "directory for summary.csv and results.json");
    cmd->add_option("--backend", c.backend, "sim, ipfs-gw or skynet-gw");
    cmd->add_option("--gw-url", c.gw_url, "gateway base URL for remote backends");
    cmd->add_option("--seed", c.seed, "schedule and payload seed");
    cmd->add_option("--timing", c.timing, "trace or uniform");
    cmd->add_option("--time-scale", c.time_scale, "wall-clock speed-up for remote runs");
}

pds::BenchConfig resolve(const Common& c)
{
    pds::BenchConfig cfg;
    if (!c.config_path.empty()) {
        cfg = pds::load_config(c.config_path);
    }
    if (c.backend) {
        pds::apply_setting(cfg, "backend", *c.backend);
    }
    if (c.gw_url) {
        pds::apply_setting(cfg, "gw_url", *c.gw_url);
    }
    if (c.seed) {
        cfg.run.seed = *c.seed;
    }
    if (c.timing) {
        pds::apply_setting(cfg, "timing", *c.timing);
    }
    if (c.time_scale) {
        pds::apply_setting(cfg, "time_scale", std::to_string(*c.time_scale));
    }
    return cfg;
}

void emit(const std::vector<pds::RunResult>& results, const std::string& out_dir)
{
    const std::string csv = pds::summary_csv(results);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        pds::write_file_atomic(out_dir + "/summary.csv", csv);
        pds::write_file_atomic(out_dir + "/results.json", pds::results_json(results));
    }
    std::cout << csv;
}

int exit_code(const std::vector<pds::RunResult>& results)
{
    for (const auto& r : results) {
        if (r.aborted) {
            std::cerr << "run " << r.config.label << " aborted: " << r.abort_reason << "\n";
            return 2;
        }
    }
    return 0;
}

std::vector<std::size_t> parse_users(const std::string& spec)
{
    std::vector<std::size_t> out;
    std::size_t a = 0, b = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(spec);
    if ((in >> a >> c1 >> b >> c2 >> step) && c1 == ':' && c2 == ':' && step > 0 && a <= b) {
        for (std::size_t n = a; n <= b; n += step) {
            out.push_back(n);
        }
        return out;
    }
    std::istringstream list(spec);
    std::string item;
    while (std::getline(list, item, ',')) {
        out.push_back(std::stoul(item));
    }
    if (out.empty()) {
        throw pds::ConfigError("bad --users value: " + spec);
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Personal data storage benchmark: trace-driven load against DFS backends"};
    app.require_subcommand(1);

    Common run_opts;
    std::size_t run_users = 10;
    std::string run_payload = "small";
    auto* run = app.add_subcommand("run", "execute one scenario");
    add_common(run, run_opts);
    run->add_option("--users", run_users, "number of users");
    run->add_option("--payload", run_payload, "small or large");

    Common sweep_opts;
    std::string sweep_users = "10:100:10";
    std::string sweep_payloads = "small,large";
    std::optional<std::string> sweep_drain;
    auto* sweep = app.add_subcommand("sweep", "execute runs in order on one backend");
    add_common(sweep, sweep_opts);
    sweep->add_option("--users", sweep_users, "from:to:step or a comma list");
    sweep->add_option("--payloads", sweep_payloads, "comma list of small,large");
    sweep->add_option("--drain", sweep_drain, "recovery seconds between runs, or inf");

    std::string report_in;
    std::string report_format = "csv";
    std::string report_out;
    auto* report = app.add_subcommand("report", "re-render a stored result set");
    report->add_option("--in", report_in, "directory holding results.json")->required();
    report->add_option("--format", report_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    report->add_option("--out", report_out, "output file (default stdout)");

    std::size_t gen_buses = 120;
    std::uint64_t gen_seed = 7;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-traces", "write a synthetic Rio bus trace CSV");
    gen->add_option("--buses", gen_buses, "number of buses");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output CSV")->required();

    std::string conv_in;
    std::string conv_out;
    auto* conv = app.add_subcommand("convert-riobuses", "convert a raw RioBuses dump");
    conv->add_option("--in", conv_in, "raw CSV (date,time,order,line,lat,lon,speed)")->required();
    conv->add_option("--out", conv_out, "trace CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            pds::BenchConfig cfg = resolve(run_opts);
            if (run->count("--users") || run_opts.config_path.empty()) {
                cfg.run.n_users = run_users;
            }
            if (run->count("--payload") || run_opts.config_path.empty()) {
                cfg.run.payload = pds::parse_record_kind(run_payload);
            }
            if (cfg.run.label.empty()) {
                cfg.run.label = std::string(pds::payload_label(cfg.run.payload)) + "-" +
                                std::to_string(cfg.run.n_users);
            }
            const auto traces = pds::load_traces(run_opts.trace_path);
            auto backend = pds::make_backend(cfg.run, cfg.node);
            std::vector<pds::RunResult> results{
                pds::run_scenario(cfg.run, pds::schedule_for(cfg.run, traces), *backend)};
            emit(results, run_opts.out_dir);
            return exit_code(results);
        }
        if (*sweep) {
            pds::BenchConfig cfg = resolve(sweep_opts);
            if (sweep_drain) {
                pds::apply_setting(cfg, "drain_interval_s", *sweep_drain);
            }
            std::vector<pds::RunConfig> configs;
            std::istringstream kinds(sweep_payloads);
            std::string kind;
            while (std::getline(kinds, kind, ',')) {
                for (std::size_t n : parse_users(sweep_users)) {
                    pds::RunConfig c = cfg.run;
                    c.n_users = n;
                    c.payload = pds::parse_record_kind(kind);
                    c.label = std::string(pds::payload_label(c.payload)) + "-" + std::to_string(n);
                    configs.push_back(c);
                }
            }
            const auto traces = pds::load_traces(sweep_opts.trace_path);
            auto backend = pds::make_backend(cfg.run, cfg.node);
            auto results = pds::run_sweep(configs, traces, *backend);
            emit(results, sweep_opts.out_dir);
            const auto a = pds::analyze_sweep(results);
            auto show = [](const std::optional<std::size_t>& v) {
                return v ? std::to_string(*v) : std::string("none");
            };
            std::cerr << "large turning point: " << show(a.large_turning_point_users)
                      << " users; large total failure: " << show(a.large_total_failure_users)
                      << " users; small stable: " << (a.small_stable ? "yes" : "no") << "\n";
            return exit_code(results);
        }
        if (*report) {
            std::ifstream in(report_in + "/results.json");
            if (!in) {
                throw pds::IoError("cannot open " + report_in + "/results.json");
            }
            std::ostringstream ss;
            ss << in.rdbuf();
            const auto results = pds::parse_results_json(ss.str());
            const std::string text =
                report_format == "csv" ? pds::summary_csv(results) : pds::results_json(results);
            if (report_out.empty()) {
                std::cout << text;
            } else {
                pds::write_file_atomic(report_out, text);
            }
            return 0;
        }
        if (*gen) {
            std::ostringstream out;
            pds::write_traces_csv(out, pds::synthesize_traces(gen_buses, gen_seed));
            pds::write_file_atomic(gen_out, out.str());
            return 0;
        }
        if (*conv) {
            std::ifstream in(conv_in);
            if (!in) {
                throw pds::IoError("cannot open " + conv_in);
            }
            std::ostringstream out;
            const std::size_t n = pds::convert_riobuses(in, out);
            pds::write_file_atomic(conv_out, out.str());
            std::cerr << n << " rows converted\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "pdsbench: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
