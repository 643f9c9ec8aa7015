// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include "acl_oracle.hpp"
#include "sha256_oracle.hpp"

#include "pds/access_control.hpp"
#include "pds/bench.hpp"
#include "pds/errors.hpp"
#include "pds/ledger.hpp"
#include "pds/pds_gateway.hpp"
#include "pds/sim_node.hpp"
#include "pds/workload.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace pds;

namespace {

// Pinned limits.
constexpr double kIntegrityBudgetS = 10.0;
constexpr double kLedgerBudgetS = 30.0;
constexpr double kSmallRunBudgetS = 5.0;
constexpr double kSweepBudgetS = 60.0;
constexpr double kCiTolerance = 1e-6;
constexpr double kSmallLatencyLowMs = 800.0;
constexpr double kSmallLatencyHighMs = 1200.0;
constexpr std::size_t kTurningPointTarget = 80;
constexpr std::size_t kTotalFailureTarget = 90;
constexpr std::size_t kUsersTolerance = 20;
constexpr double kSustainableErrorPct = 5.0;

struct Verdict {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, auto... args)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

const std::vector<TraceRecord>& traces()
{
    static const std::vector<TraceRecord> t =
        load_traces(std::string(PDS_DATA_DIR) + "/rio_buses_excerpt.csv");
    return t;
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t max_len)
{
    Bytes b(1 + rng() % max_len);
    for (auto& x : b) {
        x = static_cast<std::uint8_t>(rng());
    }
    return b;
}

Verdict integrity()
{
    Verdict v;
    Stopwatch clock;
    SimulatedBackend node;
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000 && v.ok; ++i) {
        Bytes b = random_bytes(rng, 8192);
        PutReceipt r = put(b, node);
        v.require(r.ok(), fmt("put %d failed", i));
        if (!v.ok) {
            break;
        }
        v.require(r.address->digest() == oracle::sha256(b), fmt("address %d disagrees with reference hash", i));
        v.require(get(*r.address, node) == b, fmt("round trip %d differs", i));
    }
    int detected = 0;
    for (int i = 0; i < 100 && v.ok; ++i) {
        Bytes b = random_bytes(rng, 4096);
        PutReceipt r = put(b, node);
        Bytes bad = b;
        bad[rng() % bad.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        node.overwrite_object(*r.address, bad);
        try {
            (void)get(*r.address, node);
        } catch (const IntegrityError&) {
            ++detected;
        }
    }
    v.require(detected == 100, fmt("%d/100 corruptions detected", detected));
    const double s = clock.seconds();
    v.require(s < kIntegrityBudgetS, fmt("took %.2f s", s));
    if (v.ok) {
        v.detail = fmt("1000 round trips, 100/100 corruptions detected, %.2f s", s);
    }
    return v;
}

Verdict routing()
{
    Verdict v;
    const std::size_t t = kDefaultSmallThreshold;
    int cases = 0;
    for (std::size_t size : {t - 1, t, t + 1}) {
        for (bool personal : {true, false}) {
            SensedRecord r;
            r.payload = Bytes(size, 0);
            r.personal = personal;
            const Placement expected =
                (personal || size > t) ? Placement::DfsWithAnchor : Placement::DirectLedger;
            v.require(classify(r) == expected, fmt("size %zu personal %d misrouted", size, personal));
            ++cases;
        }
    }
    if (v.ok) {
        v.detail = fmt("%d cases, 0 deviations (threshold %zu B)", cases, t);
    }
    return v;
}

Verdict ledger_suite()
{
    Verdict v;
    Stopwatch clock;
    std::mt19937_64 rng(10);
    Ledger ledger;
    std::vector<crypto::SigningKeyPair> owners;
    std::vector<Digest> roots;
    auto key = crypto::random_key();
    std::vector<Transaction> snapshot = ledger.transactions();

    for (int op = 0; op < 10000 && v.ok; ++op) {
        const auto pick = rng() % 10;
        if (pick == 0 || roots.empty()) {
            owners.push_back(crypto::generate_keypair());
            roots.push_back(ledger.create_channel(owners.back(), rng()).root);
        } else if (pick < 5) {
            const std::size_t k = rng() % roots.size();
            ledger.publish_message(roots[k], random_bytes(rng, 64), key, owners[k].secret_key);
        } else {
            ledger.attach(random_bytes(rng, 256));
        }
        if (op % 100 == 99) {
            auto now = ledger.transactions();
            v.require(now.size() >= snapshot.size() &&
                          std::equal(snapshot.begin(), snapshot.end(), now.begin()),
                      fmt("history rewritten before op %d", op));
            snapshot = std::move(now);
        }
    }

    // acyclic: in insertion order every parent precedes its child
    std::set<TxId> seen;
    for (const Transaction& tx : ledger.transactions()) {
        for (const TxId& p : tx.parents) {
            v.require(seen.contains(p), "parent does not precede child");
        }
        seen.insert(tx.id);
    }
    v.require(ledger.is_acyclic(), "ledger reports a cycle");

    for (const Digest& root : roots) {
        auto msgs = ledger.channel_messages(root);
        for (std::size_t i = 0; i < msgs.size(); ++i) {
            v.require(msgs[i].index == i, "channel indices not contiguous");
        }
        v.require(ledger.channel(root)->head_index == msgs.size(), "head index mismatch");
    }

    const std::size_t before = ledger.size();
    int rejected = 0;
    for (int i = 0; i < 100; ++i) {
        auto intruder = crypto::generate_keypair();
        try {
            ledger.publish_message(roots[rng() % roots.size()], random_bytes(rng, 32), key,
                                   intruder.secret_key);
        } catch (const NotOwner&) {
            ++rejected;
        }
    }
    v.require(rejected == 100, fmt("%d/100 adversarial publishes rejected", rejected));
    v.require(ledger.size() == before, "rejected publishes changed the ledger");

    const double s = clock.seconds();
    v.require(s < kLedgerBudgetS, fmt("took %.2f s", s));
    if (v.ok) {
        v.detail = fmt("10000 ops, %zu txs, %zu channels, 100/100 intruders rejected, %.2f s",
                       ledger.size(), roots.size(), s);
    }
    return v;
}

Verdict acl_oracle()
{
    Verdict v;
    std::mt19937_64 rng(4);
    std::size_t ops = 0, leaks = 0;
    for (int trial = 0; trial < 1000 && v.ok; ++trial) {
        Ledger ledger;
        TokenLedger tokens;
        AclRegistry registry(ledger, tokens);
        KeyVault vault;
        AuthorizationService auth(registry, ledger, vault);

        auto owner_keys = crypto::generate_keypair();
        Digest root = ledger.create_channel(owner_keys, 0).root;
        for (int i = 0; i < 4; ++i) {
            auto k = crypto::random_key();
            MessageRef ref = ledger.publish_message(root, Bytes{1, 2, 3}, k, owner_keys.secret_key);
            vault.store({root, ref.index}, k);
        }
        const std::map<BundleId, std::set<std::uint64_t>> members{{"b0", {0, 1}}, {"b1", {2}}};
        const std::map<BundleId, std::uint64_t> prices{{"b0", rng() % 8}, {"b1", rng() % 8}};
        auto c = registry.deploy_contract("owner", root,
                                          {{"b0", {{root, 0}, {root, 1}}}, {"b1", {{root, 2}}}},
                                          prices);

        oracle::AclModel model;
        model.owner = "owner";
        model.price = prices;
        for (const std::string& consumer : oracle::kConsumers) {
            const std::uint64_t amount = rng() % 25;
            tokens.mint(consumer, amount);
            model.balance[consumer] = amount;
        }
        const std::uint64_t supply = tokens.total_supply();

        for (const oracle::AclOp& op : oracle::random_log(rng, 1 + rng() % 30, "owner")) {
            ++ops;
            const auto before = registry.contract(c.contract_id);
            const auto balances = tokens.balances();
            const bool ok = oracle::apply_real(registry, c.contract_id, op);
            v.require(ok == model.apply(op), fmt("log %d: outcome differs from oracle", trial));
            if (!ok) {
                v.require(registry.contract(c.contract_id) == before && tokens.balances() == balances,
                          fmt("log %d: rejected operation changed state", trial));
            }
        }

        v.require(registry.contract(c.contract_id).acl == model.acl, fmt("log %d: ACL differs", trial));
        for (const auto& [account, amount] : model.balance) {
            v.require(tokens.balance(account) == amount, fmt("log %d: balance differs", trial));
        }
        v.require(tokens.total_supply() == supply, fmt("log %d: supply changed", trial));
        v.require(model.debited == model.credited && tokens.balance("owner") == model.credited,
                  fmt("log %d: debits and credits differ", trial));

        for (const std::string& consumer : oracle::kConsumers) {
            for (const auto& [bundle, idx] : members) {
                const bool authorized = model.acl.contains({bundle, consumer});
                try {
                    KeySet ks = auth.issue_keys(consumer, c.contract_id, bundle);
                    std::set<std::uint64_t> got;
                    for (const auto& [id, key] : ks.keys) {
                        got.insert(id.index);
                    }
                    if (!authorized || got != idx) {
                        ++leaks;
                    }
                } catch (const NotAuthorized&) {
                    v.require(!authorized, fmt("log %d: authorized consumer denied", trial));
                }
            }
        }
        v.require(leaks == 0, fmt("log %d: keys outside the authorized bundle", trial));
    }
    if (v.ok) {
        v.detail = fmt("1000 logs, %zu operations match the replay oracle, tokens conserved, 0 key leaks", ops);
    }
    return v;
}

RunResult synthetic(const std::vector<std::pair<Outcome, double>>& ms)
{
    RunResult r;
    for (const auto& [outcome, latency] : ms) {
        Measurement m;
        m.outcome = outcome;
        if (outcome == Outcome::Ok) {
            m.latency_ms = latency;
        }
        r.measurements.push_back(m);
    }
    return r;
}

Verdict statistics()
{
    Verdict v;
    SummaryStats s = summarize(synthetic({{Outcome::Ok, 1000}, {Outcome::Ok, 2000}, {Outcome::Ok, 3000}}));
    const double expected_ci = 1.96 * 1000.0 / std::sqrt(3.0);
    v.require(s.mean_latency_ms && *s.mean_latency_ms == 2000.0, "mean of {1000,2000,3000} is not 2000");
    v.require(s.ci95_halfwidth_ms && std::abs(*s.ci95_halfwidth_ms - expected_ci) <= kCiTolerance,
              "ci95 half width off");

    SummaryStats mixed = summarize(synthetic({{Outcome::Ok, 500}, {Outcome::GatewayTimeout, 0}}));
    v.require(mixed.mean_latency_ms == 500.0 && mixed.error_rate_pct == 50.0,
              "{Ok 500, 504} is not mean 500 / 50% errors");

    RunResult with_stray = synthetic({{Outcome::Ok, 500}, {Outcome::ServerError, 0}});
    with_stray.measurements[1].latency_ms = 99999.0;
    v.require(summarize(with_stray).mean_latency_ms == 500.0, "error latency leaked into the mean");

    SummaryStats failed = summarize(synthetic({{Outcome::GatewayTimeout, 0}, {Outcome::ServerError, 0}}));
    v.require(failed.n_ok == 0 && !failed.mean_latency_ms && failed.error_rate_pct == 100.0,
              "all-error run not flagged");
    if (v.ok) {
        v.detail = fmt("mean 2000 ms, ci95 %.6f ms, errors excluded", *s.ci95_halfwidth_ms);
    }
    return v;
}

Verdict small_latency()
{
    Verdict v;
    Stopwatch clock;
    SimulatedBackend node;
    RunConfig c;
    c.n_users = 10;
    c.payload = RecordKind::Geolocation;
    RunResult r = run_scenario(c, schedule_for(c, traces()), node);
    const double s = clock.seconds();
    SummaryStats st = summarize(r);
    v.require(r.measurements.size() == 150, "expected 150 measurements");
    v.require(st.mean_latency_ms && *st.mean_latency_ms >= kSmallLatencyLowMs &&
                  *st.mean_latency_ms <= kSmallLatencyHighMs,
              fmt("mean %.1f ms outside [800, 1200]", st.mean_latency_ms.value_or(-1)));
    v.require(st.error_rate_pct == 0.0, fmt("error rate %.2f%%", st.error_rate_pct.value_or(-1)));
    v.require(s < kSmallRunBudgetS, fmt("took %.2f s", s));
    if (v.ok) {
        v.detail = fmt("mean %.1f ms, 0%% errors, %.3f s", *st.mean_latency_ms, s);
    }
    return v;
}

std::vector<RunResult> calibrated_sweep()
{
    SimulatedBackend node;
    return run_sweep(default_sweep(600.0), traces(), node);
}

bool within(std::optional<std::size_t> value, std::size_t target)
{
    return value && *value + kUsersTolerance >= target && *value <= target + kUsersTolerance;
}

Verdict collapse(std::string& csv_out)
{
    Verdict v;
    Stopwatch clock;
    auto results = calibrated_sweep();
    const double s = clock.seconds();
    csv_out = summary_csv(results);
    SweepAnalysis a = analyze_sweep(results);
    v.require(results.size() == 20, "sweep did not produce 20 runs");
    v.require(within(a.large_turning_point_users, kTurningPointTarget),
              fmt("turning point %zu not within 80 +/- 20", a.large_turning_point_users.value_or(0)));
    v.require(within(a.large_total_failure_users, kTotalFailureTarget),
              fmt("100%% failure at %zu not within 90 +/- 20", a.large_total_failure_users.value_or(0)));
    v.require(a.small_stable, "small-file latencies collapsed");
    v.require(s < kSweepBudgetS, fmt("took %.2f s", s));
    if (v.ok) {
        double small_max = 0;
        for (std::size_t i = 0; i < 10; ++i) {
            small_max = std::max(small_max, summarize(results[i]).mean_latency_ms.value_or(0));
        }
        v.detail = fmt("turning point %zu users, 100%% failure at %zu users, small mean <= %.0f ms, %.2f s",
                       *a.large_turning_point_users, *a.large_total_failure_users, small_max, s);
    }
    return v;
}

double uniform_error_rate(std::size_t users)
{
    SimulatedBackend node;
    RunConfig c;
    c.n_users = users;
    c.payload = RecordKind::Photo;
    c.timing = ScheduleTiming::Uniform;
    return summarize(run_scenario(c, schedule_for(c, traces()), node)).error_rate_pct.value();
}

Verdict sustainable_rate()
{
    // uniform spacing: n users emit exactly n requests per minute
    Verdict v;
    double worst = 0;
    for (std::size_t users = 10; users <= 60; users += 10) {
        const double err = uniform_error_rate(users);
        worst = std::max(worst, err);
        v.require(err < kSustainableErrorPct, fmt("%zu req/min: %.2f%% errors", users, err));
    }
    const double at60 = uniform_error_rate(60);
    const double at100 = uniform_error_rate(100);
    v.require(at100 > at60, fmt("100 req/min %.2f%% not above 60 req/min %.2f%%", at100, at60));
    if (v.ok) {
        v.detail = fmt("<= 60 req/min: max %.2f%% errors; 100 req/min: %.2f%%", worst, at100);
    }
    return v;
}

Verdict schedule_exactness()
{
    Verdict v;
    for (ScheduleTiming timing : {ScheduleTiming::TraceTimed, ScheduleTiming::Uniform}) {
        for (std::size_t n = 10; n <= 100; n += 10) {
            ScheduleOptions o;
            o.timing = timing;
            Schedule s = build_schedule(traces(), n, o);
            v.require(s.entries.size() == 15 * n, fmt("%zu users: %zu entries", n, s.entries.size()));
            for (const ScheduleEntry& e : s.entries) {
                v.require(e.offset_ms >= 0 && e.offset_ms < 900000,
                          fmt("%zu users: offset %lld outside the window", n, static_cast<long long>(e.offset_ms)));
            }
        }
    }
    if (v.ok) {
        v.detail = "15 x n entries inside 900000 ms for n = 10..100, both timing modes";
    }
    return v;
}

Verdict determinism(const std::string& first_csv)
{
    Verdict v;
    const std::string second = summary_csv(calibrated_sweep());
    v.require(!first_csv.empty() && first_csv == second, "CSV reports differ between executions");
    if (v.ok) {
        v.detail = fmt("byte-identical CSV (%zu bytes)", second.size());
    }
    return v;
}

} // namespace

int main()
{
    std::string sweep_csv;
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"integrity", integrity},
        {"routing", routing},
        {"ledger", ledger_suite},
        {"acl-oracle", acl_oracle},
        {"statistics", statistics},
        {"small-file-latency", small_latency},
        {"cascading-collapse", [&] { return collapse(sweep_csv); }},
        {"sustainable-rate", sustainable_rate},
        {"schedule-exactness", schedule_exactness},
        {"determinism", [&] { return determinism(sweep_csv); }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.ok = false;
            v.detail = std::string("exception: ") + e.what();
        }
        failed += v.ok ? 0 : 1;
        std::printf("%s %2zu %-20s %s\n", v.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed),
                criteria.size());
    return failed == 0 ? 0 : 1;
}
