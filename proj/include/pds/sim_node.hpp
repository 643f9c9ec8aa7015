#pragma once

#include "pds/content_store.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <random>
#include <unordered_map>

namespace pds {

/// Parameters of a simulated DFS node. Field names double as config-file
/// keys. Defaults are the calibrated proprietary-node values shipped in
/// data/sim_calibrated.conf.
struct SimNodeConfig {
    double service_rate = 1.2 * 1048576.0;   // bytes/s
    double per_request_overhead = 950.0;     // ms, network and client time
    std::uint64_t queue_capacity = 1024;     // max pending uploads
    double request_timeout = 60000.0;        // ms
    double backlog = 0.0;                    // bytes of pending work at start
    std::uint64_t rng_seed = 42;
    // Fraction of service_rate delivered while pending work exceeds
    // request_timeout * service_rate. 1.0 is a plain FIFO server.
    double overload_efficiency = 0.3;
    double overhead_jitter = 100.0;          // ms, uniform [0, jitter)
    std::uint64_t storage_budget = 256ull << 20; // bytes, 0 = unlimited

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

/// Single FIFO server in virtual time. Every admitted upload adds its size to
/// the pending work; work drains at service_rate (or the overload rate above
/// the knee). Pending work survives between runs unless drain() is called.
///
/// Admission of a put arriving at virtual time t:
///   pending uploads >= queue_capacity  -> 500, nothing enqueued
///   queue wait > request_timeout       -> 504, upload still enqueued (the
///                                         node keeps ingesting after the
///                                         gateway gave up) but not stored
///   otherwise                          -> Ok, latency = overhead + jitter +
///                                         time to process backlog + size
class SimulatedBackend final : public Backend {
public:
    explicit SimulatedBackend(SimNodeConfig config = {});

    BackendKind kind() const noexcept override { return BackendKind::Simulated; }
    PutReceipt put(ByteView content) override;
    Bytes get(const ContentAddress& address) override;
    void pin(const ContentAddress& address) override;

    /// Advances the clock to max(now, t_ms) then puts.
    PutReceipt put_at(double t_ms, ByteView content);

    /// Moves the virtual clock forward, processing pending work. Earlier
    /// times are ignored.
    void advance_to(double t_ms);

    /// Idle recovery at the full service_rate; advances the clock too.
    double drain(double interval_s);

    /// Drops all pending work (drain with an unbounded interval).
    void reset_backlog();

    double now_ms() const;
    double backlog_bytes() const;
    std::size_t pending_requests() const;
    /// Queue wait a put arriving now would see, in ms.
    double queue_wait_ms() const;

    bool contains(const ContentAddress& address) const;
    bool is_pinned(const ContentAddress& address) const;
    std::uint64_t stored_bytes() const;
    std::size_t object_count() const;

    /// Replaces stored bytes without re-addressing them, as a faulty or
    /// malicious storage node would. Throws NotFound.
    void overwrite_object(const ContentAddress& address, Bytes bytes);

    struct Stats {
        std::uint64_t puts = 0;
        std::uint64_t ok = 0;
        std::uint64_t rejected_full = 0;
        std::uint64_t timed_out = 0;
        std::uint64_t evictions = 0;
        double accepted_bytes = 0.0;  // initial backlog + every enqueued upload
        double processed_bytes = 0.0;
    };
    Stats stats() const;

    const SimNodeConfig& config() const noexcept { return config_; }

private:
    struct Pending {
        double remaining;
        bool is_upload;
    };
    struct StoredObject {
        Bytes data;
        bool pinned = false;
        std::uint64_t seq = 0;
    };

    double knee_bytes() const;
    double seconds_to_process(double bytes) const;
    PutReceipt put_locked(ByteView content);
    void advance_locked(double t_ms);
    void consume_locked(double bytes);
    void store_locked(const ContentAddress& address, ByteView content);
    void evict_locked();

    SimNodeConfig config_;
    mutable std::mutex mutex_;
    double now_ms_ = 0.0;
    double backlog_ = 0.0;
    std::size_t pending_uploads_ = 0;
    std::deque<Pending> queue_;
    std::mt19937_64 rng_;
    std::unordered_map<ContentAddress, StoredObject> objects_;
    std::map<std::uint64_t, ContentAddress> insertion_order_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t stored_bytes_ = 0;
    Stats stats_;
};

} // namespace pds
