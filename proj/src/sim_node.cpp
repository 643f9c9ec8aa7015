#include "pds/sim_node.hpp"

#include "pds/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pds {

void SimNodeConfig::validate() const
{
    if (!(service_rate > 0.0)) {
        throw ConfigError("service_rate must be > 0");
    }
    if (queue_capacity < 1) {
        throw ConfigError("queue_capacity must be >= 1");
    }
    if (per_request_overhead < 0.0) {
        throw ConfigError("per_request_overhead must be >= 0");
    }
    if (!(request_timeout > per_request_overhead)) {
        throw ConfigError("request_timeout must exceed per_request_overhead");
    }
    if (backlog < 0.0) {
        throw ConfigError("backlog must be >= 0");
    }
    if (!(overload_efficiency > 0.0 && overload_efficiency <= 1.0)) {
        throw ConfigError("overload_efficiency must be in (0, 1]");
    }
    if (overhead_jitter < 0.0) {
        throw ConfigError("overhead_jitter must be >= 0");
    }
}

SimulatedBackend::SimulatedBackend(SimNodeConfig config)
    : config_(config), rng_(config.rng_seed)
{
    config_.validate();
    if (config_.backlog > 0.0) {
        queue_.push_back({config_.backlog, false});
        backlog_ = config_.backlog;
        stats_.accepted_bytes = config_.backlog;
    }
}

double SimulatedBackend::knee_bytes() const
{
    return config_.request_timeout / 1000.0 * config_.service_rate;
}

double SimulatedBackend::seconds_to_process(double bytes) const
{
    const double knee = knee_bytes();
    if (bytes > knee) {
        return (bytes - knee) / (config_.overload_efficiency * config_.service_rate) +
               knee / config_.service_rate;
    }
    return bytes / config_.service_rate;
}

void SimulatedBackend::consume_locked(double bytes)
{
    if (bytes >= backlog_) {
        stats_.processed_bytes += backlog_;
        queue_.clear();
        pending_uploads_ = 0;
        backlog_ = 0.0;
        return;
    }
    stats_.processed_bytes += bytes;
    while (bytes > 0.0 && !queue_.empty()) {
        Pending& head = queue_.front();
        if (head.remaining <= bytes) {
            bytes -= head.remaining;
            if (head.is_upload) {
                --pending_uploads_;
            }
            queue_.pop_front();
        } else {
            head.remaining -= bytes;
            bytes = 0.0;
        }
    }
    backlog_ = 0.0;
    for (const Pending& p : queue_) {
        backlog_ += p.remaining;
    }
}

void SimulatedBackend::advance_locked(double t_ms)
{
    if (t_ms <= now_ms_) {
        return;
    }
    double dt = (t_ms - now_ms_) / 1000.0;
    now_ms_ = t_ms;
    if (backlog_ <= 0.0) {
        return;
    }

    const double knee = knee_bytes();
    double remaining = backlog_;
    double done = 0.0;
    if (remaining > knee) {
        const double slow_rate = config_.overload_efficiency * config_.service_rate;
        double x = std::min(remaining - knee, dt * slow_rate);
        done += x;
        remaining -= x;
        dt -= x / slow_rate;
    }
    if (remaining <= knee && dt > 0.0) {
        done += std::min(remaining, dt * config_.service_rate);
    }
    consume_locked(std::min(done, backlog_));
}

PutReceipt SimulatedBackend::put(ByteView content)
{
    std::lock_guard lock(mutex_);
    return put_locked(content);
}

PutReceipt SimulatedBackend::put_at(double t_ms, ByteView content)
{
    std::lock_guard lock(mutex_);
    advance_locked(t_ms);
    return put_locked(content);
}

PutReceipt SimulatedBackend::put_locked(ByteView content)
{
    ++stats_.puts;

    PutReceipt receipt;
    receipt.size = content.size();

    const double jitter =
        config_.overhead_jitter * (static_cast<double>(rng_() >> 11) * 0x1.0p-53);
    const double overhead = config_.per_request_overhead + jitter;

    if (pending_uploads_ >= config_.queue_capacity) {
        ++stats_.rejected_full;
        receipt.outcome = Outcome::ServerError;
        receipt.latency_ms = overhead;
        return receipt;
    }

    const double wait_ms = seconds_to_process(backlog_) * 1000.0;
    const double size = static_cast<double>(content.size());
    const double done_ms = seconds_to_process(backlog_ + size) * 1000.0;

    queue_.push_back({size, true});
    ++pending_uploads_;
    backlog_ += size;
    stats_.accepted_bytes += size;

    if (wait_ms > config_.request_timeout) {
        ++stats_.timed_out;
        receipt.outcome = Outcome::GatewayTimeout;
        receipt.latency_ms = config_.request_timeout;
        return receipt;
    }

    ++stats_.ok;
    receipt.outcome = Outcome::Ok;
    receipt.latency_ms = overhead + done_ms;
    receipt.address = compute_address(content);
    store_locked(*receipt.address, content);
    return receipt;
}

void SimulatedBackend::store_locked(const ContentAddress& address, ByteView content)
{
    if (objects_.contains(address)) {
        return;
    }
    StoredObject obj;
    obj.data.assign(content.begin(), content.end());
    obj.seq = next_seq_++;
    insertion_order_.emplace(obj.seq, address);
    stored_bytes_ += obj.data.size();
    objects_.emplace(address, std::move(obj));
    evict_locked();
}

// Oldest unpinned objects go first; pinned objects may exceed the budget.
void SimulatedBackend::evict_locked()
{
    if (config_.storage_budget == 0) {
        return;
    }
    auto it = insertion_order_.begin();
    while (stored_bytes_ > config_.storage_budget && it != insertion_order_.end()) {
        auto obj = objects_.find(it->second);
        if (obj->second.pinned) {
            ++it;
            continue;
        }
        stored_bytes_ -= obj->second.data.size();
        objects_.erase(obj);
        it = insertion_order_.erase(it);
        ++stats_.evictions;
    }
}

Bytes SimulatedBackend::get(const ContentAddress& address)
{
    Bytes data;
    {
        std::lock_guard lock(mutex_);
        auto it = objects_.find(address);
        if (it == objects_.end()) {
            throw NotFound("no object under " + address.hex());
        }
        data = it->second.data;
    }
    verify_content(data, address);
    return data;
}

void SimulatedBackend::pin(const ContentAddress& address)
{
    std::lock_guard lock(mutex_);
    auto it = objects_.find(address);
    if (it == objects_.end()) {
        throw NotFound("cannot pin unknown object " + address.hex());
    }
    it->second.pinned = true;
}

void SimulatedBackend::advance_to(double t_ms)
{
    std::lock_guard lock(mutex_);
    advance_locked(t_ms);
}

double SimulatedBackend::drain(double interval_s)
{
    std::lock_guard lock(mutex_);
    if (interval_s < 0.0) {
        throw std::invalid_argument("drain interval must be >= 0");
    }
    if (std::isinf(interval_s)) {
        consume_locked(backlog_);
        return 0.0;
    }
    now_ms_ += interval_s * 1000.0;
    consume_locked(std::min(backlog_, interval_s * config_.service_rate));
    return backlog_;
}

void SimulatedBackend::reset_backlog()
{
    drain(std::numeric_limits<double>::infinity());
}

double SimulatedBackend::now_ms() const
{
    std::lock_guard lock(mutex_);
    return now_ms_;
}

double SimulatedBackend::backlog_bytes() const
{
    std::lock_guard lock(mutex_);
    return backlog_;
}

std::size_t SimulatedBackend::pending_requests() const
{
    std::lock_guard lock(mutex_);
    return pending_uploads_;
}

double SimulatedBackend::queue_wait_ms() const
{
    std::lock_guard lock(mutex_);
    return seconds_to_process(backlog_) * 1000.0;
}

bool SimulatedBackend::contains(const ContentAddress& address) const
{
    std::lock_guard lock(mutex_);
    return objects_.contains(address);
}

bool SimulatedBackend::is_pinned(const ContentAddress& address) const
{
    std::lock_guard lock(mutex_);
    auto it = objects_.find(address);
    return it != objects_.end() && it->second.pinned;
}

std::uint64_t SimulatedBackend::stored_bytes() const
{
    std::lock_guard lock(mutex_);
    return stored_bytes_;
}

std::size_t SimulatedBackend::object_count() const
{
    std::lock_guard lock(mutex_);
    return objects_.size();
}

void SimulatedBackend::overwrite_object(const ContentAddress& address, Bytes bytes)
{
    std::lock_guard lock(mutex_);
    auto it = objects_.find(address);
    if (it == objects_.end()) {
        throw NotFound("no object under " + address.hex());
    }
    stored_bytes_ = stored_bytes_ - it->second.data.size() + bytes.size();
    it->second.data = std::move(bytes);
}

SimulatedBackend::Stats SimulatedBackend::stats() const
{
    std::lock_guard lock(mutex_);
    return stats_;
}

} // namespace pds
