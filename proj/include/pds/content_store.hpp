#pragma once

#include "pds/crypto.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace pds {

enum class HashAlgorithm : std::uint8_t { Sha256 };

/// Hash-based identifier of a stored object. Any party holding the bytes can
/// recompute it, which is what makes it usable as a ledger anchor.
class ContentAddress {
public:
    ContentAddress() = default;
    explicit ContentAddress(const Digest& digest, HashAlgorithm algorithm = HashAlgorithm::Sha256)
        : algorithm_(algorithm), digest_(digest)
    {
    }

    /// Parses the lowercase (or uppercase) hex display form.
    static ContentAddress from_hex(std::string_view hex);

    HashAlgorithm algorithm() const noexcept { return algorithm_; }
    const Digest& digest() const noexcept { return digest_; }
    std::string hex() const { return to_hex(digest_); }

    auto operator<=>(const ContentAddress&) const = default;

private:
    HashAlgorithm algorithm_ = HashAlgorithm::Sha256;
    Digest digest_{};
};

ContentAddress compute_address(ByteView content);

/// Outcome codes mirror the HTTP statuses a DFS gateway answers with.
enum class Outcome : int {
    Ok = 200,
    ServerError = 500,    // node refused: request queue full
    GatewayTimeout = 504, // queue wait exceeded the request timeout
};

int status_code(Outcome o);

struct PutReceipt {
    std::optional<ContentAddress> address; // present iff outcome == Ok
    std::uint64_t size = 0;
    double latency_ms = 0.0; // request start to response, for every outcome
    Outcome outcome = Outcome::Ok;
    std::string gateway_id;  // identifier returned by a remote gateway, verbatim

    bool ok() const noexcept { return outcome == Outcome::Ok; }
};

enum class BackendKind { Simulated, RemoteGateway };

/// A DFS endpoint objects can be put to and fetched from by content address.
/// Implementations are internally synchronized and shareable across threads.
class Backend {
public:
    virtual ~Backend() = default;

    virtual BackendKind kind() const noexcept = 0;
    virtual PutReceipt put(ByteView content) = 0;

    /// Returns bytes whose address equals `address`; throws NotFound or
    /// IntegrityError.
    virtual Bytes get(const ContentAddress& address) = 0;

    virtual void pin(const ContentAddress& address) = 0;
};

PutReceipt put(ByteView content, Backend& backend);
Bytes get(const ContentAddress& address, Backend& backend);
void pin(const ContentAddress& address, Backend& backend);

/// Inter-run recovery on a simulated node: advances its clock by `interval_s`
/// and removes interval_s * service_rate bytes of backlog, floored at zero.
/// Returns the remaining backlog in bytes. Throws UnsupportedOperation for
/// remote gateways.
double drain(Backend& backend, double interval_s);

/// Throws IntegrityError unless compute_address(bytes) == expected.
void verify_content(ByteView bytes, const ContentAddress& expected);

} // namespace pds

template <>
struct std::hash<pds::ContentAddress> {
    std::size_t operator()(const pds::ContentAddress& a) const noexcept
    {
        std::size_t h = 0;
        for (std::size_t i = 0; i < sizeof(std::size_t); ++i) {
            h = (h << 8) | a.digest()[i];
        }
        return h;
    }
};
