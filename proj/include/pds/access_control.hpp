#pragma once

#include "pds/crypto.hpp"
#include "pds/ledger.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

namespace pds {

using BundleId = std::string;
using ConsumerId = std::string;
using AccountId = std::string;

/// A whole channel (no index) or one message of it.
struct BundleReference {
    Digest channel_root{};
    std::optional<std::uint64_t> index;

    auto operator<=>(const BundleReference&) const = default;
};

/// Emulated ACL smart contract bound to exactly one channel.
struct AclContract {
    std::string contract_id;
    Digest channel_root{};
    AccountId owner_id;
    std::map<BundleId, std::set<BundleReference>> bundles;
    std::map<BundleId, std::uint64_t> price;
    std::set<std::pair<BundleId, ConsumerId>> acl;

    bool operator==(const AclContract&) const = default;
};

/// Integer-valued token balances; the stand-in for on-chain payments.
class TokenLedger {
public:
    void mint(const AccountId& account, std::uint64_t amount);
    std::uint64_t balance(const AccountId& account) const;
    /// Throws InsufficientFunds; on failure nothing moves.
    void transfer(const AccountId& from, const AccountId& to, std::uint64_t amount);
    std::uint64_t total_supply() const;
    std::map<AccountId, std::uint64_t> balances() const;

private:
    mutable std::mutex mutex_;
    std::map<AccountId, std::uint64_t> balances_;
    std::uint64_t supply_ = 0;
};

/// Deployed contracts. Mutations of one contract are serialized; reads are
/// concurrent.
class AclRegistry {
public:
    AclRegistry(const Ledger& ledger, TokenLedger& tokens);

    /// Throws UnknownChannel, AlreadyBound, InvalidReference (a reference to
    /// another channel), UnknownBundle (a price for an undefined bundle).
    /// Bundles without a price are free.
    AclContract deploy_contract(const AccountId& owner_id, const Digest& channel_root,
                                std::map<BundleId, std::set<BundleReference>> bundles,
                                std::map<BundleId, std::uint64_t> prices);

    /// Owner-only; idempotent. Throws UnknownContract, NotOwner, UnknownBundle.
    AclContract grant(const std::string& contract_id, const AccountId& caller_id,
                      const ConsumerId& consumer_id, const BundleId& bundle_id);

    /// Payable: `payment` moves from the consumer's account to the owner's
    /// when it covers the price. Throws UnknownContract, UnknownBundle,
    /// InsufficientPayment, InsufficientFunds; failures change nothing.
    AclContract purchase(const std::string& contract_id, const ConsumerId& consumer_id,
                         const BundleId& bundle_id, std::uint64_t payment);

    bool is_authorized(const std::string& contract_id, const ConsumerId& consumer_id,
                       const BundleId& bundle_id) const;

    /// Throws UnknownContract.
    AclContract contract(const std::string& contract_id) const;
    std::optional<std::string> contract_for_channel(const Digest& channel_root) const;

    TokenLedger& tokens() noexcept { return tokens_; }

private:
    struct Entry {
        mutable std::shared_mutex mutex;
        AclContract state;
    };
    Entry& entry(const std::string& contract_id) const;

    const Ledger& ledger_;
    TokenLedger& tokens_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::unique_ptr<Entry>> contracts_;
    std::map<Digest, std::string> by_channel_;
};

struct MessageKeyId {
    Digest channel_root{};
    std::uint64_t index = 0;

    auto operator<=>(const MessageKeyId&) const = default;
};

/// Per-message keys. The same key decrypts a channel message and the DFS
/// object it anchors.
struct KeySet {
    std::map<MessageKeyId, crypto::SymmetricKey> keys;
};

/// Holds every per-message key, as the client/server authorization service
/// does.
class KeyVault {
public:
    void store(const MessageKeyId& id, const crypto::SymmetricKey& key);
    std::optional<crypto::SymmetricKey> find(const MessageKeyId& id) const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<MessageKeyId, crypto::SymmetricKey> keys_;
};

using Nonce = std::array<std::uint8_t, 32>;

/// Signed key request: the consumer signs nonce || contract_id || 0x00 ||
/// bundle_id with the key whose fingerprint is its consumer id.
struct KeyRequest {
    crypto::PublicKey consumer_public_key{};
    std::string contract_id;
    BundleId bundle_id;
    Nonce nonce{};
    crypto::Signature signature{};
};

Bytes key_request_signing_bytes(const Nonce& nonce, const std::string& contract_id,
                                const BundleId& bundle_id);
KeyRequest make_key_request(const crypto::SigningKeyPair& consumer, const Nonce& nonce,
                            const std::string& contract_id, const BundleId& bundle_id);

class AuthorizationService {
public:
    AuthorizationService(const AclRegistry& registry, const Ledger& ledger, KeyVault& vault);

    /// Keys for exactly the references in the bundle: a whole-channel
    /// reference expands to every message published so far. Throws
    /// NotAuthorized, UnknownContract, UnknownBundle.
    KeySet issue_keys(const ConsumerId& consumer_id, const std::string& contract_id,
                      const BundleId& bundle_id) const;

    /// Single-use nonce for a signed request.
    Nonce challenge();

    /// Verifies nonce and signature, then issue_keys for the key's
    /// fingerprint. Throws NotAuthorized on a bad or reused nonce or signature.
    KeySet handle_request(const KeyRequest& request);

private:
    const AclRegistry& registry_;
    const Ledger& ledger_;
    KeyVault& vault_;
    std::mutex mutex_;
    std::set<Nonce> outstanding_;
};

} // namespace pds
