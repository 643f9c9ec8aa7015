#pragma once

#include "pds/crypto.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

namespace pds {

using TxId = Digest;

struct Transaction {
    TxId id{};
    std::vector<TxId> parents; // two entries, none for genesis
    Bytes payload;
    std::uint64_t timestamp = 0; // logical time, equal to insertion position

    bool operator==(const Transaction&) const = default;
};

/// id = SHA-256(count || parents || timestamp || payload length || payload),
/// integers big-endian.
TxId transaction_hash(const std::vector<TxId>& parents, ByteView payload, std::uint64_t timestamp);

struct LedgerConfig {
    std::size_t payload_cap = 1024;
    std::uint64_t tip_seed = 1;
};

struct Channel {
    Digest root{};
    crypto::PublicKey owner_public_key{};
    std::uint64_t nonce = 0;
    std::uint64_t head_index = 0;
};

/// Handle to one message of a channel.
struct MessageRef {
    Digest channel_root{};
    std::uint64_t index = 0;
    TxId tx_id{};

    auto operator<=>(const MessageRef&) const = default;
};

struct ChannelMessage {
    Digest channel_root{};
    std::uint64_t index = 0;
    Bytes ciphertext;
    crypto::Signature signature{};
    TxId tx_id{};
};

Digest channel_root_for(const crypto::PublicKey& owner, std::uint64_t nonce);

/// Bytes the owner signs for a message: root || index || ciphertext.
Bytes message_signing_bytes(const Digest& root, std::uint64_t index, ByteView ciphertext);

/// In-memory Tangle: every transaction approves two earlier ones, picked
/// uniformly among the current tips. Channels are ordered, encrypted,
/// owner-signed message streams whose transactions chain through the DAG.
///
/// Attach and publish take the writer lock; queries take a shared lock.
class Ledger {
public:
    explicit Ledger(LedgerConfig config = {});

    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;

    /// Throws PayloadTooLarge.
    TxId attach(ByteView payload);

    /// Throws DuplicateChannel.
    Channel create_channel(const crypto::SigningKeyPair& owner, std::uint64_t nonce);

    /// Encrypts `plaintext` under `key`, signs it with `owner_secret` and
    /// attaches it as the channel's next message. Throws NotOwner when the
    /// signature does not verify under the channel owner's key,
    /// UnknownChannel, PayloadTooLarge.
    MessageRef publish_message(const Digest& channel_root, ByteView plaintext,
                               const crypto::SymmetricKey& key,
                               const crypto::SecretKey& owner_secret);

    /// Throws NotFound, DecryptionFailure (wrong key or tampered ciphertext),
    /// IntegrityError (signature or transaction id no longer verifies).
    Bytes read_message(const MessageRef& ref, const crypto::SymmetricKey& key) const;
    Bytes read_message(const Digest& channel_root, std::uint64_t index,
                       const crypto::SymmetricKey& key) const;

    /// Decoded message as stored in its transaction. Throws NotFound.
    ChannelMessage message(const Digest& channel_root, std::uint64_t index) const;

    /// True iff the transaction exists and its id re-hashes from its fields.
    bool verify_inclusion(const TxId& id) const;

    std::optional<Channel> channel(const Digest& root) const;
    std::vector<Channel> channels() const;
    std::vector<MessageRef> channel_messages(const Digest& root) const;
    std::optional<Transaction> transaction(const TxId& id) const;
    std::vector<Transaction> transactions() const; // insertion order
    std::vector<TxId> tips() const;
    TxId genesis() const;
    std::size_t size() const;
    std::size_t payload_cap() const noexcept { return config_.payload_cap; }

    /// Kahn topological sort over all transactions.
    bool is_acyclic() const;

    /// JSON document: transactions with hex ids/parents/payloads, and the
    /// channel registry with hex roots and public keys.
    std::string export_json() const;

    /// Loads a document as-is; ids are not re-verified (verify_inclusion
    /// does that), so a tampered log can be loaded and audited.
    static std::unique_ptr<Ledger> import_json(const std::string& document,
                                               LedgerConfig config = {});

private:
    struct ChannelState {
        Channel info;
        std::vector<TxId> messages;
    };

    TxId attach_locked(ByteView payload, std::optional<TxId> predecessor);
    TxId pick_tip_locked(std::optional<TxId> exclude);
    ChannelMessage decode_locked(const Digest& root, std::uint64_t index) const;

    LedgerConfig config_;
    mutable std::shared_mutex mutex_;
    std::vector<TxId> order_;
    std::map<TxId, Transaction> txs_;
    std::vector<TxId> tips_;
    std::map<Digest, ChannelState> channels_;
    std::mt19937_64 rng_;
};

} // namespace pds
