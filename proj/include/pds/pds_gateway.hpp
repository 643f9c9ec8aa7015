#pragma once

#include "pds/content_store.hpp"
#include "pds/ledger.hpp"
#include "pds/record.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

namespace pds {

/// Where a record goes. Personal data, and anything larger than the
/// small-object threshold, is stored in the DFS and only its digest reaches
/// the ledger; small non-personal data is written to the ledger directly.
enum class Placement { DirectLedger, DfsWithAnchor };

constexpr std::size_t kDefaultSmallThreshold = 128;

Placement classify(const SensedRecord& record, std::size_t small_threshold = kDefaultSmallThreshold);

enum class AnchorState {
    Pending,
    Anchored,
    Skipped, // the DFS put failed, nothing will be anchored
};

struct PublishReceipt {
    std::uint64_t receipt_id = 0;
    Placement placement = Placement::DfsWithAnchor;
    std::optional<ContentAddress> content_address; // absent for DirectLedger
    std::optional<MessageRef> message_ref;         // present once anchored
    AnchorState anchor_state = AnchorState::Pending;
    double dfs_latency_ms = 0.0;
    Outcome outcome = Outcome::Ok;
};

/// One JSON object per line, no trailing newline.
std::string to_json_line(const PublishReceipt& receipt);
PublishReceipt receipt_from_json_line(std::string_view line);

/// The channel a PDS publishes into, with the owner's signing keys.
struct ChannelOwner {
    Digest root{};
    crypto::SigningKeyPair keys;
};

/// Channel message prefixes: "addr:<hex digest>" for anchored DFS objects,
/// "data:<bytes>" for records stored inline.
constexpr std::string_view kAnchorPrefix = "addr:";
constexpr std::string_view kInlinePrefix = "data:";

/// Associated data bound into every DFS object ciphertext.
constexpr std::string_view kObjectAssociatedData = "pds-object";

/// Publication pipeline. DFS objects are encrypted with the per-message key
/// before upload (the anchored digest covers the ciphertext). publish()
/// returns once the put is acknowledged; anchors are completed by
/// run_anchoring() in FIFO order, which keeps per-channel message order.
class PdsGateway {
public:
    using AnchorCallback = std::function<void(const MessageRef&, const crypto::SymmetricKey&)>;

    explicit PdsGateway(Ledger& ledger, std::size_t small_threshold = kDefaultSmallThreshold);

    /// Called for every message that reaches the ledger (e.g. to deposit its
    /// key with the authorization service).
    void on_anchored(AnchorCallback callback);

    /// Throws NotOwner when `owner.keys` do not own the channel,
    /// UnknownChannel, and anything the ledger raises on the direct path.
    /// DFS put failures come back as the receipt outcome.
    PublishReceipt publish(const SensedRecord& record, const ChannelOwner& owner,
                           const crypto::SymmetricKey& key, Backend& backend);

    /// Completes up to `max_steps` pending anchors; returns how many.
    std::size_t run_anchoring(std::size_t max_steps = SIZE_MAX);

    std::size_t pending_anchors() const;
    std::optional<PublishReceipt> receipt(std::uint64_t receipt_id) const;

    /// Reads the channel message and, for anchored objects, fetches the
    /// ciphertext, checks it against the anchored digest and decrypts it.
    /// Throws DecryptionFailure, IntegrityError, NotFound.
    Bytes retrieve(const MessageRef& ref, const crypto::SymmetricKey& key, Backend& backend) const;

    std::size_t small_threshold() const noexcept { return small_threshold_; }

private:
    struct PendingAnchor {
        std::uint64_t receipt_id;
        ChannelOwner owner;
        crypto::SymmetricKey key;
        ContentAddress address;
    };

    std::mutex& channel_mutex(const Digest& root);
    MessageRef publish_locked(const ChannelOwner& owner, ByteView plaintext,
                              const crypto::SymmetricKey& key);
    std::size_t flush_channel(const Digest& root);
    void complete(const PendingAnchor& anchor);

    Ledger& ledger_;
    std::size_t small_threshold_;
    AnchorCallback callback_;

    mutable std::mutex mutex_; // receipts, queue, channel mutex map
    std::uint64_t next_receipt_ = 1;
    std::map<std::uint64_t, PublishReceipt> receipts_;
    std::deque<PendingAnchor> queue_;
    std::map<Digest, std::unique_ptr<std::mutex>> channel_mutexes_;
};

} // namespace pds
