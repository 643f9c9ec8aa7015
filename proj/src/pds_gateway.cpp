#include "pds/pds_gateway.hpp"

#include "pds/errors.hpp"

#include <json.hpp>

#include <algorithm>

namespace pds {

RecordKind parse_record_kind(std::string_view name)
{
    if (name == "small" || name == "geolocation") {
        return RecordKind::Geolocation;
    }
    if (name == "large" || name == "photo") {
        return RecordKind::Photo;
    }
    throw ConfigError("unknown payload kind: " + std::string(name));
}

std::string_view payload_label(RecordKind kind)
{
    return kind == RecordKind::Photo ? "large" : "small";
}

Placement classify(const SensedRecord& record, std::size_t small_threshold)
{
    if (record.personal || record.payload.size() > small_threshold) {
        return Placement::DfsWithAnchor;
    }
    return Placement::DirectLedger;
}

namespace {

const char* placement_name(Placement p)
{
    return p == Placement::DirectLedger ? "direct_ledger" : "dfs_with_anchor";
}

const char* anchor_name(AnchorState s)
{
    switch (s) {
    case AnchorState::Pending: return "pending";
    case AnchorState::Anchored: return "anchored";
    case AnchorState::Skipped: return "skipped";
    }
    return "pending";
}

} // namespace

std::string to_json_line(const PublishReceipt& r)
{
    nlohmann::json j;
    j["receipt_id"] = r.receipt_id;
    j["placement"] = placement_name(r.placement);
    j["content_address"] = r.content_address ? nlohmann::json(r.content_address->hex()) : nullptr;
    if (r.message_ref) {
        j["message_ref"] = {{"channel_root", to_hex(r.message_ref->channel_root)},
                            {"index", r.message_ref->index},
                            {"tx_id", to_hex(r.message_ref->tx_id)}};
    } else {
        j["message_ref"] = nullptr;
    }
    j["anchor_state"] = anchor_name(r.anchor_state);
    j["dfs_latency_ms"] = r.dfs_latency_ms;
    j["outcome"] = status_code(r.outcome);
    return j.dump();
}

PublishReceipt receipt_from_json_line(std::string_view line)
{
    nlohmann::json j = nlohmann::json::parse(line);
    PublishReceipt r;
    r.receipt_id = j.at("receipt_id").get<std::uint64_t>();
    r.placement = j.at("placement") == "direct_ledger" ? Placement::DirectLedger
                                                       : Placement::DfsWithAnchor;
    if (!j.at("content_address").is_null()) {
        r.content_address = ContentAddress::from_hex(j["content_address"].get<std::string>());
    }
    if (!j.at("message_ref").is_null()) {
        const auto& m = j["message_ref"];
        r.message_ref = MessageRef{digest_from_hex(m.at("channel_root").get<std::string>()),
                                   m.at("index").get<std::uint64_t>(),
                                   digest_from_hex(m.at("tx_id").get<std::string>())};
    }
    const std::string state = j.at("anchor_state").get<std::string>();
    r.anchor_state = state == "anchored" ? AnchorState::Anchored
                     : state == "skipped" ? AnchorState::Skipped
                                          : AnchorState::Pending;
    r.dfs_latency_ms = j.at("dfs_latency_ms").get<double>();
    r.outcome = static_cast<Outcome>(j.at("outcome").get<int>());
    return r;
}

PdsGateway::PdsGateway(Ledger& ledger, std::size_t small_threshold)
    : ledger_(ledger), small_threshold_(small_threshold)
{
}

void PdsGateway::on_anchored(AnchorCallback callback)
{
    std::lock_guard lock(mutex_);
    callback_ = std::move(callback);
}

std::mutex& PdsGateway::channel_mutex(const Digest& root)
{
    std::lock_guard lock(mutex_);
    auto& slot = channel_mutexes_[root];
    if (!slot) {
        slot = std::make_unique<std::mutex>();
    }
    return *slot;
}

MessageRef PdsGateway::publish_locked(const ChannelOwner& owner, ByteView plaintext,
                                      const crypto::SymmetricKey& key)
{
    MessageRef ref = ledger_.publish_message(owner.root, plaintext, key, owner.keys.secret_key);
    AnchorCallback cb;
    {
        std::lock_guard lock(mutex_);
        cb = callback_;
    }
    if (cb) {
        cb(ref, key);
    }
    return ref;
}

void PdsGateway::complete(const PendingAnchor& anchor)
{
    std::string text(kAnchorPrefix);
    text += anchor.address.hex();
    MessageRef ref = publish_locked(anchor.owner, as_bytes(text), anchor.key);
    std::lock_guard lock(mutex_);
    PublishReceipt& r = receipts_.at(anchor.receipt_id);
    r.message_ref = ref;
    r.anchor_state = AnchorState::Anchored;
}

// Caller holds the channel mutex for `root`.
std::size_t PdsGateway::flush_channel(const Digest& root)
{
    std::size_t done = 0;
    for (;;) {
        std::optional<PendingAnchor> next;
        {
            std::lock_guard lock(mutex_);
            auto it = std::find_if(queue_.begin(), queue_.end(),
                                   [&](const PendingAnchor& a) { return a.owner.root == root; });
            if (it == queue_.end()) {
                return done;
            }
            next = std::move(*it);
            queue_.erase(it);
        }
        complete(*next);
        ++done;
    }
}

PublishReceipt PdsGateway::publish(const SensedRecord& record, const ChannelOwner& owner,
                                   const crypto::SymmetricKey& key, Backend& backend)
{
    std::optional<Channel> ch = ledger_.channel(owner.root);
    if (!ch) {
        throw UnknownChannel("no channel " + to_hex(owner.root));
    }
    if (ch->owner_public_key != owner.keys.public_key) {
        throw NotOwner("caller does not own channel " + to_hex(owner.root));
    }

    PublishReceipt receipt;
    receipt.placement = classify(record, small_threshold_);
    {
        std::lock_guard lock(mutex_);
        receipt.receipt_id = next_receipt_++;
    }

    if (receipt.placement == Placement::DirectLedger) {
        std::lock_guard channel_lock(channel_mutex(owner.root));
        flush_channel(owner.root);
        Bytes text(kInlinePrefix.begin(), kInlinePrefix.end());
        text.insert(text.end(), record.payload.begin(), record.payload.end());
        receipt.message_ref = publish_locked(owner, text, key);
        receipt.anchor_state = AnchorState::Anchored;
        receipt.outcome = Outcome::Ok;
        std::lock_guard lock(mutex_);
        receipts_[receipt.receipt_id] = receipt;
        return receipt;
    }

    Bytes sealed = crypto::seal(record.payload, key, as_bytes(kObjectAssociatedData));
    PutReceipt put_receipt = put(sealed, backend);
    receipt.dfs_latency_ms = put_receipt.latency_ms;
    receipt.outcome = put_receipt.outcome;

    std::lock_guard lock(mutex_);
    if (!put_receipt.ok()) {
        receipt.anchor_state = AnchorState::Skipped;
    } else {
        receipt.content_address = put_receipt.address;
        receipt.anchor_state = AnchorState::Pending;
        queue_.push_back({receipt.receipt_id, owner, key, *put_receipt.address});
    }
    receipts_[receipt.receipt_id] = receipt;
    return receipt;
}

std::size_t PdsGateway::run_anchoring(std::size_t max_steps)
{
    std::size_t done = 0;
    while (done < max_steps) {
        Digest root;
        std::uint64_t id;
        {
            std::lock_guard lock(mutex_);
            if (queue_.empty()) {
                break;
            }
            root = queue_.front().owner.root;
            id = queue_.front().receipt_id;
        }
        std::lock_guard channel_lock(channel_mutex(root));
        std::optional<PendingAnchor> next;
        {
            std::lock_guard lock(mutex_);
            if (queue_.empty() || queue_.front().receipt_id != id) {
                continue; // a direct publish flushed it meanwhile
            }
            next = std::move(queue_.front());
            queue_.pop_front();
        }
        complete(*next);
        ++done;
    }
    return done;
}

std::size_t PdsGateway::pending_anchors() const
{
    std::lock_guard lock(mutex_);
    return queue_.size();
}

std::optional<PublishReceipt> PdsGateway::receipt(std::uint64_t receipt_id) const
{
    std::lock_guard lock(mutex_);
    auto it = receipts_.find(receipt_id);
    if (it == receipts_.end()) {
        return std::nullopt;
    }
    return it->second;
}

Bytes PdsGateway::retrieve(const MessageRef& ref, const crypto::SymmetricKey& key,
                           Backend& backend) const
{
    Bytes text = ledger_.read_message(ref, key);
    auto starts_with = [&](std::string_view prefix) {
        return text.size() >= prefix.size() &&
               std::equal(prefix.begin(), prefix.end(), text.begin());
    };

    if (starts_with(kInlinePrefix)) {
        return Bytes(text.begin() + kInlinePrefix.size(), text.end());
    }
    if (!starts_with(kAnchorPrefix)) {
        throw IntegrityError("channel message carries neither an anchor nor inline data");
    }
    ContentAddress address = ContentAddress::from_hex(
        std::string_view(reinterpret_cast<const char*>(text.data()) + kAnchorPrefix.size(),
                         text.size() - kAnchorPrefix.size()));
    Bytes sealed = get(address, backend);
    verify_content(sealed, address);
    return crypto::open(sealed, key, as_bytes(kObjectAssociatedData));
}

} // namespace pds
