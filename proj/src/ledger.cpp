#include "pds/ledger.hpp"

#include "pds/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <set>

namespace pds {

namespace {

constexpr std::array<std::uint8_t, 4> kMessageMagic{'M', 'A', 'M', '1'};
constexpr std::size_t kMessageHeader = kMessageMagic.size() + 32 + 8 + crypto::kSignatureSize;

void put_u64(Bytes& out, std::uint64_t v)
{
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

std::uint64_t read_u64(const std::uint8_t* p)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v = (v << 8) | p[i];
    }
    return v;
}

Bytes associated_data(const Digest& root, std::uint64_t index)
{
    Bytes ad(root.begin(), root.end());
    put_u64(ad, index);
    return ad;
}

Bytes encode_message(const Digest& root, std::uint64_t index, const crypto::Signature& sig,
                     ByteView ciphertext)
{
    Bytes out(kMessageMagic.begin(), kMessageMagic.end());
    out.insert(out.end(), root.begin(), root.end());
    put_u64(out, index);
    out.insert(out.end(), sig.begin(), sig.end());
    out.insert(out.end(), ciphertext.begin(), ciphertext.end());
    return out;
}

// Uniform integer in [0, n) without modulo bias.
std::size_t bounded(std::mt19937_64& rng, std::size_t n)
{
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

template <std::size_t N>
std::array<std::uint8_t, N> array_from_hex(const std::string& hex)
{
    Bytes raw = from_hex(hex);
    if (raw.size() != N) {
        throw std::invalid_argument("expected " + std::to_string(N) + " bytes, got " +
                                    std::to_string(raw.size()));
    }
    std::array<std::uint8_t, N> a;
    std::copy(raw.begin(), raw.end(), a.begin());
    return a;
}

} // namespace

TxId transaction_hash(const std::vector<TxId>& parents, ByteView payload, std::uint64_t timestamp)
{
    Bytes header;
    header.push_back(static_cast<std::uint8_t>(parents.size()));
    for (const TxId& p : parents) {
        header.insert(header.end(), p.begin(), p.end());
    }
    put_u64(header, timestamp);
    put_u64(header, payload.size());
    return crypto::sha256({header, payload});
}

Digest channel_root_for(const crypto::PublicKey& owner, std::uint64_t nonce)
{
    Bytes n;
    put_u64(n, nonce);
    return crypto::sha256({ByteView(owner.data(), owner.size()), n});
}

Bytes message_signing_bytes(const Digest& root, std::uint64_t index, ByteView ciphertext)
{
    Bytes out(root.begin(), root.end());
    put_u64(out, index);
    out.insert(out.end(), ciphertext.begin(), ciphertext.end());
    return out;
}

Ledger::Ledger(LedgerConfig config) : config_(config), rng_(config.tip_seed)
{
    Transaction genesis;
    genesis.timestamp = 0;
    genesis.id = transaction_hash({}, {}, 0);
    order_.push_back(genesis.id);
    tips_.push_back(genesis.id);
    txs_.emplace(genesis.id, std::move(genesis));
}

TxId Ledger::pick_tip_locked(std::optional<TxId> exclude)
{
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < tips_.size(); ++i) {
        if (!exclude || tips_[i] != *exclude) {
            candidates.push_back(i);
        }
    }
    if (candidates.empty()) {
        return *exclude; // only one tip exists
    }
    return tips_[candidates[bounded(rng_, candidates.size())]];
}

TxId Ledger::attach_locked(ByteView payload, std::optional<TxId> predecessor)
{
    if (payload.size() > config_.payload_cap) {
        throw PayloadTooLarge("payload of " + std::to_string(payload.size()) +
                              " bytes exceeds cap " + std::to_string(config_.payload_cap));
    }

    TxId first = predecessor ? *predecessor : pick_tip_locked(std::nullopt);
    TxId second = pick_tip_locked(first);

    Transaction tx;
    tx.parents = {first, second};
    tx.payload.assign(payload.begin(), payload.end());
    tx.timestamp = order_.size();
    tx.id = transaction_hash(tx.parents, tx.payload, tx.timestamp);

    std::erase_if(tips_, [&](const TxId& t) { return t == first || t == second; });
    tips_.push_back(tx.id);
    order_.push_back(tx.id);
    TxId id = tx.id;
    txs_.emplace(id, std::move(tx));
    return id;
}

TxId Ledger::attach(ByteView payload)
{
    std::unique_lock lock(mutex_);
    return attach_locked(payload, std::nullopt);
}

Channel Ledger::create_channel(const crypto::SigningKeyPair& owner, std::uint64_t nonce)
{
    Channel ch;
    ch.root = channel_root_for(owner.public_key, nonce);
    ch.owner_public_key = owner.public_key;
    ch.nonce = nonce;

    std::unique_lock lock(mutex_);
    if (channels_.contains(ch.root)) {
        throw DuplicateChannel("channel " + to_hex(ch.root) + " already exists");
    }
    channels_.emplace(ch.root, ChannelState{ch, {}});
    return ch;
}

MessageRef Ledger::publish_message(const Digest& channel_root, ByteView plaintext,
                                   const crypto::SymmetricKey& key,
                                   const crypto::SecretKey& owner_secret)
{
    std::unique_lock lock(mutex_);
    auto it = channels_.find(channel_root);
    if (it == channels_.end()) {
        throw UnknownChannel("no channel " + to_hex(channel_root));
    }
    ChannelState& state = it->second;
    const std::uint64_t index = state.info.head_index;

    Bytes ciphertext = crypto::seal(plaintext, key, associated_data(channel_root, index));
    crypto::Signature sig =
        crypto::sign(message_signing_bytes(channel_root, index, ciphertext), owner_secret);
    if (!crypto::verify(message_signing_bytes(channel_root, index, ciphertext), sig,
                        state.info.owner_public_key)) {
        throw NotOwner("signature does not verify under the owner key of channel " +
                       to_hex(channel_root));
    }

    Bytes payload = encode_message(channel_root, index, sig, ciphertext);
    std::optional<TxId> predecessor;
    if (!state.messages.empty()) {
        predecessor = state.messages.back();
    }
    TxId tx = attach_locked(payload, predecessor);
    state.messages.push_back(tx);
    ++state.info.head_index;
    return MessageRef{channel_root, index, tx};
}

ChannelMessage Ledger::decode_locked(const Digest& root, std::uint64_t index) const
{
    auto it = channels_.find(root);
    if (it == channels_.end()) {
        throw NotFound("no channel " + to_hex(root));
    }
    if (index >= it->second.messages.size()) {
        throw NotFound("channel " + to_hex(root) + " has no message " + std::to_string(index));
    }
    const TxId& tx_id = it->second.messages[index];
    auto tx = txs_.find(tx_id);
    if (tx == txs_.end()) {
        throw NotFound("message transaction " + to_hex(tx_id) + " missing");
    }
    const Bytes& p = tx->second.payload;
    if (p.size() < kMessageHeader ||
        !std::equal(kMessageMagic.begin(), kMessageMagic.end(), p.begin())) {
        throw IntegrityError("transaction " + to_hex(tx_id) + " is not a channel message");
    }

    ChannelMessage m;
    std::size_t off = kMessageMagic.size();
    std::copy_n(p.begin() + off, 32, m.channel_root.begin());
    off += 32;
    m.index = read_u64(p.data() + off);
    off += 8;
    std::copy_n(p.begin() + off, crypto::kSignatureSize, m.signature.begin());
    off += crypto::kSignatureSize;
    m.ciphertext.assign(p.begin() + off, p.end());
    m.tx_id = tx_id;
    return m;
}

ChannelMessage Ledger::message(const Digest& channel_root, std::uint64_t index) const
{
    std::shared_lock lock(mutex_);
    return decode_locked(channel_root, index);
}

Bytes Ledger::read_message(const MessageRef& ref, const crypto::SymmetricKey& key) const
{
    Bytes out = read_message(ref.channel_root, ref.index, key);
    std::shared_lock lock(mutex_);
    const auto& msgs = channels_.at(ref.channel_root).messages;
    if (msgs[ref.index] != ref.tx_id) {
        throw NotFound("reference does not match the transaction carrying message " +
                       std::to_string(ref.index));
    }
    return out;
}

Bytes Ledger::read_message(const Digest& channel_root, std::uint64_t index,
                           const crypto::SymmetricKey& key) const
{
    ChannelMessage m;
    crypto::PublicKey owner;
    {
        std::shared_lock lock(mutex_);
        m = decode_locked(channel_root, index);
        owner = channels_.at(channel_root).info.owner_public_key;
    }
    if (m.channel_root != channel_root || m.index != index) {
        throw IntegrityError("message header does not match its channel position");
    }
    Bytes plaintext = crypto::open(m.ciphertext, key, associated_data(channel_root, index));
    if (!crypto::verify(message_signing_bytes(channel_root, index, m.ciphertext), m.signature,
                        owner)) {
        throw IntegrityError("owner signature no longer verifies");
    }
    if (!verify_inclusion(m.tx_id)) {
        throw IntegrityError("carrying transaction fails re-hash");
    }
    return plaintext;
}

bool Ledger::verify_inclusion(const TxId& id) const
{
    std::shared_lock lock(mutex_);
    auto it = txs_.find(id);
    if (it == txs_.end()) {
        return false;
    }
    const Transaction& tx = it->second;
    return tx.id == id && transaction_hash(tx.parents, tx.payload, tx.timestamp) == id;
}

std::optional<Channel> Ledger::channel(const Digest& root) const
{
    std::shared_lock lock(mutex_);
    auto it = channels_.find(root);
    if (it == channels_.end()) {
        return std::nullopt;
    }
    return it->second.info;
}

std::vector<Channel> Ledger::channels() const
{
    std::shared_lock lock(mutex_);
    std::vector<Channel> out;
    for (const auto& [root, state] : channels_) {
        out.push_back(state.info);
    }
    return out;
}

std::vector<MessageRef> Ledger::channel_messages(const Digest& root) const
{
    std::shared_lock lock(mutex_);
    auto it = channels_.find(root);
    if (it == channels_.end()) {
        throw NotFound("no channel " + to_hex(root));
    }
    std::vector<MessageRef> out;
    for (std::uint64_t i = 0; i < it->second.messages.size(); ++i) {
        out.push_back({root, i, it->second.messages[i]});
    }
    return out;
}

std::optional<Transaction> Ledger::transaction(const TxId& id) const
{
    std::shared_lock lock(mutex_);
    auto it = txs_.find(id);
    if (it == txs_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<Transaction> Ledger::transactions() const
{
    std::shared_lock lock(mutex_);
    std::vector<Transaction> out;
    out.reserve(order_.size());
    for (const TxId& id : order_) {
        out.push_back(txs_.at(id));
    }
    return out;
}

std::vector<TxId> Ledger::tips() const
{
    std::shared_lock lock(mutex_);
    return tips_;
}

TxId Ledger::genesis() const
{
    std::shared_lock lock(mutex_);
    return order_.front();
}

std::size_t Ledger::size() const
{
    std::shared_lock lock(mutex_);
    return order_.size();
}

bool Ledger::is_acyclic() const
{
    std::shared_lock lock(mutex_);
    // Edges run child -> parent. A node is ready once every child approving
    // it has been removed.
    std::map<TxId, std::size_t> approvers;
    for (const auto& [id, tx] : txs_) {
        approvers.try_emplace(id, 0);
        std::set<TxId> distinct(tx.parents.begin(), tx.parents.end());
        for (const TxId& p : distinct) {
            if (!txs_.contains(p)) {
                return false; // dangling approval
            }
            ++approvers[p];
        }
    }
    std::vector<TxId> ready;
    for (const auto& [id, n] : approvers) {
        if (n == 0) {
            ready.push_back(id);
        }
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        TxId id = ready.back();
        ready.pop_back();
        ++visited;
        const Transaction& tx = txs_.at(id);
        std::set<TxId> distinct(tx.parents.begin(), tx.parents.end());
        for (const TxId& p : distinct) {
            if (--approvers[p] == 0) {
                ready.push_back(p);
            }
        }
    }
    return visited == txs_.size();
}

std::string Ledger::export_json() const
{
    std::shared_lock lock(mutex_);
    nlohmann::json doc;
    doc["payload_cap"] = config_.payload_cap;
    nlohmann::json txs = nlohmann::json::array();
    for (const TxId& id : order_) {
        const Transaction& tx = txs_.at(id);
        nlohmann::json parents = nlohmann::json::array();
        for (const TxId& p : tx.parents) {
            parents.push_back(to_hex(p));
        }
        txs.push_back({{"id", to_hex(tx.id)},
                       {"parents", parents},
                       {"payload", to_hex(tx.payload)},
                       {"timestamp", tx.timestamp}});
    }
    doc["transactions"] = std::move(txs);
    nlohmann::json chans = nlohmann::json::array();
    for (const auto& [root, state] : channels_) {
        nlohmann::json msgs = nlohmann::json::array();
        for (const TxId& m : state.messages) {
            msgs.push_back(to_hex(m));
        }
        chans.push_back({{"root", to_hex(root)},
                         {"owner_public_key", to_hex(state.info.owner_public_key)},
                         {"nonce", state.info.nonce},
                         {"head_index", state.info.head_index},
                         {"messages", msgs}});
    }
    doc["channels"] = std::move(chans);
    return doc.dump();
}

std::unique_ptr<Ledger> Ledger::import_json(const std::string& document, LedgerConfig config)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("ledger document is not JSON: ") + e.what());
    }
    if (doc.contains("payload_cap")) {
        config.payload_cap = doc["payload_cap"].get<std::size_t>();
    }

    auto ledger = std::make_unique<Ledger>(config);
    ledger->order_.clear();
    ledger->txs_.clear();
    ledger->tips_.clear();

    try {
        std::set<TxId> approved;
        for (const auto& j : doc.at("transactions")) {
            Transaction tx;
            tx.id = array_from_hex<32>(j.at("id").get<std::string>());
            for (const auto& p : j.at("parents")) {
                tx.parents.push_back(array_from_hex<32>(p.get<std::string>()));
                approved.insert(tx.parents.back());
            }
            tx.payload = from_hex(j.at("payload").get<std::string>());
            tx.timestamp = j.at("timestamp").get<std::uint64_t>();
            ledger->order_.push_back(tx.id);
            ledger->txs_.emplace(tx.id, std::move(tx));
        }
        for (const TxId& id : ledger->order_) {
            if (!approved.contains(id)) {
                ledger->tips_.push_back(id);
            }
        }
        for (const auto& j : doc.at("channels")) {
            ChannelState state;
            state.info.root = array_from_hex<32>(j.at("root").get<std::string>());
            state.info.owner_public_key =
                array_from_hex<crypto::kPublicKeySize>(j.at("owner_public_key").get<std::string>());
            state.info.nonce = j.at("nonce").get<std::uint64_t>();
            state.info.head_index = j.at("head_index").get<std::uint64_t>();
            for (const auto& m : j.at("messages")) {
                state.messages.push_back(array_from_hex<32>(m.get<std::string>()));
            }
            ledger->channels_.emplace(state.info.root, std::move(state));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed ledger document: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("malformed ledger document: ") + e.what());
    }
    if (ledger->order_.empty()) {
        throw ConfigError("ledger document has no transactions");
    }
    return ledger;
}

} // namespace pds
