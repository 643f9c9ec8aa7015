#include "pds/access_control.hpp"

#include "pds/errors.hpp"

namespace pds {

void TokenLedger::mint(const AccountId& account, std::uint64_t amount)
{
    std::lock_guard lock(mutex_);
    balances_[account] += amount;
    supply_ += amount;
}

std::uint64_t TokenLedger::balance(const AccountId& account) const
{
    std::lock_guard lock(mutex_);
    auto it = balances_.find(account);
    return it == balances_.end() ? 0 : it->second;
}

void TokenLedger::transfer(const AccountId& from, const AccountId& to, std::uint64_t amount)
{
    std::lock_guard lock(mutex_);
    auto it = balances_.find(from);
    const std::uint64_t have = it == balances_.end() ? 0 : it->second;
    if (have < amount) {
        throw InsufficientFunds(from + " holds " + std::to_string(have) + ", needs " +
                                std::to_string(amount));
    }
    if (amount == 0) {
        return;
    }
    it->second -= amount;
    balances_[to] += amount;
}

std::uint64_t TokenLedger::total_supply() const
{
    std::lock_guard lock(mutex_);
    return supply_;
}

std::map<AccountId, std::uint64_t> TokenLedger::balances() const
{
    std::lock_guard lock(mutex_);
    return balances_;
}

AclRegistry::AclRegistry(const Ledger& ledger, TokenLedger& tokens)
    : ledger_(ledger), tokens_(tokens)
{
}

AclContract AclRegistry::deploy_contract(const AccountId& owner_id, const Digest& channel_root,
                                         std::map<BundleId, std::set<BundleReference>> bundles,
                                         std::map<BundleId, std::uint64_t> prices)
{
    if (!ledger_.channel(channel_root)) {
        throw UnknownChannel("no channel " + to_hex(channel_root));
    }
    for (const auto& [id, refs] : bundles) {
        for (const BundleReference& ref : refs) {
            if (ref.channel_root != channel_root) {
                throw InvalidReference("bundle " + id + " references foreign channel " +
                                       to_hex(ref.channel_root));
            }
        }
    }
    for (const auto& [id, p] : prices) {
        if (!bundles.contains(id)) {
            throw UnknownBundle("price given for undefined bundle " + id);
        }
    }

    auto e = std::make_unique<Entry>();
    e->state.contract_id = "acl-" + to_hex(channel_root).substr(0, 16);
    e->state.channel_root = channel_root;
    e->state.owner_id = owner_id;
    for (const auto& [id, refs] : bundles) {
        e->state.price[id] = 0;
    }
    for (const auto& [id, p] : prices) {
        e->state.price[id] = p;
    }
    e->state.bundles = std::move(bundles);

    std::unique_lock lock(mutex_);
    if (by_channel_.contains(channel_root)) {
        throw AlreadyBound("channel " + to_hex(channel_root) + " already has contract " +
                           by_channel_[channel_root]);
    }
    AclContract snapshot = e->state;
    by_channel_.emplace(channel_root, snapshot.contract_id);
    contracts_.emplace(snapshot.contract_id, std::move(e));
    return snapshot;
}

AclRegistry::Entry& AclRegistry::entry(const std::string& contract_id) const
{
    std::shared_lock lock(mutex_);
    auto it = contracts_.find(contract_id);
    if (it == contracts_.end()) {
        throw UnknownContract("no contract " + contract_id);
    }
    return *it->second;
}

AclContract AclRegistry::grant(const std::string& contract_id, const AccountId& caller_id,
                               const ConsumerId& consumer_id, const BundleId& bundle_id)
{
    Entry& e = entry(contract_id);
    std::unique_lock lock(e.mutex);
    if (caller_id != e.state.owner_id) {
        throw NotOwner(caller_id + " is not the owner of " + contract_id);
    }
    if (!e.state.bundles.contains(bundle_id)) {
        throw UnknownBundle("no bundle " + bundle_id + " in " + contract_id);
    }
    e.state.acl.emplace(bundle_id, consumer_id);
    return e.state;
}

AclContract AclRegistry::purchase(const std::string& contract_id, const ConsumerId& consumer_id,
                                  const BundleId& bundle_id, std::uint64_t payment)
{
    Entry& e = entry(contract_id);
    std::unique_lock lock(e.mutex);
    if (!e.state.bundles.contains(bundle_id)) {
        throw UnknownBundle("no bundle " + bundle_id + " in " + contract_id);
    }
    const std::uint64_t price = e.state.price.at(bundle_id);
    if (payment < price) {
        throw InsufficientPayment("bundle " + bundle_id + " costs " + std::to_string(price) +
                                  ", paid " + std::to_string(payment));
    }
    tokens_.transfer(consumer_id, e.state.owner_id, payment);
    e.state.acl.emplace(bundle_id, consumer_id);
    return e.state;
}

bool AclRegistry::is_authorized(const std::string& contract_id, const ConsumerId& consumer_id,
                                const BundleId& bundle_id) const
{
    std::shared_lock lock(mutex_);
    auto it = contracts_.find(contract_id);
    if (it == contracts_.end()) {
        return false;
    }
    std::shared_lock entry_lock(it->second->mutex);
    return it->second->state.acl.contains({bundle_id, consumer_id});
}

AclContract AclRegistry::contract(const std::string& contract_id) const
{
    Entry& e = entry(contract_id);
    std::shared_lock lock(e.mutex);
    return e.state;
}

std::optional<std::string> AclRegistry::contract_for_channel(const Digest& channel_root) const
{
    std::shared_lock lock(mutex_);
    auto it = by_channel_.find(channel_root);
    if (it == by_channel_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void KeyVault::store(const MessageKeyId& id, const crypto::SymmetricKey& key)
{
    std::lock_guard lock(mutex_);
    keys_[id] = key;
}

std::optional<crypto::SymmetricKey> KeyVault::find(const MessageKeyId& id) const
{
    std::lock_guard lock(mutex_);
    auto it = keys_.find(id);
    if (it == keys_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t KeyVault::size() const
{
    std::lock_guard lock(mutex_);
    return keys_.size();
}

Bytes key_request_signing_bytes(const Nonce& nonce, const std::string& contract_id,
                                const BundleId& bundle_id)
{
    Bytes out(nonce.begin(), nonce.end());
    out.insert(out.end(), contract_id.begin(), contract_id.end());
    out.push_back(0);
    out.insert(out.end(), bundle_id.begin(), bundle_id.end());
    return out;
}

KeyRequest make_key_request(const crypto::SigningKeyPair& consumer, const Nonce& nonce,
                            const std::string& contract_id, const BundleId& bundle_id)
{
    KeyRequest r;
    r.consumer_public_key = consumer.public_key;
    r.contract_id = contract_id;
    r.bundle_id = bundle_id;
    r.nonce = nonce;
    r.signature =
        crypto::sign(key_request_signing_bytes(nonce, contract_id, bundle_id), consumer.secret_key);
    return r;
}

AuthorizationService::AuthorizationService(const AclRegistry& registry, const Ledger& ledger,
                                           KeyVault& vault)
    : registry_(registry), ledger_(ledger), vault_(vault)
{
}

KeySet AuthorizationService::issue_keys(const ConsumerId& consumer_id,
                                        const std::string& contract_id,
                                        const BundleId& bundle_id) const
{
    AclContract c = registry_.contract(contract_id);
    auto bundle = c.bundles.find(bundle_id);
    if (bundle == c.bundles.end()) {
        throw UnknownBundle("no bundle " + bundle_id + " in " + contract_id);
    }
    if (!c.acl.contains({bundle_id, consumer_id})) {
        throw NotAuthorized(consumer_id + " may not access " + contract_id + "/" + bundle_id);
    }

    KeySet out;
    auto add = [&](const MessageKeyId& id) {
        if (auto key = vault_.find(id)) {
            out.keys.emplace(id, *key);
        }
    };
    for (const BundleReference& ref : bundle->second) {
        if (ref.index) {
            add({ref.channel_root, *ref.index});
        } else {
            for (const MessageRef& m : ledger_.channel_messages(ref.channel_root)) {
                add({m.channel_root, m.index});
            }
        }
    }
    return out;
}

Nonce AuthorizationService::challenge()
{
    Nonce n;
    crypto::random_bytes(n);
    std::lock_guard lock(mutex_);
    outstanding_.insert(n);
    return n;
}

KeySet AuthorizationService::handle_request(const KeyRequest& request)
{
    {
        std::lock_guard lock(mutex_);
        if (outstanding_.erase(request.nonce) == 0) {
            throw NotAuthorized("unknown or already used nonce");
        }
    }
    if (!crypto::verify(key_request_signing_bytes(request.nonce, request.contract_id,
                                                  request.bundle_id),
                        request.signature, request.consumer_public_key)) {
        throw NotAuthorized("request signature does not verify");
    }
    return issue_keys(crypto::fingerprint(request.consumer_public_key), request.contract_id,
                      request.bundle_id);
}

} // namespace pds
