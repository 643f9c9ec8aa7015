#include "pds/acl_http.hpp"

#include "pds/errors.hpp"

#include <httplib.h>

namespace pds {

using nlohmann::json;

namespace {

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(const json& j, const char* field)
{
    Bytes b = from_hex(j.at(field).get<std::string>());
    if (b.size() != N) {
        throw InvalidReference(std::string(field) + " must be " + std::to_string(N) + " bytes");
    }
    std::array<std::uint8_t, N> out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
}

json ref_to_json(const BundleReference& r)
{
    return {{"channel_root", to_hex(r.channel_root)},
            {"index", r.index ? json(*r.index) : json(nullptr)}};
}

BundleReference ref_from_json(const json& j)
{
    BundleReference r;
    r.channel_root = fixed_from_hex<32>(j, "channel_root");
    if (j.contains("index") && !j["index"].is_null()) {
        r.index = j["index"].get<std::uint64_t>();
    }
    return r;
}

std::map<BundleId, std::set<BundleReference>> bundles_from_json(const json& j)
{
    std::map<BundleId, std::set<BundleReference>> out;
    for (const auto& [id, refs] : j.items()) {
        auto& set = out[id];
        for (const auto& r : refs) {
            set.insert(ref_from_json(r));
        }
    }
    return out;
}

struct HttpError {
    int status;
    const char* kind;
};

HttpError classify(const std::exception& e)
{
    if (dynamic_cast<const NotAuthorized*>(&e)) return {403, "NotAuthorized"};
    if (dynamic_cast<const NotOwner*>(&e)) return {403, "NotOwner"};
    if (dynamic_cast<const UnknownContract*>(&e)) return {404, "UnknownContract"};
    if (dynamic_cast<const UnknownBundle*>(&e)) return {404, "UnknownBundle"};
    if (dynamic_cast<const UnknownChannel*>(&e)) return {404, "UnknownChannel"};
    if (dynamic_cast<const AlreadyBound*>(&e)) return {409, "AlreadyBound"};
    if (dynamic_cast<const InsufficientPayment*>(&e)) return {402, "InsufficientPayment"};
    if (dynamic_cast<const InsufficientFunds*>(&e)) return {402, "InsufficientFunds"};
    if (dynamic_cast<const InvalidReference*>(&e)) return {400, "InvalidReference"};
    return {400, "BadRequest"};
}

template <typename F>
auto guarded(F f)
{
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            json body = f(req);
            res.status = 200;
            res.set_content(body.dump(), "application/json");
        } catch (const std::exception& e) {
            HttpError err = classify(e);
            res.status = err.status;
            res.set_content(json{{"error", err.kind}, {"message", e.what()}}.dump(),
                            "application/json");
        }
    };
}

} // namespace

json contract_to_json(const AclContract& c)
{
    json bundles = json::object();
    for (const auto& [id, refs] : c.bundles) {
        json arr = json::array();
        for (const auto& r : refs) {
            arr.push_back(ref_to_json(r));
        }
        bundles[id] = std::move(arr);
    }
    json acl = json::array();
    for (const auto& [bundle, consumer] : c.acl) {
        acl.push_back({{"bundle_id", bundle}, {"consumer_id", consumer}});
    }
    return {{"contract_id", c.contract_id},
            {"channel_root", to_hex(c.channel_root)},
            {"owner_id", c.owner_id},
            {"bundles", std::move(bundles)},
            {"price", c.price},
            {"acl", std::move(acl)}};
}

AclContract contract_from_json(const json& j)
{
    AclContract c;
    c.contract_id = j.at("contract_id").get<std::string>();
    c.channel_root = fixed_from_hex<32>(j, "channel_root");
    c.owner_id = j.at("owner_id").get<std::string>();
    c.bundles = bundles_from_json(j.at("bundles"));
    c.price = j.at("price").get<std::map<BundleId, std::uint64_t>>();
    for (const auto& e : j.at("acl")) {
        c.acl.emplace(e.at("bundle_id").get<std::string>(), e.at("consumer_id").get<std::string>());
    }
    return c;
}

json keyset_to_json(const KeySet& keys)
{
    json arr = json::array();
    for (const auto& [id, key] : keys.keys) {
        arr.push_back({{"channel_root", to_hex(id.channel_root)},
                       {"index", id.index},
                       {"key", to_hex(key)}});
    }
    return {{"keys", std::move(arr)}};
}

KeySet keyset_from_json(const json& j)
{
    KeySet out;
    for (const auto& e : j.at("keys")) {
        MessageKeyId id{fixed_from_hex<32>(e, "channel_root"), e.at("index").get<std::uint64_t>()};
        out.keys.emplace(id, fixed_from_hex<crypto::kKeySize>(e, "key"));
    }
    return out;
}

json key_request_to_json(const KeyRequest& r)
{
    return {{"consumer_public_key", to_hex(r.consumer_public_key)},
            {"contract_id", r.contract_id},
            {"bundle_id", r.bundle_id},
            {"nonce", to_hex(r.nonce)},
            {"signature", to_hex(r.signature)}};
}

KeyRequest key_request_from_json(const json& j)
{
    KeyRequest r;
    r.consumer_public_key = fixed_from_hex<crypto::kPublicKeySize>(j, "consumer_public_key");
    r.contract_id = j.at("contract_id").get<std::string>();
    r.bundle_id = j.at("bundle_id").get<std::string>();
    r.nonce = fixed_from_hex<32>(j, "nonce");
    r.signature = fixed_from_hex<crypto::kSignatureSize>(j, "signature");
    return r;
}

void mount_acl_routes(httplib::Server& server, AclRegistry& registry, AuthorizationService& auth)
{
    server.Post("/contracts", guarded([&registry](const httplib::Request& req) {
        json b = json::parse(req.body);
        std::map<BundleId, std::uint64_t> price;
        if (b.contains("price")) {
            price = b["price"].get<std::map<BundleId, std::uint64_t>>();
        }
        AclContract c = registry.deploy_contract(b.at("owner_id").get<std::string>(),
                                                 fixed_from_hex<32>(b, "channel_root"),
                                                 bundles_from_json(b.at("bundles")), price);
        return contract_to_json(c);
    }));

    server.Get(R"(/contracts/([^/]+))", guarded([&registry](const httplib::Request& req) {
        return contract_to_json(registry.contract(req.matches[1]));
    }));

    server.Post(R"(/contracts/([^/]+)/grant)", guarded([&registry](const httplib::Request& req) {
        json b = json::parse(req.body);
        return contract_to_json(registry.grant(req.matches[1], b.at("caller_id").get<std::string>(),
                                               b.at("consumer_id").get<std::string>(),
                                               b.at("bundle_id").get<std::string>()));
    }));

    server.Post(R"(/contracts/([^/]+)/purchase)", guarded([&registry](const httplib::Request& req) {
        json b = json::parse(req.body);
        return contract_to_json(registry.purchase(
            req.matches[1], b.at("consumer_id").get<std::string>(),
            b.at("bundle_id").get<std::string>(), b.at("payment").get<std::uint64_t>()));
    }));

    server.Get(R"(/contracts/([^/]+)/authorized)",
               guarded([&registry](const httplib::Request& req) {
                   return json{{"authorized",
                                registry.is_authorized(req.matches[1],
                                                       req.get_param_value("consumer"),
                                                       req.get_param_value("bundle"))}};
               }));

    server.Get("/challenge", guarded([&auth](const httplib::Request&) {
        return json{{"nonce", to_hex(auth.challenge())}};
    }));

    server.Post("/keys", guarded([&auth](const httplib::Request& req) {
        return keyset_to_json(auth.handle_request(key_request_from_json(json::parse(req.body))));
    }));
}

} // namespace pds
