#pragma once

#include "pds/access_control.hpp"

#include <json.hpp>

namespace httplib {
class Server;
}

namespace pds {

nlohmann::json contract_to_json(const AclContract& contract);
AclContract contract_from_json(const nlohmann::json& j);
nlohmann::json keyset_to_json(const KeySet& keys);
KeySet keyset_from_json(const nlohmann::json& j);
nlohmann::json key_request_to_json(const KeyRequest& request);
KeyRequest key_request_from_json(const nlohmann::json& j);

/// Registers the ACL endpoints on `server`:
///   POST /contracts                  {owner_id, channel_root, bundles, price}
///   GET  /contracts/{id}
///   POST /contracts/{id}/grant       {caller_id, consumer_id, bundle_id}
///   POST /contracts/{id}/purchase    {consumer_id, bundle_id, payment}
///   GET  /contracts/{id}/authorized?consumer=..&bundle=..
///   GET  /challenge                  -> {nonce}
///   POST /keys                       KeyRequest -> KeySet
/// Errors come back as {"error": kind, "message": text} with 400, 402, 403,
/// 404 or 409. Both objects must outlive the server.
void mount_acl_routes(httplib::Server& server, AclRegistry& registry,
                      AuthorizationService& auth);

} // namespace pds
