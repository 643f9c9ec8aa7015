#pragma once

#include "pds/content_store.hpp"

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

namespace pds {

enum class GatewayProtocol { IpfsApi, SkynetUpload };

struct GatewayOptions {
    std::string base_url;                 // e.g. http://127.0.0.1:5001
    GatewayProtocol protocol = GatewayProtocol::IpfsApi;
    std::optional<std::string> auth_token; // sent as "Authorization: Bearer ..."
    std::chrono::milliseconds timeout{60000};
};

/// HTTP client for a public or proprietary DFS gateway.
///
///   ipfs-api:      POST <base>/api/v0/add (multipart "file"), JSON field "Hash"
///                  GET  <base>/api/v0/cat?arg=<id>
///   skynet-upload: POST <base>/skynet/skyfile (multipart "file"), JSON "skylink"
///                  GET  <base>/<skylink>
///
/// The gateway's own identifier is kept next to our SHA-256 address; get()
/// maps one to the other and re-verifies the returned bytes. Pinning is
/// implied by upload.
class GatewayBackend final : public Backend {
public:
    explicit GatewayBackend(GatewayOptions options);

    BackendKind kind() const noexcept override { return BackendKind::RemoteGateway; }
    PutReceipt put(ByteView content) override;
    Bytes get(const ContentAddress& address) override;
    void pin(const ContentAddress& address) override;

    /// Gateway identifier recorded for an address, if this client uploaded it.
    std::optional<std::string> gateway_id(const ContentAddress& address) const;

    const GatewayOptions& options() const noexcept { return options_; }

private:
    struct Endpoint {
        std::string scheme_host_port;
        std::string path_prefix;
    };
    static Endpoint split_base(const std::string& base_url);

    GatewayOptions options_;
    Endpoint endpoint_;
    mutable std::mutex mutex_;
    std::unordered_map<ContentAddress, std::string> ids_;
};

GatewayProtocol parse_gateway_protocol(std::string_view name);

} // namespace pds
