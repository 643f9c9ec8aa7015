#include "pds/remote_gateway.hpp"

#include "pds/errors.hpp"

#include <httplib.h>
#include <json.hpp>

namespace pds {

namespace {

using Clock = std::chrono::steady_clock;

httplib::Headers auth_headers(const GatewayOptions& o)
{
    httplib::Headers h;
    if (o.auth_token) {
        h.emplace("Authorization", "Bearer " + *o.auth_token);
    }
    return h;
}

httplib::Client make_client(const std::string& scheme_host_port, std::chrono::milliseconds timeout)
{
    httplib::Client cli(scheme_host_port);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    return cli;
}

std::string url_encode(std::string_view s)
{
    static constexpr char kDigits[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kDigits[c >> 4]);
            out.push_back(kDigits[c & 0x0f]);
        }
    }
    return out;
}

} // namespace

GatewayProtocol parse_gateway_protocol(std::string_view name)
{
    if (name == "ipfs-api" || name == "ipfs-gw") {
        return GatewayProtocol::IpfsApi;
    }
    if (name == "skynet-upload" || name == "skynet-gw") {
        return GatewayProtocol::SkynetUpload;
    }
    throw ConfigError("unknown gateway protocol: " + std::string(name));
}

GatewayBackend::Endpoint GatewayBackend::split_base(const std::string& base_url)
{
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("gateway URL needs a scheme: " + base_url);
    }
    auto path_start = base_url.find('/', scheme_end + 3);
    Endpoint e;
    if (path_start == std::string::npos) {
        e.scheme_host_port = base_url;
    } else {
        e.scheme_host_port = base_url.substr(0, path_start);
        e.path_prefix = base_url.substr(path_start);
        while (!e.path_prefix.empty() && e.path_prefix.back() == '/') {
            e.path_prefix.pop_back();
        }
    }
    return e;
}

GatewayBackend::GatewayBackend(GatewayOptions options)
    : options_(std::move(options)), endpoint_(split_base(options_.base_url))
{
}

PutReceipt GatewayBackend::put(ByteView content)
{
    if (content.empty()) {
        throw std::invalid_argument("remote gateways do not accept empty objects");
    }
    const bool ipfs = options_.protocol == GatewayProtocol::IpfsApi;
    const std::string path = endpoint_.path_prefix + (ipfs ? "/api/v0/add" : "/skynet/skyfile");

    httplib::MultipartFormDataItems items{
        {"file", std::string(content.begin(), content.end()), "blob", "application/octet-stream"},
    };

    auto cli = make_client(endpoint_.scheme_host_port, options_.timeout);
    const auto start = Clock::now();
    auto res = cli.Post(path, auth_headers(options_), items);
    const double latency =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();

    PutReceipt receipt;
    receipt.size = content.size();
    receipt.latency_ms = latency;

    if (!res) {
        if (res.error() == httplib::Error::Read || res.error() == httplib::Error::Write) {
            // Connection established but the gateway never answered in time.
            receipt.outcome = Outcome::GatewayTimeout;
            return receipt;
        }
        throw TransportError("gateway " + options_.base_url + " unreachable: " +
                             httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        receipt.outcome = (res->status == 504 || res->status == 408) ? Outcome::GatewayTimeout
                                                                      : Outcome::ServerError;
        return receipt;
    }

    nlohmann::json body = nlohmann::json::parse(res->body, nullptr, false);
    const char* field = ipfs ? "Hash" : "skylink";
    if (body.is_discarded() || !body.contains(field) || !body[field].is_string()) {
        receipt.outcome = Outcome::ServerError;
        return receipt;
    }

    receipt.outcome = Outcome::Ok;
    receipt.gateway_id = body[field].get<std::string>();
    receipt.address = compute_address(content);
    std::lock_guard lock(mutex_);
    ids_[*receipt.address] = receipt.gateway_id;
    return receipt;
}

Bytes GatewayBackend::get(const ContentAddress& address)
{
    std::string id;
    {
        std::lock_guard lock(mutex_);
        auto it = ids_.find(address);
        if (it == ids_.end()) {
            throw NotFound("no gateway identifier known for " + address.hex());
        }
        id = it->second;
    }

    const std::string path = options_.protocol == GatewayProtocol::IpfsApi
                                 ? endpoint_.path_prefix + "/api/v0/cat?arg=" + url_encode(id)
                                 : endpoint_.path_prefix + "/" + url_encode(id);
    auto cli = make_client(endpoint_.scheme_host_port, options_.timeout);
    auto res = cli.Get(path, auth_headers(options_));
    if (!res) {
        throw TransportError("gateway " + options_.base_url + " unreachable: " +
                             httplib::to_string(res.error()));
    }
    if (res->status == 404) {
        throw NotFound("gateway has no object " + id);
    }
    if (res->status != 200) {
        throw TransportError("gateway answered " + std::to_string(res->status) + " for " + id);
    }
    Bytes data(res->body.begin(), res->body.end());
    verify_content(data, address);
    return data;
}

void GatewayBackend::pin(const ContentAddress& address)
{
    std::lock_guard lock(mutex_);
    if (!ids_.contains(address)) {
        throw NotFound("cannot pin unknown object " + address.hex());
    }
}

std::optional<std::string> GatewayBackend::gateway_id(const ContentAddress& address) const
{
    std::lock_guard lock(mutex_);
    auto it = ids_.find(address);
    if (it == ids_.end()) {
        return std::nullopt;
    }
    return it->second;
}

} // namespace pds
