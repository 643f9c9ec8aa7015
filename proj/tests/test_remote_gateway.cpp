#include "mock_gateway.hpp"

#include "pds/errors.hpp"
#include "pds/remote_gateway.hpp"

#include <doctest.h>

using namespace pds;

namespace {

GatewayOptions options(const std::string& url, GatewayProtocol protocol,
                       std::optional<std::string> token = std::nullopt)
{
    GatewayOptions o;
    o.base_url = url;
    o.protocol = protocol;
    o.auth_token = std::move(token);
    return o;
}

Bytes bytes_of(const std::string& s)
{
    return Bytes(s.begin(), s.end());
}

} // namespace

TEST_CASE("ipfs-api add and cat round trip")
{
    MockGateway mock;
    GatewayBackend gw(options(mock.url(), GatewayProtocol::IpfsApi));
    const Bytes data = bytes_of("hello ipfs");
    PutReceipt r = put(data, gw);
    REQUIRE(r.ok());
    CHECK(r.address == compute_address(data));
    CHECK(r.gateway_id.rfind("Qm", 0) == 0);
    CHECK(gw.gateway_id(*r.address) == r.gateway_id);
    CHECK(r.latency_ms >= 0.0);
    CHECK(get(*r.address, gw) == data);
    CHECK_NOTHROW(pin(*r.address, gw));
}

TEST_CASE("skynet upload and download round trip")
{
    MockGateway mock;
    GatewayBackend gw(options(mock.url(), GatewayProtocol::SkynetUpload));
    const Bytes data = bytes_of("hello sia");
    PutReceipt r = put(data, gw);
    REQUIRE(r.ok());
    CHECK(r.gateway_id.rfind("sky", 0) == 0);
    CHECK(get(*r.address, gw) == data);
}

TEST_CASE("base URL path prefix is kept")
{
    MockGateway mock("/gw/v1");
    GatewayBackend gw(options(mock.url() + "/", GatewayProtocol::IpfsApi));
    const Bytes data = bytes_of("prefixed");
    PutReceipt r = put(data, gw);
    REQUIRE(r.ok());
    CHECK(get(*r.address, gw) == data);
}

TEST_CASE("gateway error statuses map to 500 and 504 outcomes")
{
    MockGateway mock;
    GatewayBackend gw(options(mock.url(), GatewayProtocol::IpfsApi));
    const Bytes data = bytes_of("x");

    mock.fail_status = 504;
    CHECK(put(data, gw).outcome == Outcome::GatewayTimeout);
    mock.fail_status = 500;
    PutReceipt r = put(data, gw);
    CHECK(r.outcome == Outcome::ServerError);
    CHECK_FALSE(r.address);
    mock.fail_status = 503;
    CHECK(put(data, gw).outcome == Outcome::ServerError);
    CHECK_THROWS_AS(get(compute_address(data), gw), NotFound);
}

TEST_CASE("auth token is sent as a bearer header")
{
    MockGateway mock;
    mock.required_token = "s3cret";
    GatewayBackend anonymous(options(mock.url(), GatewayProtocol::IpfsApi));
    CHECK_FALSE(put(bytes_of("a"), anonymous).ok());

    GatewayBackend authed(options(mock.url(), GatewayProtocol::IpfsApi, std::string("s3cret")));
    CHECK(put(bytes_of("a"), authed).ok());
}

TEST_CASE("tampered download raises IntegrityError")
{
    MockGateway mock;
    GatewayBackend gw(options(mock.url(), GatewayProtocol::IpfsApi));
    const Bytes data = bytes_of("do not touch");
    PutReceipt r = put(data, gw);
    REQUIRE(r.ok());
    mock.corrupt = true;
    CHECK_THROWS_AS(get(*r.address, gw), IntegrityError);
}

TEST_CASE("unreachable gateway is a transport error")
{
    // nothing listens on port 1
    GatewayOptions opt = options("http://127.0.0.1:1", GatewayProtocol::IpfsApi);
    opt.timeout = std::chrono::milliseconds(2000);
    GatewayBackend gw(opt);
    CHECK_THROWS_AS(put(bytes_of("x"), gw), TransportError);
}

TEST_CASE("remote backends reject empty objects and unknown pins")
{
    MockGateway mock;
    GatewayBackend gw(options(mock.url(), GatewayProtocol::IpfsApi));
    CHECK_THROWS(put(Bytes{}, gw));
    CHECK_THROWS_AS(pin(compute_address(bytes_of("never")), gw), NotFound);
}

TEST_CASE("protocol names and URL validation")
{
    CHECK(parse_gateway_protocol("ipfs-gw") == GatewayProtocol::IpfsApi);
    CHECK(parse_gateway_protocol("ipfs-api") == GatewayProtocol::IpfsApi);
    CHECK(parse_gateway_protocol("skynet-gw") == GatewayProtocol::SkynetUpload);
    CHECK_THROWS_AS(parse_gateway_protocol("ftp"), ConfigError);
    CHECK_THROWS_AS(GatewayBackend{options("127.0.0.1:5001", GatewayProtocol::IpfsApi)}, ConfigError);
}
