#include "pds/content_store.hpp"

#include "pds/errors.hpp"
#include "pds/sim_node.hpp"

namespace pds {

ContentAddress ContentAddress::from_hex(std::string_view hex)
{
    return ContentAddress(digest_from_hex(hex));
}

ContentAddress compute_address(ByteView content)
{
    return ContentAddress(crypto::sha256(content));
}

int status_code(Outcome o)
{
    return static_cast<int>(o);
}

PutReceipt put(ByteView content, Backend& backend)
{
    return backend.put(content);
}

Bytes get(const ContentAddress& address, Backend& backend)
{
    return backend.get(address);
}

void pin(const ContentAddress& address, Backend& backend)
{
    backend.pin(address);
}

double drain(Backend& backend, double interval_s)
{
    auto* sim = dynamic_cast<SimulatedBackend*>(&backend);
    if (sim == nullptr) {
        throw UnsupportedOperation("drain is only defined for simulated backends");
    }
    return sim->drain(interval_s);
}

void verify_content(ByteView bytes, const ContentAddress& expected)
{
    ContentAddress actual = compute_address(bytes);
    if (actual != expected) {
        throw IntegrityError("object " + expected.hex() + " hashes to " + actual.hex());
    }
}

} // namespace pds
