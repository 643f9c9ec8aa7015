#include "pds/crypto.hpp"

#include "pds/errors.hpp"

#include <openssl/evp.h>
#include <sodium.h>

#include <memory>
#include <mutex>
#include <stdexcept>

namespace pds {

namespace {

void ensure_sodium()
{
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) {
            throw std::runtime_error("libsodium initialisation failed");
        }
    });
}

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

} // namespace

std::string to_hex(ByteView bytes)
{
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0) {
        throw std::invalid_argument("hex string has odd length");
    }
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw std::invalid_argument("invalid hex character");
        }
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

Digest digest_from_hex(std::string_view hex)
{
    Bytes raw = from_hex(hex);
    if (raw.size() != Digest{}.size()) {
        throw std::invalid_argument("digest must be 32 bytes");
    }
    Digest d;
    std::copy(raw.begin(), raw.end(), d.begin());
    return d;
}

namespace crypto {

Digest sha256(ByteView data)
{
    return sha256({data});
}

Digest sha256(std::initializer_list<ByteView> parts)
{
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("EVP sha256 init failed");
    }
    for (ByteView p : parts) {
        if (!p.empty() && EVP_DigestUpdate(ctx.get(), p.data(), p.size()) != 1) {
            throw std::runtime_error("EVP sha256 update failed");
        }
    }
    Digest out;
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
        throw std::runtime_error("EVP sha256 final failed");
    }
    return out;
}

void random_bytes(std::span<std::uint8_t> out)
{
    ensure_sodium();
    randombytes_buf(out.data(), out.size());
}

SymmetricKey random_key()
{
    SymmetricKey k;
    random_bytes(k);
    return k;
}

SigningKeyPair generate_keypair()
{
    ensure_sodium();
    SigningKeyPair kp;
    crypto_sign_keypair(kp.public_key.data(), kp.secret_key.data());
    return kp;
}

SigningKeyPair keypair_from_seed(const std::array<std::uint8_t, 32>& seed)
{
    ensure_sodium();
    SigningKeyPair kp;
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

Signature sign(ByteView message, const SecretKey& sk)
{
    ensure_sodium();
    Signature sig;
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), sk.data());
    return sig;
}

bool verify(ByteView message, const Signature& sig, const PublicKey& pk)
{
    ensure_sodium();
    return crypto_sign_verify_detached(sig.data(), message.data(), message.size(), pk.data()) == 0;
}

Bytes seal(ByteView plaintext, const SymmetricKey& key, ByteView associated)
{
    ensure_sodium();
    Bytes out(plaintext.size() + kSealOverhead);
    std::uint8_t* nonce = out.data();
    randombytes_buf(nonce, kNonceSize);
    unsigned long long written = 0;
    crypto_aead_xchacha20poly1305_ietf_encrypt(
        out.data() + kNonceSize, &written, plaintext.data(), plaintext.size(),
        associated.data(), associated.size(), nullptr, nonce, key.data());
    out.resize(kNonceSize + written);
    return out;
}

Bytes open(ByteView sealed, const SymmetricKey& key, ByteView associated)
{
    ensure_sodium();
    if (sealed.size() < kSealOverhead) {
        throw DecryptionFailure("sealed buffer shorter than nonce and tag");
    }
    Bytes out(sealed.size() - kSealOverhead);
    unsigned long long written = 0;
    int rc = crypto_aead_xchacha20poly1305_ietf_decrypt(
        out.data(), &written, nullptr, sealed.data() + kNonceSize, sealed.size() - kNonceSize,
        associated.data(), associated.size(), sealed.data(), key.data());
    if (rc != 0) {
        throw DecryptionFailure("authentication tag mismatch");
    }
    out.resize(written);
    return out;
}

std::string fingerprint(const PublicKey& pk)
{
    Digest d = sha256(ByteView(pk.data(), pk.size()));
    return to_hex(ByteView(d.data(), 16));
}

} // namespace crypto
} // namespace pds
