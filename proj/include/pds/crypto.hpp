#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pds {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// SHA-256 output; also used as transaction id and channel root.
using Digest = std::array<std::uint8_t, 32>;

inline ByteView as_bytes(std::string_view s)
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string to_hex(ByteView bytes);

template <std::size_t N>
std::string to_hex(const std::array<std::uint8_t, N>& a)
{
    return to_hex(ByteView(a.data(), a.size()));
}

// Throws std::invalid_argument on odd length or a non-hex character.
Bytes from_hex(std::string_view hex);
Digest digest_from_hex(std::string_view hex);

namespace crypto {

constexpr std::size_t kKeySize = 32;
constexpr std::size_t kNonceSize = 24;
constexpr std::size_t kTagSize = 16;
constexpr std::size_t kSealOverhead = kNonceSize + kTagSize;
constexpr std::size_t kPublicKeySize = 32;
constexpr std::size_t kSecretKeySize = 64;
constexpr std::size_t kSignatureSize = 64;

using SymmetricKey = std::array<std::uint8_t, kKeySize>;
using PublicKey = std::array<std::uint8_t, kPublicKeySize>;
using SecretKey = std::array<std::uint8_t, kSecretKeySize>;
using Signature = std::array<std::uint8_t, kSignatureSize>;

struct SigningKeyPair {
    PublicKey public_key{};
    SecretKey secret_key{};
};

Digest sha256(ByteView data);

/// Concatenation hash; avoids building a temporary buffer.
Digest sha256(std::initializer_list<ByteView> parts);

void random_bytes(std::span<std::uint8_t> out);
SymmetricKey random_key();

SigningKeyPair generate_keypair();
/// Deterministic keypair from a 32-byte seed.
SigningKeyPair keypair_from_seed(const std::array<std::uint8_t, 32>& seed);

Signature sign(ByteView message, const SecretKey& sk);
bool verify(ByteView message, const Signature& sig, const PublicKey& pk);

/// Authenticated encryption (XChaCha20-Poly1305). Output layout is
/// nonce || ciphertext || tag, so sealed size = plaintext size + kSealOverhead.
Bytes seal(ByteView plaintext, const SymmetricKey& key, ByteView associated = {});

/// Throws DecryptionFailure when the tag does not verify.
Bytes open(ByteView sealed, const SymmetricKey& key, ByteView associated = {});

/// Short stable identity string for a public key: first 16 bytes of its
/// SHA-256, hex encoded.
std::string fingerprint(const PublicKey& pk);

} // namespace crypto
} // namespace pds
