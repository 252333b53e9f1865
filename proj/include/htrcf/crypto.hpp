#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "htrcf/bigint.hpp"
#include "htrcf/bytes.hpp"
#include "htrcf/rng.hpp"

namespace htrcf::crypto {

// Textbook RSA on purpose: the point is the device-deterministic keygen and
// the message accounting around it, not padding security. Do not reuse.
struct RsaPublicKey {
    BigUint n;  // modulus
    BigUint k;  // encryption exponent
};

struct RsaKeyPair {
    BigUint u, v;  // primes
    BigUint n;     // u * v
    BigUint k;     // encryption exponent, smallest >= 3 coprime to phi
    BigUint l;     // decryption exponent, k^-1 mod phi
    RsaPublicKey public_key() const { return {n, k}; }
};

// Deterministic keygen: both primes are grown from hashes of the device id,
// so the same device always derives the same pair. bit_length >= 16.
RsaKeyPair drsa_keygen(std::uint64_t device_id, unsigned bit_length);

// Assemble a pair from chosen primes; k_choice overrides the smallest-k rule
// (test vectors pin k = 17 for the 61 x 53 modulus).
RsaKeyPair rsa_keypair_from_primes(const BigUint& u, const BigUint& v,
                                   const BigUint* k_choice = nullptr);

BigUint rsa_encrypt(const BigUint& m, const RsaPublicKey& pub);  // throws if m >= n
BigUint rsa_decrypt(const BigUint& c, const RsaKeyPair& key);    // throws if c >= n

std::string public_key_json(const RsaPublicKey& pub);  // {"n": hex, "k": hex}

struct DhParams {
    BigUint modulus;    // prime x
    BigUint generator;  // g
};

// Fixed 256-bit safe prime with generator 2, used when a scenario does not
// supply its own parameters.
const DhParams& default_dh_params();

struct DhKeyPair {
    BigUint secret;         // uniform in [1, x-1]
    BigUint public_value;   // g^secret mod x
};

DhKeyPair dh_keypair(const DhParams& params, Rng& rng);
BigUint dh_shared(const BigUint& own_secret, const BigUint& other_public,
                  const DhParams& params);

using KeyBytes = std::array<std::uint8_t, 32>;
using Nonce = std::array<std::uint8_t, 16>;
inline constexpr std::size_t kTagLen = 16;

struct SecretKey {
    KeyBytes bytes{};
    bool operator==(const SecretKey&) const = default;
};

struct GroupKey {
    KeyBytes bytes{};
    std::uint64_t epoch = 0;
    bool operator==(const GroupKey&) const = default;
};

// Hash-keystream stream cipher with a truncated-hash MAC:
//   block_i = SHA-256(key || nonce || be64(i)) XORed over the plaintext,
//   tag     = SHA-256(key || nonce || "mac" || ciphertext)[0..16).
// Output is ciphertext || tag; the nonce travels outside and must never
// repeat for the same key.
Bytes sym_encrypt(const KeyBytes& key, const Nonce& nonce,
                  std::span<const std::uint8_t> plaintext);

// Tag check happens before any decryption; nullopt on failure.
std::optional<Bytes> sym_decrypt(const KeyBytes& key, const Nonce& nonce,
                                 std::span<const std::uint8_t> ciphertext);

KeyBytes dh_session_key(const BigUint& shared_secret);

enum class HandshakeOutcome { Verified, Rejected };

// Test hooks for the misbehaving-responder paths.
enum class HandshakeFault { None, WrongResponderKey, DegeneratePublic };

struct HandshakeReport {
    HandshakeOutcome outcome = HandshakeOutcome::Rejected;
    KeyBytes session_key{};       // valid when Verified
    KeyBytes initiator_view{};    // each side's derived key, for agreement checks
    KeyBytes responder_view{};
    std::size_t messages = 0;
    std::size_t bytes_on_wire = 0;
};

// Two-sided pairwise verification: exchange publics, derive session keys,
// then a challenge/response under the symmetric cipher in both directions.
HandshakeReport run_handshake(const DhParams& params, Rng& rng,
                              HandshakeFault fault = HandshakeFault::None);

}  // namespace htrcf::crypto
