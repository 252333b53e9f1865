#include "htrcf/crypto.hpp"

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "htrcf/sha256.hpp"

namespace htrcf::crypto {

namespace {

// Hash-expand (device_id, suffix) to exactly `bits` bits, i.e. the counter
// XOF of SHA-256 reduced mod 2^bits.
BigUint hash_to_width(std::uint64_t device_id, std::uint64_t suffix, std::size_t bits) {
    Bytes out;
    std::uint32_t counter = 0;
    while (out.size() * 8 < bits) {
        Bytes block;
        append_u64_be(block, device_id);
        append_u64_be(block, suffix);
        append_u32_be(block, counter++);
        auto digest = Sha256::digest(block);
        append_bytes(out, digest);
    }
    out.resize((bits + 7) / 8);
    std::size_t extra = out.size() * 8 - bits;
    out[0] &= static_cast<std::uint8_t>(0xff >> extra);
    return BigUint::from_bytes_be(out);
}

BigUint smallest_coprime_exponent(const BigUint& phi) {
    BigUint k{3};
    while (k < phi) {
        if (gcd(k, phi) == BigUint{1}) return k;
        k += BigUint{1};
    }
    throw std::invalid_argument("rsa: totient admits no encryption exponent");
}

}  // namespace

RsaKeyPair rsa_keypair_from_primes(const BigUint& u, const BigUint& v,
                                   const BigUint* k_choice) {
    if (u == v) throw std::invalid_argument("rsa: primes must be distinct");
    BigUint phi = (u - BigUint{1}) * (v - BigUint{1});
    BigUint k = k_choice ? *k_choice : smallest_coprime_exponent(phi);
    auto l = mod_inverse(k, phi);
    if (!l) throw std::invalid_argument("rsa: exponent not invertible mod totient");
    return RsaKeyPair{u, v, u * v, k, *l};
}

RsaKeyPair drsa_keygen(std::uint64_t device_id, unsigned bit_length) {
    if (bit_length < 16) throw std::invalid_argument("drsa_keygen: bit_length must be >= 16");
    // Derivation is pure in (device_id, bit_length); cache it, since prime
    // search at simulation widths costs tens of milliseconds per device.
    static std::mutex cache_mutex;
    static std::map<std::pair<std::uint64_t, unsigned>, RsaKeyPair> cache;
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = cache.find({device_id, bit_length});
        if (it != cache.end()) return it->second;
    }
    std::size_t half = bit_length / 2;
    BigUint u = next_prime(hash_to_width(device_id, 0, half));
    std::uint64_t suffix = 1;
    BigUint v = next_prime(hash_to_width(device_id, suffix, half));
    while (v == u) {
        ++suffix;
        v = next_prime(hash_to_width(device_id, suffix, half));
    }
    RsaKeyPair pair = rsa_keypair_from_primes(u, v);
    std::lock_guard<std::mutex> lock(cache_mutex);
    cache.emplace(std::make_pair(device_id, bit_length), pair);
    return pair;
}

BigUint rsa_encrypt(const BigUint& m, const RsaPublicKey& pub) {
    if (m >= pub.n) throw std::invalid_argument("rsa_encrypt: message not below modulus");
    return mod_pow(m, pub.k, pub.n);
}

BigUint rsa_decrypt(const BigUint& c, const RsaKeyPair& key) {
    if (c >= key.n) throw std::invalid_argument("rsa_decrypt: ciphertext not below modulus");
    return mod_pow(c, key.l, key.n);
}

std::string public_key_json(const RsaPublicKey& pub) {
    return "{\"n\": \"" + pub.n.to_hex() + "\", \"k\": \"" + pub.k.to_hex() + "\"}";
}

const DhParams& default_dh_params() {
    // Safe prime 2^255 + 0x2ff7f; p = 7 mod 8, so 2 generates the subgroup of
    // prime order (p-1)/2.
    static const DhParams params{
        BigUint::from_hex("800000000000000000000000000000000000000000000000000000000002ff7f"),
        BigUint{2}};
    return params;
}

DhKeyPair dh_keypair(const DhParams& params, Rng& rng) {
    if (params.modulus <= BigUint{3}) throw std::invalid_argument("dh: modulus too small");
    BigUint secret = rng.big_below(params.modulus - BigUint{1}) + BigUint{1};  // [1, x-1]
    return DhKeyPair{secret, mod_pow(params.generator, secret, params.modulus)};
}

BigUint dh_shared(const BigUint& own_secret, const BigUint& other_public,
                  const DhParams& params) {
    if (other_public.is_zero() || other_public >= params.modulus)
        throw std::invalid_argument("dh_shared: public value out of range");
    return mod_pow(other_public, own_secret, params.modulus);
}

namespace {

Bytes keystream(const KeyBytes& key, const Nonce& nonce, std::size_t len) {
    Bytes out;
    out.reserve(len + 32);
    std::uint64_t block = 0;
    while (out.size() < len) {
        Bytes input;
        append_bytes(input, key);
        append_bytes(input, nonce);
        append_u64_be(input, block++);
        auto digest = Sha256::digest(input);
        append_bytes(out, digest);
    }
    out.resize(len);
    return out;
}

std::array<std::uint8_t, kTagLen> auth_tag(const KeyBytes& key, const Nonce& nonce,
                                           std::span<const std::uint8_t> ciphertext) {
    Bytes input;
    append_bytes(input, key);
    append_bytes(input, nonce);
    append_str(input, "mac");
    append_bytes(input, ciphertext);
    auto digest = Sha256::digest(input);
    std::array<std::uint8_t, kTagLen> tag;
    std::copy_n(digest.begin(), kTagLen, tag.begin());
    return tag;
}

}  // namespace

Bytes sym_encrypt(const KeyBytes& key, const Nonce& nonce,
                  std::span<const std::uint8_t> plaintext) {
    Bytes ks = keystream(key, nonce, plaintext.size());
    Bytes out(plaintext.size() + kTagLen);
    for (std::size_t i = 0; i < plaintext.size(); ++i) out[i] = plaintext[i] ^ ks[i];
    auto tag = auth_tag(key, nonce, std::span<const std::uint8_t>(out.data(), plaintext.size()));
    std::copy(tag.begin(), tag.end(), out.begin() + static_cast<std::ptrdiff_t>(plaintext.size()));
    return out;
}

std::optional<Bytes> sym_decrypt(const KeyBytes& key, const Nonce& nonce,
                                 std::span<const std::uint8_t> ciphertext) {
    if (ciphertext.size() < kTagLen) return std::nullopt;
    std::size_t body_len = ciphertext.size() - kTagLen;
    auto body = ciphertext.first(body_len);
    auto expected = auth_tag(key, nonce, body);
    auto presented = ciphertext.subspan(body_len);
    std::uint8_t diff = 0;
    for (std::size_t i = 0; i < kTagLen; ++i) diff |= expected[i] ^ presented[i];
    if (diff != 0) return std::nullopt;

    Bytes ks = keystream(key, nonce, body_len);
    Bytes out(body_len);
    for (std::size_t i = 0; i < body_len; ++i) out[i] = body[i] ^ ks[i];
    return out;
}

KeyBytes dh_session_key(const BigUint& shared_secret) {
    Bytes input = bytes_of("HT-RCF-dh-session");
    append_bytes(input, shared_secret.to_bytes_be());
    auto digest = Sha256::digest(input);
    KeyBytes key;
    std::copy(digest.begin(), digest.end(), key.begin());
    return key;
}

HandshakeReport run_handshake(const DhParams& params, Rng& rng, HandshakeFault fault) {
    HandshakeReport report;

    DhKeyPair initiator = dh_keypair(params, rng);
    DhKeyPair responder = dh_keypair(params, rng);

    BigUint responder_announced = responder.public_value;
    if (fault == HandshakeFault::DegeneratePublic) responder_announced = BigUint{1};

    // Public exchange, one message each way.
    std::size_t modulus_bytes = params.modulus.byte_length();
    report.messages = 2;
    report.bytes_on_wire = 2 * modulus_bytes;

    // Degenerate publics (0, 1, x-1 collapse the shared secret space).
    BigUint x_minus_1 = params.modulus - BigUint{1};
    if (responder_announced <= BigUint{1} || responder_announced == x_minus_1 ||
        initiator.public_value <= BigUint{1} || initiator.public_value == x_minus_1) {
        return report;  // Rejected
    }

    BigUint initiator_shared = dh_shared(initiator.secret, responder_announced, params);
    BigUint responder_shared = dh_shared(responder.secret, initiator.public_value, params);

    KeyBytes initiator_key = dh_session_key(initiator_shared);
    KeyBytes responder_key = dh_session_key(responder_shared);
    if (fault == HandshakeFault::WrongResponderKey) {
        Rng fake(rng.next_u64());
        fake.fill(responder_key);
    }
    report.initiator_view = initiator_key;
    report.responder_view = responder_key;

    // Challenge both ways: the responder must echo SHA-256(challenge) under
    // the shared key; a mismatched key fails the tag check immediately.
    KeyBytes challenge;
    rng.fill(challenge);
    Nonce n1;
    rng.fill(n1);
    Bytes c1 = sym_encrypt(initiator_key, n1, challenge);
    report.messages += 1;
    report.bytes_on_wire += n1.size() + c1.size();

    auto opened = sym_decrypt(responder_key, n1, c1);
    if (!opened) return report;
    auto echo_digest = Sha256::digest(*opened);

    Nonce n2;
    rng.fill(n2);
    Bytes c2 = sym_encrypt(responder_key, n2, echo_digest);
    report.messages += 1;
    report.bytes_on_wire += n2.size() + c2.size();

    auto verified = sym_decrypt(initiator_key, n2, c2);
    if (!verified) return report;
    auto expected = Sha256::digest(challenge);
    if (!std::equal(verified->begin(), verified->end(), expected.begin(), expected.end()))
        return report;

    report.outcome = HandshakeOutcome::Verified;
    report.session_key = initiator_key;
    return report;
}

}  // namespace htrcf::crypto
