#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "htrcf/crypto.hpp"
#include "htrcf/net_model.hpp"
#include "htrcf/rng.hpp"

namespace htrcf::keymgmt {

// Chunked textbook-RSA wrap: plaintext framed as be32 length + payload,
// split into (byte_length(n) - 1)-byte chunks (zero-padded tail) so every
// chunk value sits below the modulus, each chunk emitted at byte_length(n).
Bytes rsa_wrap(const crypto::RsaPublicKey& pub, std::span<const std::uint8_t> payload);
// Structural framing check only; nullopt when the frame does not parse.
std::optional<Bytes> rsa_unwrap(const crypto::RsaKeyPair& key,
                                std::span<const std::uint8_t> wrapped);

struct GroupKeyEnvelope {
    GroupId group = 0;
    std::uint64_t epoch = 0;
    Bytes rsa_ciphertext;  // decryptable only with the GM's private key
};

// The join rejection ("unverified or blacklisted joiner") surfaces as this.
struct RejectedJoin : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when handle_leave is asked to remove the manager; the caller owns
// the dissolve-and-re-elect flow.
struct ManagerDeparture : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Single trusted authority: issues per-node secrets and RSA pairs at
// registration, group keys on formation, and fresh secrets when a manager
// departs (a manager held every member's K_i, so those must rotate).
class Kdc {
public:
    Kdc(std::uint64_t seed, unsigned rsa_bits);

    const crypto::RsaKeyPair& register_node(NodeId id);  // idempotent
    bool registered(NodeId id) const { return registry_.count(id) > 0; }
    const crypto::SecretKey& secret_of(NodeId id) const;
    const crypto::RsaKeyPair& rsa_of(NodeId id) const;
    crypto::SecretKey rotate_secret(NodeId id);  // fresh K_i, replaces the old

    struct Issuance {
        GroupKeyEnvelope envelope;
        std::map<NodeId, crypto::SecretKey> member_secrets;  // handed to the GM
        crypto::GroupKey key;
    };
    // Fresh group key for (group, gm): epoch is one past the last issued for
    // this group id. All parties must be registered.
    Issuance issue_group_key(GroupId group, NodeId gm, const std::set<NodeId>& members);

    const std::map<GroupId, crypto::GroupKey>& group_keys() const { return group_keys_; }
    unsigned rsa_bits() const { return rsa_bits_; }

private:
    std::map<NodeId, crypto::SecretKey> registry_;
    std::map<NodeId, crypto::RsaKeyPair> rsa_;
    std::map<GroupId, crypto::GroupKey> group_keys_;
    Rng rng_;
    unsigned rsa_bits_;
};

enum class WrapKind { OldGroupKey, MemberSecretKey, DhChannel };
std::string_view to_string(WrapKind w);

struct RekeyTrigger {
    enum class Kind { Join, Leave, Blacklist, Periodic } kind = Kind::Periodic;
    std::optional<NodeId> node;
};
std::string_view to_string(RekeyTrigger::Kind k);

struct RekeyMessage {
    std::optional<NodeId> to;  // nullopt = broadcast to the group
    WrapKind wrap = WrapKind::OldGroupKey;
    crypto::Nonce nonce{};
    Bytes ciphertext;
};

struct RekeyTranscript {
    GroupId group = 0;
    RekeyTrigger trigger;
    std::uint64_t new_epoch = 0;
    std::vector<RekeyMessage> messages;
};

// {trigger, epoch, messages: [{to, wrap, bytes_len}]}; ciphertext hex rides
// along only when `full` is set.
nlohmann::ordered_json to_json(const RekeyTranscript& t, bool full = false);

// New group key bytes: SHA-256 over the domain tag, the fresh beacon nonce,
// the new epoch, and H(K_i) of every member in ascending NodeId order.
crypto::GroupKey derive_rekey(std::span<const std::uint8_t> beacon_nonce,
                              std::uint64_t new_epoch,
                              const std::map<NodeId, crypto::SecretKey>& members);

// Nonce for a key-distribution message. Deterministic and collision-free per
// wrapping key: epochs strictly increase per group id and group ids are never
// reused, so (group, epoch, recipient, wrap) never repeats.
crypto::Nonce rekey_nonce(GroupId group, std::uint64_t epoch,
                          std::optional<NodeId> to, WrapKind wrap);

// Group-manager side state machine. Owns the member-secret table, the current
// key, and emits transcripts; it never messages itself (the manager derives
// locally), so message counts cover members only.
class GroupSession {
public:
    GroupSession(Group group, crypto::GroupKey initial,
                 std::map<NodeId, crypto::SecretKey> member_secrets,
                 std::uint64_t nonce_seed);

    const Group& group() const { return group_; }
    const crypto::GroupKey& current_key() const { return group_.group_key; }
    const std::map<NodeId, crypto::SecretKey>& member_secrets() const { return member_secrets_; }

    // New key over members + joiner: one DH-channel unicast to the joiner,
    // one old-group-key broadcast when there are members to inform.
    RekeyTranscript handle_join(NodeId joiner, const crypto::SecretKey& joiner_secret,
                                const crypto::KeyBytes& dh_session_key,
                                bool handshake_verified, bool joiner_blacklisted);

    // New key over survivors, one unicast per survivor under their K_i.
    // Departing == manager raises ManagerDeparture; unknown node is an error.
    RekeyTranscript handle_leave(NodeId departing, RekeyTrigger::Kind kind);

    // Fresh key, membership unchanged, one old-group-key broadcast.
    RekeyTranscript periodic_rekey();

private:
    crypto::Nonce next_nonce(WrapKind wrap, std::optional<NodeId> to,
                             std::uint64_t epoch) const;
    RekeyMessage wrapped(std::optional<NodeId> to, WrapKind wrap,
                         const crypto::KeyBytes& wrap_key,
                         const crypto::GroupKey& new_key) const;

    Group group_;
    std::map<NodeId, crypto::SecretKey> member_secrets_;
    Rng rng_;
};

// Key payload layout shared by every rekey message: be64 epoch + 32 key bytes.
Bytes encode_group_key(const crypto::GroupKey& key);
std::optional<crypto::GroupKey> decode_group_key(std::span<const std::uint8_t> payload);

}  // namespace htrcf::keymgmt
