#include "htrcf/keymgmt.hpp"

#include <algorithm>
#include <stdexcept>

#include "htrcf/sha256.hpp"

namespace htrcf::keymgmt {

Bytes rsa_wrap(const crypto::RsaPublicKey& pub, std::span<const std::uint8_t> payload) {
    std::size_t mod_len = pub.n.byte_length();
    if (mod_len < 2) throw std::invalid_argument("rsa_wrap: modulus too small for chunking");
    std::size_t chunk_in = mod_len - 1;

    Bytes framed;
    append_u32_be(framed, static_cast<std::uint32_t>(payload.size()));
    append_bytes(framed, payload);
    framed.resize(((framed.size() + chunk_in - 1) / chunk_in) * chunk_in, 0);

    Bytes out;
    out.reserve((framed.size() / chunk_in) * mod_len);
    for (std::size_t off = 0; off < framed.size(); off += chunk_in) {
        BigUint m = BigUint::from_bytes_be({framed.data() + off, chunk_in});
        BigUint c = crypto::rsa_encrypt(m, pub);
        Bytes chunk = c.to_bytes_be(mod_len);
        append_bytes(out, chunk);
    }
    return out;
}

std::optional<Bytes> rsa_unwrap(const crypto::RsaKeyPair& key,
                                std::span<const std::uint8_t> wrapped) {
    std::size_t mod_len = key.n.byte_length();
    if (mod_len < 2 || wrapped.empty() || wrapped.size() % mod_len != 0) return std::nullopt;
    std::size_t chunk_in = mod_len - 1;

    Bytes framed;
    framed.reserve((wrapped.size() / mod_len) * chunk_in);
    for (std::size_t off = 0; off < wrapped.size(); off += mod_len) {
        BigUint c = BigUint::from_bytes_be(wrapped.subspan(off, mod_len));
        if (c >= key.n) return std::nullopt;
        BigUint m = crypto::rsa_decrypt(c, key);
        if (m.byte_length() > chunk_in) return std::nullopt;
        Bytes chunk = m.to_bytes_be(chunk_in);
        append_bytes(framed, chunk);
    }
    if (framed.size() < 4) return std::nullopt;
    std::uint32_t len = read_u32_be(framed);
    if (len > framed.size() - 4) return std::nullopt;
    return Bytes(framed.begin() + 4, framed.begin() + 4 + len);
}

Kdc::Kdc(std::uint64_t seed, unsigned rsa_bits)
    : rng_(Rng::derive(seed, "kdc")), rsa_bits_(rsa_bits) {
    if (rsa_bits < 16) throw std::invalid_argument("Kdc: rsa_bits must be >= 16");
}

const crypto::RsaKeyPair& Kdc::register_node(NodeId id) {
    auto it = rsa_.find(id);
    if (it != rsa_.end()) return it->second;
    crypto::SecretKey secret;
    rng_.fill(secret.bytes);
    registry_.emplace(id, secret);
    auto [ins, _] = rsa_.emplace(id, crypto::drsa_keygen(id, rsa_bits_));
    return ins->second;
}

const crypto::SecretKey& Kdc::secret_of(NodeId id) const {
    auto it = registry_.find(id);
    if (it == registry_.end()) throw std::invalid_argument("Kdc: node not registered");
    return it->second;
}

const crypto::RsaKeyPair& Kdc::rsa_of(NodeId id) const {
    auto it = rsa_.find(id);
    if (it == rsa_.end()) throw std::invalid_argument("Kdc: node not registered");
    return it->second;
}

crypto::SecretKey Kdc::rotate_secret(NodeId id) {
    auto it = registry_.find(id);
    if (it == registry_.end()) throw std::invalid_argument("Kdc: node not registered");
    rng_.fill(it->second.bytes);
    return it->second;
}

Kdc::Issuance Kdc::issue_group_key(GroupId group, NodeId gm, const std::set<NodeId>& members) {
    if (!registered(gm)) throw std::invalid_argument("Kdc: manager not registered");
    for (NodeId m : members) {
        if (!registered(m)) throw std::invalid_argument("Kdc: member not registered");
    }

    std::uint64_t epoch = 1;
    if (auto it = group_keys_.find(group); it != group_keys_.end()) epoch = it->second.epoch + 1;

    crypto::GroupKey key;
    key.epoch = epoch;
    rng_.fill(key.bytes);
    group_keys_[group] = key;

    Issuance out;
    out.key = key;
    out.envelope.group = group;
    out.envelope.epoch = epoch;
    out.envelope.rsa_ciphertext = rsa_wrap(rsa_of(gm).public_key(), encode_group_key(key));
    for (NodeId m : members) out.member_secrets.emplace(m, secret_of(m));
    return out;
}

std::string_view to_string(WrapKind w) {
    switch (w) {
        case WrapKind::OldGroupKey: return "old_group_key";
        case WrapKind::MemberSecretKey: return "member_secret_key";
        case WrapKind::DhChannel: return "dh_channel";
    }
    return "?";
}

std::string_view to_string(RekeyTrigger::Kind k) {
    switch (k) {
        case RekeyTrigger::Kind::Join: return "join";
        case RekeyTrigger::Kind::Leave: return "leave";
        case RekeyTrigger::Kind::Blacklist: return "blacklist";
        case RekeyTrigger::Kind::Periodic: return "periodic";
    }
    return "?";
}

nlohmann::ordered_json to_json(const RekeyTranscript& t, bool full) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json trig;
    trig["kind"] = to_string(t.trigger.kind);
    if (t.trigger.node) trig["node"] = *t.trigger.node;
    j["group"] = t.group;
    j["trigger"] = std::move(trig);
    j["epoch"] = t.new_epoch;
    nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
    for (const auto& m : t.messages) {
        nlohmann::ordered_json jm;
        if (m.to) jm["to"] = *m.to;
        else jm["to"] = "broadcast";
        jm["wrap"] = to_string(m.wrap);
        jm["bytes_len"] = m.ciphertext.size();
        if (full) {
            jm["nonce"] = to_hex(m.nonce);
            jm["ciphertext"] = to_hex(m.ciphertext);
        }
        msgs.push_back(std::move(jm));
    }
    j["messages"] = std::move(msgs);
    return j;
}

crypto::GroupKey derive_rekey(std::span<const std::uint8_t> beacon_nonce,
                              std::uint64_t new_epoch,
                              const std::map<NodeId, crypto::SecretKey>& members) {
    if (members.empty()) throw std::invalid_argument("derive_rekey: no members");
    Bytes input = bytes_of("HT-RCF-rekey");
    append_bytes(input, beacon_nonce);
    append_u64_be(input, new_epoch);
    for (const auto& [id, secret] : members) {  // std::map: ascending NodeId
        auto h = Sha256::digest(std::span<const std::uint8_t>(secret.bytes));
        append_bytes(input, h);
    }
    crypto::GroupKey key;
    key.epoch = new_epoch;
    auto digest = Sha256::digest(input);
    std::copy(digest.begin(), digest.end(), key.bytes.begin());
    return key;
}

Bytes encode_group_key(const crypto::GroupKey& key) {
    Bytes out;
    append_u64_be(out, key.epoch);
    append_bytes(out, key.bytes);
    return out;
}

std::optional<crypto::GroupKey> decode_group_key(std::span<const std::uint8_t> payload) {
    if (payload.size() != 8 + 32) return std::nullopt;
    crypto::GroupKey key;
    key.epoch = read_u64_be(payload);
    std::copy_n(payload.begin() + 8, 32, key.bytes.begin());
    return key;
}

GroupSession::GroupSession(Group group, crypto::GroupKey initial,
                           std::map<NodeId, crypto::SecretKey> member_secrets,
                           std::uint64_t nonce_seed)
    : group_(std::move(group)),
      member_secrets_(std::move(member_secrets)),
      rng_(Rng::derive(nonce_seed, "gm-nonce")) {
    group_.group_key = initial;
    group_.key_epoch = initial.epoch;
    for (NodeId m : group_.members) {
        if (!member_secrets_.count(m))
            throw std::invalid_argument("GroupSession: missing member secret");
    }
}

crypto::Nonce rekey_nonce(GroupId group, std::uint64_t epoch,
                          std::optional<NodeId> to, WrapKind wrap) {
    Bytes input = bytes_of("HT-RCF-nonce");
    append_u64_be(input, group);
    append_u64_be(input, epoch);
    append_u64_be(input, to ? *to + 1 : 0);
    append_str(input, to_string(wrap));
    auto digest = Sha256::digest(input);
    crypto::Nonce nonce;
    std::copy_n(digest.begin(), nonce.size(), nonce.begin());
    return nonce;
}

crypto::Nonce GroupSession::next_nonce(WrapKind wrap, std::optional<NodeId> to,
                                       std::uint64_t epoch) const {
    return rekey_nonce(group_.id, epoch, to, wrap);
}

RekeyMessage GroupSession::wrapped(std::optional<NodeId> to, WrapKind wrap,
                                   const crypto::KeyBytes& wrap_key,
                                   const crypto::GroupKey& new_key) const {
    RekeyMessage msg;
    msg.to = to;
    msg.wrap = wrap;
    msg.nonce = next_nonce(wrap, to, new_key.epoch);
    msg.ciphertext = crypto::sym_encrypt(wrap_key, msg.nonce, encode_group_key(new_key));
    return msg;
}

RekeyTranscript GroupSession::handle_join(NodeId joiner, const crypto::SecretKey& joiner_secret,
                                          const crypto::KeyBytes& dh_session_key,
                                          bool handshake_verified, bool joiner_blacklisted) {
    if (!handshake_verified) throw RejectedJoin("join rejected: handshake not verified");
    if (joiner_blacklisted) throw RejectedJoin("join rejected: node is blacklisted");
    if (joiner == group_.manager || group_.members.count(joiner))
        throw std::invalid_argument("handle_join: already in group");

    crypto::GroupKey old_key = group_.group_key;

    auto new_members = member_secrets_;
    new_members.emplace(joiner, joiner_secret);
    Bytes beacon_nonce = rng_.bytes(16);
    crypto::GroupKey new_key = derive_rekey(beacon_nonce, group_.key_epoch + 1, new_members);

    RekeyTranscript t;
    t.group = group_.id;
    t.trigger = {RekeyTrigger::Kind::Join, joiner};
    t.new_epoch = new_key.epoch;
    t.messages.push_back(wrapped(joiner, WrapKind::DhChannel, dh_session_key, new_key));
    if (!group_.members.empty()) {
        t.messages.push_back(wrapped(std::nullopt, WrapKind::OldGroupKey, old_key.bytes, new_key));
    }

    group_.members.insert(joiner);
    member_secrets_ = std::move(new_members);
    group_.group_key = new_key;
    group_.key_epoch = new_key.epoch;
    return t;
}

RekeyTranscript GroupSession::handle_leave(NodeId departing, RekeyTrigger::Kind kind) {
    if (departing == group_.manager)
        throw ManagerDeparture("manager departure dissolves the group");
    if (!group_.members.count(departing))
        throw std::invalid_argument("handle_leave: not a member");

    group_.members.erase(departing);
    member_secrets_.erase(departing);

    RekeyTranscript t;
    t.group = group_.id;
    t.trigger = {kind, departing};

    if (group_.members.empty()) {
        // Last member gone: the group dissolves, nobody left to rekey.
        t.new_epoch = group_.key_epoch;
        return t;
    }

    Bytes beacon_nonce = rng_.bytes(16);
    crypto::GroupKey new_key = derive_rekey(beacon_nonce, group_.key_epoch + 1, member_secrets_);
    t.new_epoch = new_key.epoch;
    for (const auto& [id, secret] : member_secrets_) {
        t.messages.push_back(wrapped(id, WrapKind::MemberSecretKey, secret.bytes, new_key));
    }
    group_.group_key = new_key;
    group_.key_epoch = new_key.epoch;
    return t;
}

RekeyTranscript GroupSession::periodic_rekey() {
    crypto::GroupKey old_key = group_.group_key;
    Bytes beacon_nonce = rng_.bytes(16);

    RekeyTranscript t;
    t.group = group_.id;
    t.trigger = {RekeyTrigger::Kind::Periodic, std::nullopt};

    if (group_.members.empty()) {
        // Singleton group: the manager re-derives locally, nothing on the wire.
        crypto::GroupKey new_key;
        new_key.epoch = group_.key_epoch + 1;
        Bytes input = bytes_of("HT-RCF-rekey");
        append_bytes(input, beacon_nonce);
        append_u64_be(input, new_key.epoch);
        auto h = Sha256::digest(std::span<const std::uint8_t>(old_key.bytes));
        append_bytes(input, h);
        auto digest = Sha256::digest(input);
        std::copy(digest.begin(), digest.end(), new_key.bytes.begin());
        group_.group_key = new_key;
        group_.key_epoch = new_key.epoch;
        t.new_epoch = new_key.epoch;
        return t;
    }

    crypto::GroupKey new_key = derive_rekey(beacon_nonce, group_.key_epoch + 1, member_secrets_);
    t.new_epoch = new_key.epoch;
    t.messages.push_back(wrapped(std::nullopt, WrapKind::OldGroupKey, old_key.bytes, new_key));
    group_.group_key = new_key;
    group_.key_epoch = new_key.epoch;
    return t;
}

}  // namespace htrcf::keymgmt
