#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "htrcf/bigint.hpp"
#include "htrcf/bytes.hpp"
#include "htrcf/sha256.hpp"

namespace htrcf {

// Seeded deterministic randomness. mt19937_64's output sequence is fixed by
// the standard, so identical seeds give identical streams everywhere; the
// uniform helpers below avoid std::*_distribution on purpose since those are
// not pinned across library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Independent substream: hashing (seed, tag) keeps streams stable when
    // unrelated draw sites are added or reordered.
    static Rng derive(std::uint64_t seed, std::string_view tag) {
        Bytes material;
        append_u64_be(material, seed);
        append_str(material, tag);
        auto digest = Sha256::digest(material);
        return Rng(read_u64_be(std::span<const std::uint8_t>(digest.data(), 8)));
    }

    std::uint64_t next_u64() { return eng_(); }

    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Rng::below: zero bound");
        // Rejection sampling over the largest bound-aligned prefix.
        std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t v;
        do { v = eng_(); } while (v >= limit);
        return v % bound;
    }

    double unit_double() {  // [0, 1), 53 random bits
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    void fill(std::span<std::uint8_t> out) {
        std::size_t i = 0;
        while (i < out.size()) {
            std::uint64_t v = eng_();
            for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
                out[i] = static_cast<std::uint8_t>(v >> (8 * b));
            }
        }
    }

    Bytes bytes(std::size_t n) {
        Bytes out(n);
        fill(out);
        return out;
    }

    BigUint big_bits(std::size_t bits) {
        if (bits == 0) return {};
        Bytes raw = bytes((bits + 7) / 8);
        std::size_t extra = raw.size() * 8 - bits;
        raw[0] &= static_cast<std::uint8_t>(0xff >> extra);
        return BigUint::from_bytes_be(raw);
    }

    // Uniform in [0, bound) by rejection on bit_length(bound-1)-wide draws.
    BigUint big_below(const BigUint& bound) {
        if (bound.is_zero()) throw std::invalid_argument("Rng::big_below: zero bound");
        std::size_t bits = bound.bit_length();
        BigUint v;
        do { v = big_bits(bits); } while (v >= bound);
        return v;
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace htrcf
