#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "htrcf/bytes.hpp"

namespace htrcf {

// Unsigned arbitrary-precision integer over 32-bit limbs (little-endian,
// canonical form has no trailing zero limbs). Sized for the key material this
// library works with: products of two 512-bit operands, not beyond.
class BigUint {
public:
    BigUint() = default;
    BigUint(std::uint64_t v);

    static BigUint from_hex(std::string_view hex);
    static BigUint from_bytes_be(std::span<const std::uint8_t> bytes);

    std::string to_hex() const;             // lowercase, no leading zeros, "0" for zero
    Bytes to_bytes_be() const;              // minimal width, {} for zero
    Bytes to_bytes_be(std::size_t width) const;  // left-padded, throws if value wider

    bool is_zero() const { return limbs_.empty(); }
    bool is_odd() const { return !limbs_.empty() && (limbs_[0] & 1); }
    bool bit(std::size_t i) const;
    std::size_t bit_length() const;         // 0 for zero
    std::size_t byte_length() const { return (bit_length() + 7) / 8; }
    std::uint64_t to_u64() const;           // throws if it does not fit

    bool operator==(const BigUint&) const = default;
    std::strong_ordering operator<=>(const BigUint& other) const;

    BigUint& operator+=(const BigUint& rhs);
    BigUint& operator-=(const BigUint& rhs);  // throws on underflow
    BigUint operator+(const BigUint& rhs) const { BigUint r = *this; r += rhs; return r; }
    BigUint operator-(const BigUint& rhs) const { BigUint r = *this; r -= rhs; return r; }
    BigUint operator*(const BigUint& rhs) const;

    struct DivMod;  // { quotient, remainder }, completed after the class
    static DivMod div_mod(const BigUint& a, const BigUint& b);  // throws on b == 0
    BigUint operator/(const BigUint& rhs) const;
    BigUint operator%(const BigUint& rhs) const;

    BigUint& operator<<=(std::size_t bits);
    BigUint& operator>>=(std::size_t bits);
    BigUint operator<<(std::size_t bits) const { BigUint r = *this; r <<= bits; return r; }
    BigUint operator>>(std::size_t bits) const { BigUint r = *this; r >>= bits; return r; }

    const std::vector<std::uint32_t>& limbs() const { return limbs_; }

private:
    void trim();
    std::vector<std::uint32_t> limbs_;
};

struct BigUint::DivMod {
    BigUint quotient;
    BigUint remainder;
};

inline BigUint BigUint::operator/(const BigUint& rhs) const {
    return div_mod(*this, rhs).quotient;
}
inline BigUint BigUint::operator%(const BigUint& rhs) const {
    return div_mod(*this, rhs).remainder;
}

BigUint mod_pow(const BigUint& base, const BigUint& exponent, const BigUint& modulus);
BigUint gcd(BigUint a, BigUint b);
// Inverse of a modulo m, or nullopt when gcd(a, m) != 1.
std::optional<BigUint> mod_inverse(const BigUint& a, const BigUint& m);

// Miller-Rabin with a base-2 round plus witnesses from a splitmix64 chain
// seeded from the candidate itself, so the verdict is a pure function.
bool is_probable_prime(const BigUint& n, int rounds = 40);
BigUint next_prime(const BigUint& n);  // smallest prime >= n

}  // namespace htrcf
