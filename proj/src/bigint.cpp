#include "htrcf/bigint.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace htrcf {

namespace {
constexpr std::uint64_t kBase = 1ull << 32;
}

BigUint::BigUint(std::uint64_t v) {
    if (v != 0) limbs_.push_back(static_cast<std::uint32_t>(v));
    if (v >> 32) limbs_.push_back(static_cast<std::uint32_t>(v >> 32));
}

void BigUint::trim() {
    while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
}

BigUint BigUint::from_hex(std::string_view hex) {
    if (hex.empty()) throw std::invalid_argument("BigUint::from_hex: empty string");
    BigUint out;
    out.limbs_.assign((hex.size() + 7) / 8, 0);
    std::size_t limb = 0, shift = 0;
    for (std::size_t i = hex.size(); i-- > 0;) {
        char c = hex[i];
        std::uint32_t d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else throw std::invalid_argument("BigUint::from_hex: bad digit");
        out.limbs_[limb] |= d << shift;
        shift += 4;
        if (shift == 32) { shift = 0; ++limb; }
    }
    out.trim();
    return out;
}

BigUint BigUint::from_bytes_be(std::span<const std::uint8_t> bytes) {
    BigUint out;
    out.limbs_.assign((bytes.size() + 3) / 4, 0);
    std::size_t limb = 0, shift = 0;
    for (std::size_t i = bytes.size(); i-- > 0;) {
        out.limbs_[limb] |= std::uint32_t{bytes[i]} << shift;
        shift += 8;
        if (shift == 32) { shift = 0; ++limb; }
    }
    out.trim();
    return out;
}

std::string BigUint::to_hex() const {
    if (is_zero()) return "0";
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(limbs_.size() * 8);
    for (std::size_t i = limbs_.size(); i-- > 0;) {
        for (int nib = 7; nib >= 0; --nib) {
            out.push_back(digits[(limbs_[i] >> (nib * 4)) & 0xf]);
        }
    }
    std::size_t first = out.find_first_not_of('0');
    return out.substr(first);
}

Bytes BigUint::to_bytes_be() const {
    return to_bytes_be(byte_length());
}

Bytes BigUint::to_bytes_be(std::size_t width) const {
    if (byte_length() > width) throw std::invalid_argument("BigUint::to_bytes_be: value wider than requested");
    Bytes out(width, 0);
    for (std::size_t i = 0; i < width && i < limbs_.size() * 4; ++i) {
        std::uint32_t limb = limbs_[i / 4];
        out[width - 1 - i] = static_cast<std::uint8_t>(limb >> (8 * (i % 4)));
    }
    return out;
}

bool BigUint::bit(std::size_t i) const {
    std::size_t limb = i / 32;
    if (limb >= limbs_.size()) return false;
    return (limbs_[limb] >> (i % 32)) & 1;
}

std::size_t BigUint::bit_length() const {
    if (limbs_.empty()) return 0;
    return limbs_.size() * 32 - std::countl_zero(limbs_.back());
}

std::uint64_t BigUint::to_u64() const {
    if (limbs_.size() > 2) throw std::overflow_error("BigUint::to_u64: value too large");
    std::uint64_t v = 0;
    if (limbs_.size() > 1) v = std::uint64_t{limbs_[1]} << 32;
    if (!limbs_.empty()) v |= limbs_[0];
    return v;
}

std::strong_ordering BigUint::operator<=>(const BigUint& other) const {
    if (limbs_.size() != other.limbs_.size())
        return limbs_.size() <=> other.limbs_.size();
    for (std::size_t i = limbs_.size(); i-- > 0;) {
        if (limbs_[i] != other.limbs_[i]) return limbs_[i] <=> other.limbs_[i];
    }
    return std::strong_ordering::equal;
}

BigUint& BigUint::operator+=(const BigUint& rhs) {
    limbs_.resize(std::max(limbs_.size(), rhs.limbs_.size()), 0);
    std::uint64_t carry = 0;
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
        std::uint64_t sum = carry + limbs_[i];
        if (i < rhs.limbs_.size()) sum += rhs.limbs_[i];
        limbs_[i] = static_cast<std::uint32_t>(sum);
        carry = sum >> 32;
    }
    if (carry) limbs_.push_back(static_cast<std::uint32_t>(carry));
    return *this;
}

BigUint& BigUint::operator-=(const BigUint& rhs) {
    if (*this < rhs) throw std::underflow_error("BigUint: subtraction underflow");
    std::int64_t borrow = 0;
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
        std::int64_t diff = static_cast<std::int64_t>(limbs_[i]) - borrow;
        if (i < rhs.limbs_.size()) diff -= rhs.limbs_[i];
        if (diff < 0) { diff += static_cast<std::int64_t>(kBase); borrow = 1; }
        else borrow = 0;
        limbs_[i] = static_cast<std::uint32_t>(diff);
    }
    trim();
    return *this;
}

BigUint BigUint::operator*(const BigUint& rhs) const {
    if (is_zero() || rhs.is_zero()) return {};
    BigUint out;
    out.limbs_.assign(limbs_.size() + rhs.limbs_.size(), 0);
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
        std::uint64_t carry = 0;
        for (std::size_t j = 0; j < rhs.limbs_.size(); ++j) {
            std::uint64_t cur = out.limbs_[i + j] +
                                std::uint64_t{limbs_[i]} * rhs.limbs_[j] + carry;
            out.limbs_[i + j] = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
        }
        out.limbs_[i + rhs.limbs_.size()] = static_cast<std::uint32_t>(carry);
    }
    out.trim();
    return out;
}

BigUint& BigUint::operator<<=(std::size_t bits) {
    if (is_zero() || bits == 0) return *this;
    std::size_t limb_shift = bits / 32, bit_shift = bits % 32;
    limbs_.insert(limbs_.begin(), limb_shift, 0);
    if (bit_shift != 0) {
        std::uint32_t carry = 0;
        for (std::size_t i = limb_shift; i < limbs_.size(); ++i) {
            std::uint32_t next = limbs_[i] >> (32 - bit_shift);
            limbs_[i] = (limbs_[i] << bit_shift) | carry;
            carry = next;
        }
        if (carry) limbs_.push_back(carry);
    }
    return *this;
}

BigUint& BigUint::operator>>=(std::size_t bits) {
    std::size_t limb_shift = bits / 32, bit_shift = bits % 32;
    if (limb_shift >= limbs_.size()) { limbs_.clear(); return *this; }
    limbs_.erase(limbs_.begin(), limbs_.begin() + static_cast<std::ptrdiff_t>(limb_shift));
    if (bit_shift != 0) {
        for (std::size_t i = 0; i + 1 < limbs_.size(); ++i) {
            limbs_[i] = (limbs_[i] >> bit_shift) | (limbs_[i + 1] << (32 - bit_shift));
        }
        limbs_.back() >>= bit_shift;
    }
    trim();
    return *this;
}

// Knuth algorithm D over 32-bit digits. The divisor is normalized so its top
// limb has the high bit set, the trial digit is estimated from the top two
// limbs of the running remainder and corrected at most twice, with the
// standard add-back when the multiply-subtract goes negative.
BigUint::DivMod BigUint::div_mod(const BigUint& a, const BigUint& b) {
    if (b.is_zero()) throw std::domain_error("BigUint: division by zero");
    if (a < b) return {BigUint{}, a};

    if (b.limbs_.size() == 1) {
        std::uint64_t d = b.limbs_[0];
        BigUint q;
        q.limbs_.assign(a.limbs_.size(), 0);
        std::uint64_t rem = 0;
        for (std::size_t i = a.limbs_.size(); i-- > 0;) {
            std::uint64_t cur = (rem << 32) | a.limbs_[i];
            q.limbs_[i] = static_cast<std::uint32_t>(cur / d);
            rem = cur % d;
        }
        q.trim();
        return {q, BigUint{rem}};
    }

    unsigned shift = std::countl_zero(b.limbs_.back());
    BigUint u = a << shift;
    BigUint v = b << shift;
    std::size_t n = v.limbs_.size();
    std::size_t m = u.limbs_.size() - n;
    u.limbs_.resize(u.limbs_.size() + 1, 0);  // u[m+n] scratch digit

    BigUint q;
    q.limbs_.assign(m + 1, 0);
    std::uint64_t vtop = v.limbs_[n - 1];
    std::uint64_t vnext = v.limbs_[n - 2];

    for (std::size_t j = m + 1; j-- > 0;) {
        std::uint64_t numer = (std::uint64_t{u.limbs_[j + n]} << 32) | u.limbs_[j + n - 1];
        std::uint64_t qhat = numer / vtop;
        std::uint64_t rhat = numer % vtop;
        while (qhat >= kBase ||
               qhat * vnext > ((rhat << 32) | u.limbs_[j + n - 2])) {
            --qhat;
            rhat += vtop;
            if (rhat >= kBase) break;
        }

        // u[j..j+n] -= qhat * v
        std::int64_t borrow = 0;
        std::uint64_t carry = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t prod = qhat * v.limbs_[i] + carry;
            carry = prod >> 32;
            std::int64_t diff = static_cast<std::int64_t>(u.limbs_[j + i]) -
                                static_cast<std::int64_t>(prod & 0xffffffff) - borrow;
            if (diff < 0) { diff += static_cast<std::int64_t>(kBase); borrow = 1; }
            else borrow = 0;
            u.limbs_[j + i] = static_cast<std::uint32_t>(diff);
        }
        std::int64_t top = static_cast<std::int64_t>(u.limbs_[j + n]) -
                           static_cast<std::int64_t>(carry) - borrow;
        if (top < 0) {
            // qhat was one too large: add v back once.
            --qhat;
            std::uint64_t add_carry = 0;
            for (std::size_t i = 0; i < n; ++i) {
                std::uint64_t sum = std::uint64_t{u.limbs_[j + i]} + v.limbs_[i] + add_carry;
                u.limbs_[j + i] = static_cast<std::uint32_t>(sum);
                add_carry = sum >> 32;
            }
            top += static_cast<std::int64_t>(add_carry);
        }
        u.limbs_[j + n] = static_cast<std::uint32_t>(top);
        q.limbs_[j] = static_cast<std::uint32_t>(qhat);
    }

    q.trim();
    u.limbs_.resize(n);
    u.trim();
    u >>= shift;
    return {q, u};
}

BigUint mod_pow(const BigUint& base, const BigUint& exponent, const BigUint& modulus) {
    if (modulus.is_zero()) throw std::domain_error("mod_pow: zero modulus");
    if (modulus == BigUint{1}) return {};
    BigUint result{1};
    BigUint b = base % modulus;
    std::size_t nbits = exponent.bit_length();
    for (std::size_t i = nbits; i-- > 0;) {
        result = (result * result) % modulus;
        if (exponent.bit(i)) result = (result * b) % modulus;
    }
    return result;
}

BigUint gcd(BigUint a, BigUint b) {
    while (!b.is_zero()) {
        BigUint r = a % b;
        a = std::move(b);
        b = std::move(r);
    }
    return a;
}

std::optional<BigUint> mod_inverse(const BigUint& a, const BigUint& m) {
    if (m.is_zero()) throw std::domain_error("mod_inverse: zero modulus");
    // Extended Euclid tracking only the coefficient of a, with an explicit sign.
    BigUint r0 = m, r1 = a % m;
    BigUint t0{}, t1{1};
    bool t0_neg = false, t1_neg = false;
    while (!r1.is_zero()) {
        auto [q, r2] = BigUint::div_mod(r0, r1);
        // t2 = t0 - q*t1 with sign bookkeeping
        BigUint qt = q * t1;
        BigUint t2;
        bool t2_neg;
        if (t0_neg == t1_neg) {
            if (t0 >= qt) { t2 = t0 - qt; t2_neg = t0_neg; }
            else { t2 = qt - t0; t2_neg = !t0_neg; }
        } else {
            t2 = t0 + qt;
            t2_neg = t0_neg;
        }
        r0 = std::move(r1); r1 = std::move(r2);
        t0 = std::move(t1); t0_neg = t1_neg;
        t1 = std::move(t2); t1_neg = t2_neg;
    }
    if (r0 != BigUint{1}) return std::nullopt;
    if (t0_neg) return m - (t0 % m);
    return t0 % m;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

const std::vector<std::uint32_t>& small_primes() {
    static const std::vector<std::uint32_t> primes = [] {
        std::vector<std::uint32_t> out;
        std::vector<bool> sieve(1u << 13, true);
        for (std::uint32_t p = 2; p < sieve.size(); ++p) {
            if (!sieve[p]) continue;
            out.push_back(p);
            for (std::uint32_t q = p * p; q < sieve.size(); q += p) sieve[q] = false;
        }
        return out;
    }();
    return primes;
}

bool miller_rabin_round(const BigUint& n, const BigUint& n_minus_1,
                        const BigUint& d, std::size_t s, const BigUint& witness) {
    BigUint x = mod_pow(witness, d, n);
    if (x == BigUint{1} || x == n_minus_1) return true;
    for (std::size_t i = 1; i < s; ++i) {
        x = (x * x) % n;
        if (x == n_minus_1) return true;
    }
    return false;
}

}  // namespace

bool is_probable_prime(const BigUint& n, int rounds) {
    if (n < BigUint{2}) return false;
    for (std::uint32_t p : small_primes()) {
        BigUint bp{p};
        if (n == bp) return true;
        if ((n % bp).is_zero()) return false;
        if (bp * bp > n) return true;
    }

    BigUint n_minus_1 = n - BigUint{1};
    BigUint d = n_minus_1;
    std::size_t s = 0;
    while (!d.is_odd()) { d >>= 1; ++s; }

    if (!miller_rabin_round(n, n_minus_1, d, s, BigUint{2})) return false;

    std::uint64_t low = 0;
    for (std::size_t i = 0; i < n.limbs().size() && i < 2; ++i) {
        low |= std::uint64_t{n.limbs()[i]} << (32 * i);
    }
    std::uint64_t stream = low ^ 0x9e3779b97f4a7c15ull;
    BigUint span = n - BigUint{3};  // witnesses in [2, n-2]
    for (int i = 1; i < rounds; ++i) {
        BigUint w = (BigUint{splitmix64(stream)} % span) + BigUint{2};
        if (!miller_rabin_round(n, n_minus_1, d, s, w)) return false;
    }
    return true;
}

BigUint next_prime(const BigUint& n) {
    if (n <= BigUint{2}) return BigUint{2};
    BigUint c = n;
    if (!c.is_odd()) c += BigUint{1};
    while (!is_probable_prime(c)) c += BigUint{2};
    return c;
}

}  // namespace htrcf
