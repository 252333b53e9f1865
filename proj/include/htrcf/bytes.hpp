#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace htrcf {

using Bytes = std::vector<std::uint8_t>;

inline void append_u32_be(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline void append_u64_be(Bytes& out, std::uint64_t v) {
    append_u32_be(out, static_cast<std::uint32_t>(v >> 32));
    append_u32_be(out, static_cast<std::uint32_t>(v));
}

inline std::uint32_t read_u32_be(std::span<const std::uint8_t> in) {
    if (in.size() < 4) throw std::invalid_argument("read_u32_be: short buffer");
    return (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) |
           (std::uint32_t{in[2]} << 8) | std::uint32_t{in[3]};
}

inline std::uint64_t read_u64_be(std::span<const std::uint8_t> in) {
    if (in.size() < 8) throw std::invalid_argument("read_u64_be: short buffer");
    return (std::uint64_t{read_u32_be(in)} << 32) | read_u32_be(in.subspan(4));
}

inline void append_bytes(Bytes& out, std::span<const std::uint8_t> in) {
    out.insert(out.end(), in.begin(), in.end());
}

inline void append_str(Bytes& out, std::string_view s) {
    out.insert(out.end(), s.begin(), s.end());
}

inline Bytes bytes_of(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_hex(std::span<const std::uint8_t> in) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(in.size() * 2);
    for (auto b : in) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

inline Bytes from_hex(std::string_view s) {
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (s.size() % 2 != 0) throw std::invalid_argument("from_hex: odd length");
    Bytes out;
    out.reserve(s.size() / 2);
    for (std::size_t i = 0; i < s.size(); i += 2) {
        int hi = nib(s[i]), lo = nib(s[i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("from_hex: bad digit");
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

}  // namespace htrcf
