#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "htrcf/bytes.hpp"

namespace htrcf {

// Plain FIPS 180-4 SHA-256. All key derivation in this library runs through
// here, so it is kept dependency-free and is pinned against the standard test
// vectors in the unit tests.
class Sha256 {
public:
    using Digest = std::array<std::uint8_t, 32>;

    Sha256();
    void update(std::span<const std::uint8_t> data);
    Digest finish();

    static Digest digest(std::span<const std::uint8_t> data);
    static Digest digest(const Bytes& data) { return digest(std::span<const std::uint8_t>(data)); }

private:
    void process_block(const std::uint8_t* block);

    std::array<std::uint32_t, 8> state_;
    std::array<std::uint8_t, 64> buffer_;
    std::size_t buffered_ = 0;
    std::uint64_t total_bytes_ = 0;
};

}  // namespace htrcf
