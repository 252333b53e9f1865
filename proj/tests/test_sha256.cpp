#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "htrcf/bytes.hpp"
#include "htrcf/sha256.hpp"

using namespace htrcf;

static std::string hex_digest(std::string_view msg) {
    auto d = Sha256::digest(bytes_of(msg));
    return to_hex(std::span<const std::uint8_t>(d.data(), d.size()));
}

TEST_CASE("FIPS 180-2 vectors") {
    CHECK(hex_digest("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(hex_digest("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(hex_digest("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("million a vector") {
    Sha256 h;
    std::string chunk(1000, 'a');
    for (int i = 0; i < 1000; ++i) h.update(bytes_of(chunk));
    auto d = h.finish();
    CHECK(to_hex(std::span<const std::uint8_t>(d.data(), d.size())) ==
          "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("incremental equals one-shot at every split point") {
    std::string msg = "The quick brown fox jumps over the lazy dog.0123456789abcdef"
                      "and some more bytes to cross the 64-byte block boundary....";
    auto whole = Sha256::digest(bytes_of(msg));
    for (std::size_t split = 0; split <= msg.size(); ++split) {
        Sha256 h;
        h.update(bytes_of(std::string_view(msg).substr(0, split)));
        h.update(bytes_of(std::string_view(msg).substr(split)));
        CHECK(h.finish() == whole);
    }
}

TEST_CASE("length padding edge: 55, 56, 64 byte messages") {
    // 55 bytes leaves exactly room for 0x80 + length; 56 forces a second block.
    for (std::size_t n : {55u, 56u, 63u, 64u, 65u}) {
        std::string a(n, 'x');
        Sha256 h;
        h.update(bytes_of(a));
        auto d1 = h.finish();
        auto d2 = Sha256::digest(bytes_of(a));
        CHECK(d1 == d2);
    }
}
