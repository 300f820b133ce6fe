#include "dobf/sha256.hpp"

#include <random>
#include <string>

#include <doctest.h>

using namespace dobf;

// NIST FIPS 180-4 test vectors
TEST_CASE("sha256 known vectors") {
    CHECK(to_hex(sha256("")) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(to_hex(sha256("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(to_hex(sha256("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")) ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    CHECK(to_hex(sha256(std::string(1000000, 'a'))) ==
          "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("incremental hashing equals one-shot for random chunkings") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        std::string data(1 + rng() % 5000, '\0');
        for (char& c : data) c = static_cast<char>(rng() & 0xFF);

        Sha256 hasher;
        std::size_t pos = 0;
        while (pos < data.size()) {
            const std::size_t chunk = 1 + rng() % 257;
            const std::size_t take = std::min(chunk, data.size() - pos);
            hasher.update(data.data() + pos, take);
            pos += take;
        }
        CHECK(hasher.finish() == sha256(data));
    }
}
