#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "revae/core/binio.hpp"
#include "revae/core/rng.hpp"
#include "revae/core/sha256.hpp"

using namespace revae;

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    // incremental == one-shot across a block boundary
    Sha256 ctx;
    std::string part1(70, 'x'), part2(130, 'y');
    ctx.update(part1);
    ctx.update(part2);
    CHECK(ctx.hex() == sha256_hex(part1 + part2));
}

TEST_CASE("rng determinism and stream independence") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng s1(42, "alpha"), s2(42, "beta"), s3(42, "alpha");
    CHECK(s1.next_u64() == s3.next_u64());
    CHECK(s1.next_u64() != s2.next_u64());
}

TEST_CASE("rng normal moments") {
    Rng rng(123);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("rng bounded draw and shuffle determinism") {
    Rng rng(9);
    for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);

    std::vector<int> v1{1, 2, 3, 4, 5, 6, 7, 8}, v2 = v1;
    Rng r1(5), r2(5);
    r1.shuffle(v1);
    r2.shuffle(v2);
    CHECK(v1 == v2);
}

TEST_CASE("f32 round trip through file") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "revae_core_test";
    fs::create_directories(dir);
    std::vector<float> v{1.5f, -2.25f, 0.0f, 3.14159f, -0.0f, 1e-38f};
    atomic_write_f32_file(dir / "x.bin", v);
    const auto back = read_f32_file(dir / "x.bin");
    REQUIRE(back.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(back[i] == v[i]);
    fs::remove_all(dir);
}
