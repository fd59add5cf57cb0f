#include <cstring>
#include <random>

#include "doctest.h"
#include "testutil.hpp"
#include "vtk/raster.hpp"

using namespace vtk;
using testutil::TempDir;

TEST_CASE("mask validate rejects malformed values") {
    BinaryMask m(2, 2);
    CHECK_NOTHROW(validate(m));
    m.data[1] = 2;
    CHECK_THROWS_AS(validate(m), Error);
    m.data[1] = 1;
    m.data.pop_back();
    CHECK_THROWS_AS(validate(m), Error);
    CHECK_THROWS_AS(validate(BinaryMask{}), Error);
}

TEST_CASE("probmap validate rejects out-of-range values") {
    ProbMap p(2, 1);
    p.data = {0.f, 1.f};
    CHECK_NOTHROW(validate(p));
    p.data[0] = 1.5f;
    CHECK_THROWS_AS(validate(p), Error);
    p.data[0] = -0.1f;
    CHECK_THROWS_AS(validate(p), Error);
}

TEST_CASE("png mask round-trip identity on random masks") {
    TempDir dir("png-roundtrip");
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const int w = 1 + int(rng() % 16), h = 1 + int(rng() % 16);
        const BinaryMask m = testutil::random_mask(rng, w, h);
        const auto path = dir / ("m" + std::to_string(i) + ".png");
        write_mask(m, path);
        CHECK(read_mask(path) == m);
    }
}

TEST_CASE("png write is byte-deterministic") {
    TempDir dir("png-det");
    std::mt19937_64 rng(11);
    const BinaryMask m = testutil::random_mask(rng, 16, 16);
    write_mask(m, dir / "a.png");
    write_mask(m, dir / "b.png");
    CHECK(testutil::slurp(dir / "a.png") == testutil::slurp(dir / "b.png"));
}

TEST_CASE("read_mask maps any nonzero sample to 1") {
    TempDir dir("png-nonzero");
    testutil::write_raw_png(dir / "g.png", 2, 2, {0, 1, 128, 255});
    const BinaryMask m = read_mask(dir / "g.png");
    CHECK(m.data == std::vector<std::uint8_t>{0, 1, 1, 1});
}

TEST_CASE("saturated 4x4 mask reads as all ones") {
    TempDir dir("png-sat");
    BinaryMask ones(4, 4);
    for (auto& v : ones.data) v = 1;
    write_mask(ones, dir / "ones.png");
    const BinaryMask m = read_mask(dir / "ones.png");
    CHECK(std::count(m.data.begin(), m.data.end(), 1) == 16);
}

TEST_CASE("write_mask encodes 1 as 255") {
    TempDir dir("png-values");
    BinaryMask checker(2, 2);
    checker.data = {1, 0, 0, 1};
    write_mask(checker, dir / "c.png");
    CHECK(testutil::read_gray_png_bytes(dir / "c.png") ==
          std::vector<std::uint8_t>{255, 0, 0, 255});
}

TEST_CASE("read_mask rejects non-mask inputs") {
    TempDir dir("png-reject");

    SUBCASE("missing file") { CHECK_THROWS_AS(read_mask(dir / "nope.png"), Error); }
    SUBCASE("not a png") {
        testutil::spit(dir / "t.png", "definitely text\n");
        CHECK_THROWS_AS(read_mask(dir / "t.png"), Error);
    }
    SUBCASE("truncated body") {
        BinaryMask m(8, 8);
        write_mask(m, dir / "full.png");
        const std::string bytes = testutil::slurp(dir / "full.png");
        testutil::spit(dir / "trunc.png", bytes.substr(0, 24));
        CHECK_THROWS_AS(read_mask(dir / "trunc.png"), Error);
    }
    SUBCASE("rgb rejected") {
        testutil::write_raw_png(dir / "rgb.png", 2, 1, {255, 0, 0, 0, 255, 0}, 8, true);
        CHECK_THROWS_AS(read_mask(dir / "rgb.png"), Error);
    }
    SUBCASE("16-bit rejected") {
        testutil::write_raw_png(dir / "deep.png", 2, 1, {0, 0, 255, 255}, 16);
        CHECK_THROWS_AS(read_mask(dir / "deep.png"), Error);
    }
}

TEST_CASE("pfm round-trip is bit-exact") {
    TempDir dir("pfm-roundtrip");

    SUBCASE("1x1 half") {
        ProbMap p(1, 1);
        p.data = {0.5f};
        write_pfm(p, dir / "half.pfm");
        CHECK(read_pfm(dir / "half.pfm") == p);
    }
    SUBCASE("random maps") {
        std::mt19937_64 rng(13);
        for (int i = 0; i < 100; ++i) {
            const int w = 1 + int(rng() % 12), h = 1 + int(rng() % 12);
            const ProbMap p = testutil::random_prob(rng, w, h);
            const auto path = dir / ("p" + std::to_string(i) + ".pfm");
            write_pfm(p, path);
            CHECK(read_pfm(path) == p);
        }
    }
}

TEST_CASE("pfm raster is stored bottom-to-top") {
    TempDir dir("pfm-order");
    ProbMap p(2, 2);
    // a,b / c,d with a,b the top row.
    const float a = 0.125f, b = 0.25f, c = 0.375f, d = 0.5f;
    p.data = {a, b, c, d};
    write_pfm(p, dir / "p.pfm");

    const std::string bytes = testutil::slurp(dir / "p.pfm");
    const std::string header = "Pf\n2 2\n-1.0\n";
    REQUIRE(bytes.size() == header.size() + 4 * sizeof(float));
    CHECK(bytes.substr(0, header.size()) == header);
    float raster[4];
    std::memcpy(raster, bytes.data() + header.size(), sizeof raster);
    CHECK(raster[0] == c);
    CHECK(raster[1] == d);
    CHECK(raster[2] == a);
    CHECK(raster[3] == b);
}

TEST_CASE("read_pfm rejects malformed files") {
    TempDir dir("pfm-reject");
    const std::string header = "Pf\n1 1\n-1.0\n";
    const float half = 0.5f, big = 1.5f;

    SUBCASE("bad magic") {
        std::string bytes = "PF\n1 1\n-1.0\n";
        bytes.append(reinterpret_cast<const char*>(&half), 4);
        testutil::spit(dir / "bad.pfm", bytes);
        CHECK_THROWS_AS(read_pfm(dir / "bad.pfm"), Error);
    }
    SUBCASE("positive scale means big-endian, unsupported") {
        std::string bytes = "Pf\n1 1\n1.0\n";
        bytes.append(reinterpret_cast<const char*>(&half), 4);
        testutil::spit(dir / "be.pfm", bytes);
        CHECK_THROWS_AS(read_pfm(dir / "be.pfm"), Error);
    }
    SUBCASE("value outside [0,1]") {
        std::string bytes = header;
        bytes.append(reinterpret_cast<const char*>(&big), 4);
        testutil::spit(dir / "range.pfm", bytes);
        CHECK_THROWS_AS(read_pfm(dir / "range.pfm"), Error);
    }
    SUBCASE("short raster") {
        std::string bytes = "Pf\n2 1\n-1.0\n";
        bytes.append(reinterpret_cast<const char*>(&half), 4);
        testutil::spit(dir / "short.pfm", bytes);
        CHECK_THROWS_AS(read_pfm(dir / "short.pfm"), Error);
    }
    SUBCASE("trailing bytes") {
        std::string bytes = header;
        bytes.append(reinterpret_cast<const char*>(&half), 4);
        bytes += "x";
        testutil::spit(dir / "long.pfm", bytes);
        CHECK_THROWS_AS(read_pfm(dir / "long.pfm"), Error);
    }
    SUBCASE("nonsense dims") {
        testutil::spit(dir / "dims.pfm", "Pf\n0 1\n-1.0\n");
        CHECK_THROWS_AS(read_pfm(dir / "dims.pfm"), Error);
    }
}

TEST_CASE("read_png_dims reads the header only") {
    TempDir dir("png-dims");
    write_mask(BinaryMask(7, 3), dir / "m.png");
    CHECK(read_png_dims(dir / "m.png") == std::pair<int, int>{7, 3});

    // Works for layouts read_mask rejects.
    testutil::write_raw_png(dir / "rgb.png", 5, 4, std::vector<std::uint8_t>(5 * 4 * 3, 9), 8,
                            true);
    CHECK(read_png_dims(dir / "rgb.png") == std::pair<int, int>{5, 4});

    testutil::spit(dir / "junk.png", "not a png at all");
    CHECK_THROWS_AS(read_png_dims(dir / "junk.png"), Error);
}
