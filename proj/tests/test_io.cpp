#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "tempdepth/io.hpp"

using namespace tempdepth;
namespace fs = std::filesystem;

namespace {

fs::path tmp_path(const std::string& name) {
    auto dir = fs::temp_directory_path() / "tempdepth_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Doubles that are exactly representable as 32-bit floats, so round trips
// can be compared bit for bit.
double as_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

} // namespace

TEST_CASE("pfm 1-channel round trip is bitwise") {
    std::mt19937_64 rng(11);
    Raster r(1, 5, 7);
    for (auto& v : r.data)
        v = as_f32((static_cast<double>(rng() >> 11) / 9.0e15 - 0.5) * 2000.0);
    r.data[3] = -0.0;
    r.data[4] = 0.0;

    auto p = tmp_path("round1.pfm");
    write_pfm(r, p.string());
    Raster back = read_pfm(p.string());
    REQUIRE(back.channels == 1);
    REQUIRE(back.width == 7);
    REQUIRE(back.height == 5);
    for (std::size_t i = 0; i < r.data.size(); ++i) {
        float a = static_cast<float>(r.data[i]);
        float b = static_cast<float>(back.data[i]);
        CHECK(std::memcmp(&a, &b, 4) == 0);
    }
    CHECK(std::signbit(back.data[3]));
    CHECK(!std::signbit(back.data[4]));
}

TEST_CASE("pfm 3-channel round trip and magic") {
    std::mt19937_64 rng(12);
    Raster r(3, 4, 3);
    for (auto& v : r.data)
        v = as_f32(static_cast<double>(rng() % 1000) * 0.125 - 60.0);

    auto p = tmp_path("round3.pfm");
    write_pfm(r, p.string());
    std::string bytes = slurp(p);
    CHECK(bytes.rfind("PF\n", 0) == 0);

    Raster back = read_pfm(p.string());
    REQUIRE(back.channels == 3);
    CHECK(back.data == r.data);
}

TEST_CASE("pfm constant grid payload") {
    Raster r(1, 2, 2);
    for (auto& v : r.data) v = 1.0;
    auto p = tmp_path("const.pfm");
    write_pfm(r, p.string());

    std::string bytes = slurp(p);
    CHECK(bytes.rfind("Pf\n", 0) == 0);
    std::size_t payload = bytes.size() - 4 * 4;
    const unsigned char* d = reinterpret_cast<const unsigned char*>(bytes.data()) + payload;
    for (int i = 0; i < 4; ++i) {
        float f;
        unsigned char le[4] = {d[4 * i], d[4 * i + 1], d[4 * i + 2], d[4 * i + 3]};
        std::uint32_t u = le[0] | (le[1] << 8) | (le[2] << 16) | (le[3] << 24);
        std::memcpy(&f, &u, 4);
        CHECK(f == 1.0f);
    }
}

TEST_CASE("pfm error paths") {
    auto p = tmp_path("bad.pfm");

    SUBCASE("bad magic") {
        spit(p, "Px\n2 2\n-1.0\n0123456789abcdef");
        CHECK_THROWS_AS(read_pfm(p.string()), FormatError);
    }
    SUBCASE("truncated payload") {
        // header says 3-channel 2x2 = 48 bytes, provide a 1-channel amount
        spit(p, "PF\n2 2\n-1.0\n" + std::string(16, '\0'));
        CHECK_THROWS_AS(read_pfm(p.string()), TruncationError);
    }
    SUBCASE("zero-size write") {
        CHECK_THROWS_AS(write_pfm(Raster(1, 0, 0), p.string()), PreconditionError);
    }
    SUBCASE("2-channel write") {
        CHECK_THROWS_AS(write_pfm(Raster(2, 2, 2), p.string()), PreconditionError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(read_pfm(tmp_path("nonexistent.pfm").string()), IoError);
    }
    SUBCASE("trailing bytes are ignored") {
        Raster r(1, 1, 2);
        r.data = {2.5, -4.0};
        write_pfm(r, p.string());
        spit(p, slurp(p) + "garbage");
        Raster back = read_pfm(p.string());
        CHECK(back.data == r.data);
    }
}

TEST_CASE("pfm round trip covers float32 extremes") {
    Raster r(1, 1, 6);
    r.data = {3.4028234663852886e38,   // largest finite float
              1.1754943508222875e-38,  // smallest normal
              1.401298464324817e-45,   // smallest subnormal
              -3.4028234663852886e38,
              -1.401298464324817e-45,
              0.0};
    auto p = tmp_path("extremes.pfm");
    write_pfm(r, p.string());
    Raster back = read_pfm(p.string());
    for (std::size_t i = 0; i < r.data.size(); ++i) {
        float a = static_cast<float>(r.data[i]);
        float b = static_cast<float>(back.data[i]);
        CHECK(std::memcmp(&a, &b, 4) == 0);
    }
}

TEST_CASE("pfm header tokens may share lines") {
    // some writers put the whole header on one line
    float v[2] = {7.5f, -1.25f};
    std::string body(8, '\0');
    for (int i = 0; i < 2; ++i) {
        std::uint32_t u;
        std::memcpy(&u, &v[i], 4);
        for (int b = 0; b < 4; ++b)
            body[4 * i + b] = static_cast<char>((u >> (8 * b)) & 0xff);
    }
    auto p = tmp_path("oneline.pfm");
    spit(p, "Pf 2 1 -1.0 " + body);
    Raster r = read_pfm(p.string());
    CHECK(r.data[0] == 7.5);
    CHECK(r.data[1] == -1.25);
}

TEST_CASE("pfm big-endian payload reads correctly") {
    // Positive scale marks big-endian data.
    std::string head = "Pf\n2 1\n1.0\n";
    float vals[2] = {1.5f, -2.25f};
    std::string body(8, '\0');
    for (int i = 0; i < 2; ++i) {
        std::uint32_t u;
        std::memcpy(&u, &vals[i], 4);
        body[4 * i + 0] = static_cast<char>((u >> 24) & 0xff);
        body[4 * i + 1] = static_cast<char>((u >> 16) & 0xff);
        body[4 * i + 2] = static_cast<char>((u >> 8) & 0xff);
        body[4 * i + 3] = static_cast<char>(u & 0xff);
    }
    auto p = tmp_path("bigendian.pfm");
    spit(p, head + body);
    Raster r = read_pfm(p.string());
    CHECK(r.data[0] == 1.5);
    CHECK(r.data[1] == -2.25);
}

TEST_CASE("pgm threshold boundary and round trip") {
    auto p = tmp_path("mask.pgm");

    SUBCASE("threshold at 127/128") {
        spit(p, std::string("P5\n2 1\n255\n") + static_cast<char>(128) + static_cast<char>(127));
        BinaryMask m = read_mask_pgm(p.string());
        CHECK(m.at(0, 0) == 1);
        CHECK(m.at(0, 1) == 0);
    }
    SUBCASE("all-255 reads as ones") {
        spit(p, std::string("P5\n3 2\n255\n") + std::string(6, static_cast<char>(0xff)));
        BinaryMask m = read_mask_pgm(p.string());
        CHECK(m.count() == 6);
    }
    SUBCASE("round trip") {
        BinaryMask m(3, 4);
        m.at(0, 0) = 1;
        m.at(2, 3) = 1;
        m.at(1, 2) = 1;
        write_mask_pgm(m, p.string());
        BinaryMask back = read_mask_pgm(p.string());
        CHECK(back.values == m.values);
    }
    SUBCASE("bad maxval") {
        spit(p, "P5\n2 1\n254\n..");
        CHECK_THROWS_AS(read_mask_pgm(p.string()), FormatError);
    }
    SUBCASE("truncated") {
        spit(p, "P5\n4 4\n255\nxx");
        CHECK_THROWS_AS(read_mask_pgm(p.string()), TruncationError);
    }
}

TEST_CASE("fgrid round trip and layout") {
    std::mt19937_64 rng(13);
    FeatureGrid g(4, 8, 8);
    for (auto& v : g.data)
        v = as_f32(static_cast<double>(static_cast<int>(rng() % 20000) - 10000) * 0.03125);

    auto p = tmp_path("grid.fgrid");
    write_fgrid(g, p.string());
    FeatureGrid back = read_fgrid(p.string());
    REQUIRE(back.channels == 4);
    REQUIRE(back.height == 8);
    REQUIRE(back.width == 8);
    CHECK(back.data == g.data);

    // element (c=1, y=0, x=0) sits at byte offset 16 + 1*H*W*4
    std::string bytes = slurp(p);
    std::size_t off = 16 + 1 * 8 * 8 * 4;
    const unsigned char* d = reinterpret_cast<const unsigned char*>(bytes.data()) + off;
    std::uint32_t u = d[0] | (d[1] << 8) | (d[2] << 16) | (d[3] << 24);
    float f;
    std::memcpy(&f, &u, 4);
    CHECK(static_cast<double>(f) == g.at(1, 0, 0));
}

TEST_CASE("fgrid error paths") {
    auto p = tmp_path("bad.fgrid");
    SUBCASE("wrong magic") {
        spit(p, std::string("FGRX") + std::string(12, '\0'));
        CHECK_THROWS_AS(read_fgrid(p.string()), FormatError);
    }
    SUBCASE("short header") {
        spit(p, "FGRD");
        CHECK_THROWS_AS(read_fgrid(p.string()), FormatError);
    }
    SUBCASE("truncated payload") {
        std::string head = "FGRD";
        head += std::string("\x02\x00\x00\x00", 4);
        head += std::string("\x02\x00\x00\x00", 4);
        head += std::string("\x02\x00\x00\x00", 4);
        spit(p, head + std::string(8, '\0')); // needs 32 bytes
        CHECK_THROWS_AS(read_fgrid(p.string()), TruncationError);
    }
}

TEST_CASE("golden corpus is byte exact") {
    const std::string dir = TEMPDEPTH_GOLDEN_DIR;

    SUBCASE("depth pfm") {
        Raster r = read_pfm(dir + "/depth_2x3.pfm");
        REQUIRE(r.channels == 1);
        REQUIRE(r.width == 3);
        REQUIRE(r.height == 2);
        const double expect[6] = {1.5, -0.0, 3.25, 0.5, 2.0, -7.125};
        for (int i = 0; i < 6; ++i)
            CHECK(r.data[i] == expect[i]);
        CHECK(std::signbit(r.data[1]));

        auto p = tmp_path("golden_depth.pfm");
        Raster w(1, 2, 3);
        std::copy(expect, expect + 6, w.data.begin());
        w.data[1] = -0.0;
        write_pfm(w, p.string());
        CHECK(slurp(p) == slurp(dir + "/depth_2x3.pfm"));
    }

    SUBCASE("normals pfm") {
        Raster r = read_pfm(dir + "/normals_2x2.pfm");
        REQUIRE(r.channels == 3);
        // channel planes, row-major top-to-bottom
        const double nx[4] = {0.25, -0.5, 0.75, 1.0};
        const double ny[4] = {0.0, -0.0, -1.5, 2.5};
        const double nz[4] = {1.0, 0.5, 0.25, -0.125};
        for (int i = 0; i < 4; ++i) {
            CHECK(r.data[i] == nx[i]);
            CHECK(r.data[4 + i] == ny[i]);
            CHECK(r.data[8 + i] == nz[i]);
        }
        auto p = tmp_path("golden_normals.pfm");
        Raster w(3, 2, 2);
        std::copy(nx, nx + 4, w.data.begin());
        std::copy(ny, ny + 4, w.data.begin() + 4);
        std::copy(nz, nz + 4, w.data.begin() + 8);
        w.data[4 + 1] = -0.0;
        write_pfm(w, p.string());
        CHECK(slurp(p) == slurp(dir + "/normals_2x2.pfm"));
    }

    SUBCASE("mask pgm") {
        BinaryMask m = read_mask_pgm(dir + "/mask_3x2.pgm");
        REQUIRE(m.width == 3);
        REQUIRE(m.height == 2);
        const std::uint8_t expect[6] = {1, 0, 1, 0, 1, 0};
        for (int i = 0; i < 6; ++i)
            CHECK(m.values[i] == expect[i]);

        auto p = tmp_path("golden_mask.pgm");
        write_mask_pgm(m, p.string());
        CHECK(slurp(p) == slurp(dir + "/mask_3x2.pgm"));
    }

    SUBCASE("feature grid") {
        FeatureGrid g = read_fgrid(dir + "/feat_2x2x3.fgrid");
        REQUIRE(g.channels == 2);
        REQUIRE(g.height == 2);
        REQUIRE(g.width == 3);
        const double expect[12] = {0.0, -0.0, 1.5, -2.25, 3.5, 100.0,
                                   65536.5, -0.001953125, 8.0, -8.0, 0.15625, 1234.5};
        for (int i = 0; i < 12; ++i)
            CHECK(g.data[i] == expect[i]);
        CHECK(std::signbit(g.data[1]));

        auto p = tmp_path("golden_feat.fgrid");
        FeatureGrid w(2, 2, 3);
        std::copy(expect, expect + 12, w.data.begin());
        w.data[1] = -0.0;
        write_fgrid(w, p.string());
        CHECK(slurp(p) == slurp(dir + "/feat_2x2x3.fgrid"));
    }
}

TEST_CASE("raster conversions") {
    SUBCASE("depth invalid pixels write as zero") {
        Grid g(2, 2, 4.0);
        g.at(0, 1) = -3.0; // invalid
        DepthMap d = DepthMap::from_grid(g);
        Raster r = to_raster(d);
        CHECK(r.at(0, 0, 1) == 0.0);
        DepthMap back = depth_from_raster(r);
        CHECK(!back.is_valid(0, 1));
        CHECK(back.is_valid(1, 1));
    }
    SUBCASE("flow third channel ignored") {
        FlowField f(2, 2);
        f.u.at(0, 0) = 1.5;
        f.v.at(1, 1) = -2.0;
        Raster r = to_raster(f);
        REQUIRE(r.channels == 3);
        r.at(2, 0, 0) = 99.0; // junk in the pad channel
        FlowField back = flow_from_raster(r);
        CHECK(back.u.at(0, 0) == 1.5);
        CHECK(back.v.at(1, 1) == -2.0);
    }
    SUBCASE("channel mismatch") {
        CHECK_THROWS_AS(grid_from_raster(Raster(3, 2, 2)), FormatError);
        CHECK_THROWS_AS(normals_from_raster(Raster(1, 2, 2)), FormatError);
    }
}
