#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "erp/raster.hpp"
#include "erp/raster_io.hpp"
#include "oracles.hpp"

using namespace erp;

TEST_CASE("downsample: constants, identity, 2x2 mean") {
    const Band c = Band::Constant(130, 70, 0.3f);
    const Band d = downsample(c, 64);
    CHECK(d.rows() == 3);
    CHECK(d.cols() == 2);
    CHECK((d - 0.3f).abs().maxCoeff() < 1e-7f);

    std::mt19937_64 rng(3);
    const Band r = oracle::random_band(rng, 17, 9);
    CHECK((downsample(r, 1) == r).all());

    Band q(2, 2);
    q << 0, 1, 1, 0;
    const Band m = downsample(q, 2);
    REQUIRE(m.size() == 1);
    CHECK(m(0, 0) == 0.5f);

    CHECK_THROWS_AS(downsample(q, 0), Error);
    CHECK_THROWS_AS(downsample(q, 3), Error);
}

TEST_CASE("tiling partitions the raster") {
    for (int h : {1, 63, 64, 65, 200})
        for (int w : {1, 64, 130})
            for (int t : {1, 7, 64}) {
                const TileGrid g(h, w, t);
                long sum = 0;
                for (int i = 0; i < g.count(); ++i) sum += g.tile(i).area();
                CHECK(sum == static_cast<long>(h) * w);
            }
}

TEST_CASE("nested block grid never straddles tiles and matches the oracle") {
    std::mt19937_64 rng(5);
    for (int h : {1, 50, 64, 100, 129})
        for (int w : {3, 64, 200})
            for (int f : {1, 4, 16, 51, 64, 100}) {
                const TileGrid tiles(h, w, 64);
                const BlockGrid g = BlockGrid::nested(tiles, f);
                for (int r = 0; r < g.rows(); ++r) {
                    const Rect b = g.block(r, 0);
                    CHECK(b.y / 64 == (b.y + b.h - 1) / 64);
                    CHECK(g.row_tile[r] == b.y / 64);
                }
                const Band band = oracle::random_band(rng, h, w);
                const Band got = downsample_tiled(band, tiles, f);
                const Band want = oracle::nested_block_mean(band, 64, f);
                REQUIRE(got.rows() == want.rows());
                REQUIRE(got.cols() == want.cols());
                CHECK((got - want).abs().maxCoeff() <= 1e-6f);
            }
}

TEST_CASE("tile_mean_abs_diff") {
    const Band a = Band::Constant(128, 192, 0.4f);
    const TileGrid g(128, 192, 64);
    const PixelMask all = full_mask(128, 192);
    CHECK((tile_mean_abs_diff(a, a, g, all) == 0.0).all());

    Band b = a;
    b.block(64, 128, 64, 64) += 0.05f;
    const auto d = tile_mean_abs_diff(a, b, g, all);
    CHECK(d(1, 2) == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(d.sum() == doctest::Approx(d(1, 2)));

    PixelMask m = all;
    m.block(0, 0, 64, 64).setConstant(false);
    CHECK(tile_mean_abs_diff(a, b, g, m)(0, 0) == kNotObservable);

    std::mt19937_64 rng(11);
    const Band x = oracle::random_band(rng, 128, 128), y = oracle::random_band(rng, 128, 128);
    const auto got = tile_mean_abs_diff(x, y, TileGrid(128, 128, 64), full_mask(128, 128));
    const auto want = oracle::tile_mean_abs_diff(x, y, 64, full_mask(128, 128));
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) CHECK(got(r, c) == doctest::Approx(want[r][c]).epsilon(1e-12));
}

TEST_CASE("psnr") {
    Image a;
    a.bands = {Band::Constant(20, 30, 0.5f), Band::Constant(20, 30, 0.25f)};
    const PixelMask all = full_mask(20, 30);
    const auto same = psnr(a, a, all);
    CHECK(same.aggregate == kInfDb);
    CHECK(same.per_band[0] == kInfDb);

    // error 0.125 is exact in float: MSE 1/64
    Image b = a;
    for (auto& band : b.bands) band += 0.125f;
    const auto r = psnr(a, b, all);
    CHECK(r.aggregate == doctest::Approx(10 * std::log10(64.0)).epsilon(1e-12));

    Image c = a;
    c.bands[0] = Band::Constant(20, 30, 0.6f);
    CHECK(psnr(a, c, all).per_band[0] == doctest::Approx(20.0).epsilon(1e-6));

    CHECK_THROWS_AS(psnr(a, b, full_mask(20, 30, false)), Error);
}

TEST_CASE("ERP1 golden file decodes to the known checksum") {
    const auto path = std::filesystem::path(ERP_TEST_DATA) / "golden.erp1";
    const Image img = read_raster(path);
    CHECK(img.height() == 3);
    CHECK(img.width() == 5);
    CHECK(img.band_count() == 2);
    CHECK(img.cell_id == 0x0102030405060708ull);
    CHECK(img.captured_at == 12.5);
    for (int b = 0; b < 2; ++b)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 5; ++x) CHECK(img.bands[b](y, x) == ((y * 5 + x) * 7 + b * 3) % 17 / 16.0f);
    const auto bytes = encode_erp1(img);
    CHECK(bytes.size() == 152);
    CHECK(oracle::fnv1a(bytes.data(), bytes.size()) == 0x430504cad0c81a0cull);
}

TEST_CASE("ERP1 rejects malformed input") {
    Image img;
    img.bands = {Band::Constant(4, 4, 0.5f)};
    auto bytes = encode_erp1(img);
    auto t = bytes;
    t.resize(t.size() - 3);
    CHECK_THROWS_AS(decode_erp1(t), Error);
    auto m = bytes;
    m[0] = 'X';
    CHECK_THROWS_AS(decode_erp1(m), Error);
    auto s = bytes;
    const float bad = 1.01f;
    std::memcpy(s.data() + 32, &bad, 4);
    CHECK_THROWS_AS(decode_erp1(s), Error);
    CHECK_THROWS_AS(read_raster("/nonexistent/file.erp1"), Error);

    Image neg = img;
    neg.bands[0](0, 0) = -0.5f;
    CHECK_THROWS_AS(encode_erp1(neg), Error);
}
