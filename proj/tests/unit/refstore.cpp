#include <doctest.h>

#include <random>

#include "erp/refstore.hpp"
#include "oracles.hpp"

using namespace erp;

namespace {

BlockIndex index_for(int h, int w, int factor) { return BlockIndex(BlockGrid::nested(TileGrid(h, w), factor)); }

}  // namespace

TEST_CASE("diffs: identical, one tile, full turnover") {
    const BlockIndex idx = index_for(256, 192, 8);
    std::mt19937_64 rng(1);
    const Band a = oracle::random_band(rng, idx.rows(), idx.cols());
    CHECK(make_diff(1, 0, 5.0, a, &a, idx).tiles.empty());

    Band b = a;
    b(9, 17) += 0.01f;  // block row 9 is tile row 1, block col 17 is tile col 2
    const auto one = make_diff(1, 0, 5.0, b, &a, idx);
    REQUIRE(one.tiles.size() == 1);
    CHECK(one.tiles[0].tile == 1 * 3 + 2);
    CHECK(one.wire_bytes() < full_diff_bytes(idx));

    const auto full = make_diff(1, 0, 5.0, a, nullptr, idx);
    CHECK(static_cast<int>(full.tiles.size()) == idx.tile_count());
    CHECK(full.wire_bytes() == full_diff_bytes(idx));
    CHECK(full.serialize().size() == full.wire_bytes());
}

TEST_CASE("apply_diff keeps the cache coherent") {
    const BlockIndex idx = index_for(130, 200, 16);
    std::mt19937_64 rng(2);
    const Band g0 = oracle::random_band(rng, idx.rows(), idx.cols());
    ReferenceStore store(idx);

    CHECK_THROWS_AS(store.apply_diff(make_diff(4, 1, 1.0, g0, &g0, idx), 0.0), Error);  // empty but uncached
    store.apply_diff(make_diff(4, 1, 1.0, g0, nullptr, idx), 2.0);
    REQUIRE(store.find(4, 1));
    CHECK((store.find(4, 1)->raster == g0).all());

    // empty diff only refreshes the timestamps
    store.apply_diff(make_diff(4, 1, 3.0, g0, &g0, idx), 4.0);
    CHECK(store.find(4, 1)->source_captured_at == 3.0);
    CHECK(store.find(4, 1)->uploaded_at == 4.0);
    CHECK((store.find(4, 1)->raster == g0).all());

    Band g1 = g0;
    g1.block(0, 0, 4, 4) = oracle::random_band(rng, 4, 4);
    const auto d = make_diff(4, 1, 6.0, g1, &store.find(4, 1)->raster, idx);
    store.apply_diff(ReferenceDiff::parse(d.serialize()), 7.0);
    CHECK((store.find(4, 1)->raster == g1).all());
    CHECK(store.bytes() == entry_bytes(*store.find(4, 1)));
}

TEST_CASE("diff wire format rejects malformed input") {
    const BlockIndex idx = index_for(64, 128, 32);
    const Band a = Band::Constant(idx.rows(), idx.cols(), 0.5f);
    auto bytes = make_diff(1, 0, 0.0, a, nullptr, idx).serialize();
    bytes.push_back(0);
    CHECK_THROWS_AS(ReferenceDiff::parse(bytes), Error);
    bytes.resize(10);
    CHECK_THROWS_AS(ReferenceDiff::parse(bytes), Error);
}

TEST_CASE("storage estimate") {
    const auto s = storage_estimate(1000);
    CHECK(s.captured_mb == doctest::Approx(1740));
    CHECK(s.reference_mb == doctest::Approx(0.87 * 160000 / 2601));
    CHECK(s.ratio <= 0.10);
    const auto z = storage_estimate(0);
    CHECK(z.captured_mb == 0);
    CHECK(z.reference_mb == 0);
    CHECK_THROWS_AS(storage_estimate(10, 0), Error);
}

TEST_CASE("storage ledger") {
    StorageLedger l;
    l.budget = 100;
    l.update(60, 30);
    CHECK(l.high_water == 90);
    l.update(10, 10);
    CHECK(l.high_water == 90);
    CHECK_THROWS_AS(l.update(90, 20), Error);
}
