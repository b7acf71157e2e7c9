#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "erp/ground.hpp"
#include "erp/sim.hpp"
#include "oracles.hpp"

using namespace erp;

namespace {

ArchiveRecord record(std::uint64_t cell, double t, int sat, double cloud = 0.0) {
    ArchiveRecord r;
    r.cell_id = cell;
    r.captured_at = t;
    r.satellite = sat;
    r.cloud_coverage = cloud;
    r.complete = true;
    r.image = std::make_shared<Image>();
    return r;
}

}  // namespace

TEST_CASE("ground labels are generator truth") {
    TilePlane<bool> t(2, 3);
    t << true, false, false, false, true, true;
    CHECK((redetect_clouds_ground(t) == t).all());
}

TEST_CASE("reference selection") {
    GroundArchive a;
    CHECK(select_reference(a, 1, 100) == nullptr);
    a.add(record(1, 10, 0));
    CHECK(select_reference(a, 1, 100)->captured_at == 10);
    a.add(record(1, 20, 2));
    a.add(record(1, 30, 1, 0.5));  // cloudy: not eligible
    a.add(record(1, 40, 0));       // after `now`
    CHECK(select_reference(a, 1, 35)->captured_at == 20);
    CHECK(select_reference(a, 1, 35)->satellite == 2);
    ReferencePolicy fixed;
    fixed.earliest = true;
    CHECK(select_reference(a, 1, 35, fixed)->captured_at == 10);
    ReferencePolicy full_only;
    full_only.reconstructed_eligible = false;
    CHECK(select_reference(a, 1, 35, full_only) == nullptr);

    a.release_except({{1, 20}});
    CHECK(a.retained_images() == 1);
    CHECK(select_reference(a, 1, 35)->captured_at == 20);
}

TEST_CASE("uplink planning") {
    const BlockIndex idx(BlockGrid::nested(TileGrid(128, 128), 16));
    std::mt19937_64 rng(3);
    std::vector<Band> rasters;
    for (int i = 0; i < 5; ++i) rasters.push_back(oracle::random_band(rng, idx.rows(), idx.cols()));
    std::vector<UplinkTarget> targets;
    for (int i = 0; i < 5; ++i) targets.push_back({static_cast<std::uint64_t>(i), 10.0, {&rasters[i]}});

    ReferenceStore shadow(idx);
    SUBCASE("current caches cost nothing") {
        for (int i = 0; i < 5; ++i) shadow.apply_diff(make_diff(i, 0, 10.0, rasters[i], nullptr, idx), 0);
        const auto p = plan_uplink(0, targets, shadow, 1 << 20);
        CHECK(p.diffs.empty());
        CHECK(p.total_bytes == 0);
    }
    SUBCASE("zero budget skips all") {
        const auto p = plan_uplink(0, targets, shadow, 0);
        CHECK(p.admitted.empty());
        CHECK(p.skipped.size() == 5);
    }
    SUBCASE("budget of one diff admits exactly one") {
        const std::size_t one = make_diff(0, 0, 10.0, rasters[0], nullptr, idx).wire_bytes();
        const auto p = plan_uplink(0, targets, shadow, one);
        CHECK(p.admitted.size() == 1);
        CHECK(p.total_bytes <= one);
    }
    SUBCASE("first-fit never exceeds the budget and matches exhaustive packing on equal sizes") {
        for (int i = 0; i < 5; ++i)
            if (i % 2) shadow.apply_diff(make_diff(i, 0, 1.0 + i, rasters[(i + 1) % 5], nullptr, idx), 0);
        for (std::size_t budget = 0; budget < 6000; budget += 97) {
            const auto p = plan_uplink(0, targets, shadow, budget);
            CHECK(p.total_bytes <= budget);
            // all diffs are full and equally sized: the optimum count is floor(budget / size)
            const std::size_t size = make_diff(0, 0, 10.0, rasters[0], nullptr, idx).wire_bytes();
            CHECK(p.admitted.size() == std::min<std::size_t>(5, budget / size));
        }
    }
    SUBCASE("oldest cached reference first") {
        shadow.apply_diff(make_diff(3, 0, 1.0, rasters[0], nullptr, idx), 0);
        shadow.apply_diff(make_diff(1, 0, 5.0, rasters[0], nullptr, idx), 0);
        const std::size_t one = make_diff(0, 0, 10.0, rasters[0], nullptr, idx).wire_bytes();
        const auto p = plan_uplink(0, targets, shadow, one);
        REQUIRE(p.admitted.size() == 1);
        CHECK(p.admitted[0] == 0);  // never cached beats cached at 1.0
    }
}

TEST_CASE("guaranteed download rule") {
    CHECK_FALSE(schedule_guaranteed_download(71, 100, 0.0));
    CHECK(schedule_guaranteed_download(69, 100, 0.0));
    CHECK_FALSE(schedule_guaranteed_download(55, 100, 0.4));  // 45 days but cloudy
    CHECK(schedule_guaranteed_download(55, 110, 0.0));
    CHECK(schedule_guaranteed_download(NAN, 3, 0.0));
    CHECK_FALSE(schedule_guaranteed_download(0, 100, 0.0, 0));
}
