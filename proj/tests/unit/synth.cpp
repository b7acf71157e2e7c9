#include <doctest.h>

#include <cmath>

#include "erp/synth.hpp"

using namespace erp;

TEST_CASE("static world gives identical captures") {
    WorldConfig c;
    c.height = c.width = 128;
    c.change_rate = 0;
    c.illumination = false;
    c.clouds = false;
    World w(c);
    const Image a = w.capture(3, 1.0).image, b = w.capture(3, 250.0).image;
    for (int i = 0; i < c.bands; ++i) CHECK((a.bands[i] == b.bands[i]).all());
    CHECK_THROWS_AS(w.capture(0, -1.0), Error);
}

TEST_CASE("captures are pure functions of (config, cell, t)") {
    WorldConfig c;
    c.height = c.width = 128;
    World w1(c), w2(c);
    const Image late = w1.capture(2, 90.0).image;  // out of order on w1
    const Image early = w1.capture(2, 10.0).image;
    CHECK((w2.capture(2, 10.0).image.bands[1] == early.bands[1]).all());
    CHECK((w2.capture(2, 90.0).image.bands[0] == late.bands[0]).all());
}

TEST_CASE("cloudy pixels are bright in infrared") {
    WorldConfig c;
    c.height = c.width = 256;
    c.clear_probability = 0.0;
    World w(c);
    const TileGrid g = w.grid();
    for (double t : {1.0, 2.0, 3.0}) {
        const Capture cap = w.capture(0, t);
        REQUIRE(cap.truth.coverage > 0);
        for (int i = 0; i < g.count(); ++i) {
            if (!cap.truth.cloudy(i / g.cols(), i % g.cols())) continue;
            const Rect r = g.tile(i);
            CHECK(cap.image.bands[c.ir_band()].block(r.y, r.x, r.h, r.w).minCoeff() >= 0.85f);
        }
    }
}

TEST_CASE("truly changed fraction follows 1 - exp(-rate dt)") {
    WorldConfig c;
    c.height = c.width = 256;
    c.bands = 1;
    c.change_min = 0.05;  // every event moves its tile well past the criterion
    c.change_min_extent = 64;
    World w(c);
    const int tiles = w.grid().count();
    for (double dt : {5.0, 30.0}) {
        long hit = 0, n = 0;
        for (int cell = 0; cell < 40; ++cell) {
            const auto truth = w.truly_changed(static_cast<std::uint64_t>(cell), 100.0, 100.0 + dt);
            hit += truth[0].count();
            n += tiles;
        }
        const double p = 1 - std::exp(-c.change_rate * dt);
        const double sigma = std::sqrt(p * (1 - p) / n);
        CHECK(std::abs(static_cast<double>(hit) / n - p) <= 3 * sigma);
    }
}
