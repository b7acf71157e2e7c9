#include <doctest.h>

#include <random>

#include "erp/preprocess.hpp"
#include "erp/synth.hpp"
#include "oracles.hpp"

using namespace erp;

namespace {

CloudMask mask_with(int flagged, int total) {
    CloudMask m;
    m.cloudy = TilePlane<bool>::Constant(1, total, false);
    for (int i = 0; i < flagged; ++i) m.cloudy(0, i) = true;
    return m;
}

// precision and recall of the onboard tree against generator truth
std::pair<double, double> score(const World& w, const CloudDecisionTree& tree, int captures, double t0) {
    long tp = 0, fp = 0, fn = 0;
    for (int i = 0; i < captures; ++i) {
        const Capture c = w.capture(static_cast<std::uint64_t>(i % 3), t0 + i);
        const CloudMask m = detect_clouds_onboard(c.image, tree);
        tp += (m.cloudy && c.truth.cloudy).count();
        fp += (m.cloudy && !c.truth.cloudy).count();
        fn += (!m.cloudy && c.truth.cloudy).count();
    }
    return {tp + fp ? static_cast<double>(tp) / (tp + fp) : 1.0, tp + fn ? static_cast<double>(tp) / (tp + fn) : 1.0};
}

}  // namespace

TEST_CASE("drop rule is strictly more than half") {
    CHECK(should_drop(mask_with(51, 100)));
    CHECK_FALSE(should_drop(mask_with(50, 100)));
    CHECK_FALSE(should_drop(mask_with(0, 100)));
}

TEST_CASE("separable training set yields the single IR threshold") {
    // one feature per tile: IR band mean; cloudy iff IR > 0.8
    std::vector<LabeledImage> set;
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) {
        LabeledImage li;
        li.image.bands = {Band(64, 256), Band(64, 256)};
        li.cloudy.resize(1, 4);
        for (int t = 0; t < 4; ++t) {
            const float ir = static_cast<float>(std::uniform_real_distribution<double>(0.1, 1.0)(rng));
            li.image.bands[0].block(0, 64 * t, 64, 64).setConstant(0.3f);
            li.image.bands[1].block(0, 64 * t, 64, 64).setConstant(ir);
            li.cloudy(0, t) = ir > 0.8f;
        }
        set.push_back(li);
    }
    const CloudDecisionTree tree = train_cloud_tree(set);
    CHECK(tree.depth() == 1);
    for (const auto& li : set) CHECK((detect_clouds_onboard(li.image, tree).cloudy == li.cloudy).all());

    // all-clear set: a single leaf that flags nothing
    for (auto& li : set) li.cloudy.setConstant(false);
    const CloudDecisionTree none = train_cloud_tree(set);
    CHECK(none.depth() == 0);
    CHECK(detect_clouds_onboard(set[0].image, none).flagged() == 0);
}

TEST_CASE("tree JSON round trip and validation") {
    const auto t = CloudDecisionTree::single_threshold(3, 0.8f);
    const auto back = CloudDecisionTree::from_json(t.to_json());
    REQUIRE(back.nodes.size() == t.nodes.size());
    CHECK(back.nodes[0].threshold == 0.8f);
    CHECK_THROWS_AS(CloudDecisionTree::from_json("{\"nodes\": []}"), Error);
    CHECK_THROWS_AS(CloudDecisionTree::from_json("not json"), Error);
    Image img;
    img.bands = {Band::Zero(64, 64)};
    CHECK_THROWS_AS(detect_clouds_onboard(img, t), Error);
}

TEST_CASE("default tree on generator data: clear, heavy, mixed") {
    WorldConfig cfg;
    cfg.height = cfg.width = 256;
    cfg.seed = 77;
    const CloudDecisionTree tree = default_cloud_tree(cfg);

    cfg.clear_probability = 1.0;
    World clear(cfg);
    CHECK(detect_clouds_onboard(clear.capture(0, 3.0).image, tree).flagged() == 0);

    cfg.clear_probability = 0.0;
    World cloudy(cfg);
    const auto [precision, recall] = score(cloudy, tree, 30, 400.0);
    CHECK(precision >= 0.99);
    MESSAGE("onboard recall on held-out captures: " << recall);

    // fully cloudy tiles are flagged, so full cover gives coverage 1
    for (int i = 0; i < 40; ++i) {
        const Capture c = cloudy.capture(1, 500.0 + i);
        if (c.truth.coverage < 1.0) continue;
        CHECK(detect_clouds_onboard(c.image, tree).coverage() == 1.0);
    }
}

TEST_CASE("illumination fit") {
    std::mt19937_64 rng(2);
    const Band r = oracle::random_band(rng, 100, 100);
    const PixelMask all = full_mask(100, 100);

    const Band c = r * 0.8f + 0.1f;
    const auto fit = fit_illumination(c, r, all);
    CHECK(fit.k == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(fit.d == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(fit.residual_rms < 1e-6);

    const auto id = fit_illumination(r, r, all);
    CHECK(id.k == doctest::Approx(1.0));
    CHECK(id.d == doctest::Approx(0.0));

    std::normal_distribution<float> noise(0.0f, 0.01f);
    Band n = r * 0.9f + 0.05f;
    for (int i = 0; i < n.size(); ++i) n.data()[i] += noise(rng);
    const auto nf = fit_illumination(n, r, all);
    const auto want = oracle::ols(n, r, all);
    REQUIRE(want);
    CHECK(std::abs(nf.k - 0.9) <= 0.02);
    CHECK(std::abs(nf.d - 0.05) <= 0.01);
    CHECK(nf.k == doctest::Approx(want->k).epsilon(1e-9));
    CHECK(nf.d == doctest::Approx(want->d).epsilon(1e-9));

    CHECK_THROWS_AS(fit_illumination(c, Band::Constant(100, 100, 0.3f), all), Error);
    PixelMask one = full_mask(100, 100, false);
    one(5, 5) = true;
    CHECK_THROWS_AS(fit_illumination(c, r, one), Error);
}

TEST_CASE("consensus fit ignores changed samples") {
    std::mt19937_64 rng(4);
    const Band r = oracle::random_band(rng, 40, 40);
    Band c = (r * 0.9f + 0.05f).max(0.0f).min(1.0f);
    c.topRows(12) = (c.topRows(12) + 0.3f).min(1.0f);  // 30% changed
    const auto fit = fit_illumination_consensus(c, r, full_mask(40, 40));
    CHECK(fit.k == doctest::Approx(0.9).epsilon(1e-4));
    CHECK(fit.d == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(fit_illumination(c, r, full_mask(40, 40)).d > 0.1);  // plain OLS is pulled away
}

TEST_CASE("align") {
    std::mt19937_64 rng(6);
    const Band r = oracle::random_band(rng, 64, 64);
    CHECK((align(r, IlluminationFit::identity()) == r).all());
    IlluminationFit half;
    half.k = 0;
    half.d = 0.5;
    CHECK((align(r, half) == 0.5f).all());

    const Band c = r * 0.7f + 0.2f;
    const Band a = align(r, fit_illumination(c, r, full_mask(64, 64)));
    CHECK(tile_mean_abs_diff(a, c, TileGrid(64, 64), full_mask(64, 64))(0, 0) < 1e-6);
}
