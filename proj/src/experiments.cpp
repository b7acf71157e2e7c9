#include "erp/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "erp/parallel.hpp"
#include "erp/refstore.hpp"

namespace erp {

void Table::write_csv(std::ostream& out) const {
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            const bool quote = cells[i].find_first_of(",\"") != std::string::npos;
            if (quote) {
                out << '"';
                for (char ch : cells[i]) out << (ch == '"' ? "\"\"" : std::string(1, ch));
                out << '"';
            } else {
                out << cells[i];
            }
        }
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
}

std::string fmt(double v, int precision) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

ScenarioConfig fig4_config(Strategy strategy) {
    ScenarioConfig c;
    c.satellites = 3;
    c.cells = 1;
    c.periods = {30, 30, 30};
    c.phases = {1, 11, 21};
    c.duration_days = 52;
    c.warmup_days = 30;
    c.strategy = strategy;
    c.guaranteed_period_days = 0;
    c.detection.theta = 0.01;
    c.detection.reference_downsample = 4;
    c.rate.gamma = 2.0;
    auto& w = c.world;
    w.height = 256;
    w.width = 320;
    w.bands = 1;
    w.clouds = false;
    w.illumination = false;
    w.change_rate = 0;
    // 7 tiles change in (1,11], 4 more in (11,21], 9 others in (31,41]
    for (int i = 0; i < 20; ++i) {
        const double time = i < 7 ? 5.0 : i < 11 ? 15.0 : 35.0;
        const float mag = static_cast<float>(0.06 + 0.013 * i);
        w.scripted.push_back({0, i, time, {i % 2 ? -mag : mag}, {}});
    }
    return c;
}

ScenarioConfig staggered_age_config(int satellites, double period, bool clouds, std::uint64_t seed) {
    ScenarioConfig c;
    c.seed = seed;
    c.satellites = satellites;
    c.cells = 1;
    c.periods.assign(satellites, period);
    c.phases.resize(satellites);
    for (int s = 0; s < satellites; ++s) c.phases[s] = 1.0 + period * s / satellites;
    c.warmup_days = clouds ? 365 : 2 * period;
    c.duration_days = clouds ? 365 + 730 : 6 * period;
    c.guaranteed_period_days = 0;
    c.detection.reference_downsample = 8;
    c.rate.gamma = 1.0;
    auto& w = c.world;
    w.height = 64;
    w.width = 64;
    w.bands = 2;
    w.clouds = clouds;
    w.illumination = false;
    w.change_rate = 0;
    return c;
}

ScenarioConfig fig9_config() {
    ScenarioConfig c;
    c.satellites = 8;
    c.cells = 6;
    c.duration_days = 180;
    c.warmup_days = 60;
    c.world.height = 256;
    c.world.width = 256;
    return c;
}

ScenarioConfig fig12_config() {
    ScenarioConfig c;
    c.cells = 8;
    c.duration_days = 365;
    c.warmup_days = 120;
    c.guaranteed_period_days = 0;
    c.world.height = 192;
    c.world.width = 192;
    c.world.bands = 2;
    return c;
}

ScenarioConfig budget_config() { return ScenarioConfig{}; }

double Fig4Outcome::mean_age() const {
    return ages.empty() ? 0.0 : std::accumulate(ages.begin(), ages.end(), 0.0) / static_cast<double>(ages.size());
}

double Fig4Outcome::mean_fraction() const {
    if (changed_tiles.empty() || tiles_per_capture == 0) return 0.0;
    const long total = std::accumulate(changed_tiles.begin(), changed_tiles.end(), 0L);
    return static_cast<double>(total) / static_cast<double>(tiles_per_capture * changed_tiles.size());
}

Fig4Outcome run_fig4(Strategy strategy) {
    const RunResult r = run(fig4_config(strategy));
    Fig4Outcome o;
    o.strategy = strategy;
    for (const auto& i : r.images) {
        if (!i.measured) continue;
        o.changed_tiles.push_back(i.coded);
        o.tiles_per_capture = i.tiles;
        if (i.has_reference) o.ages.push_back(i.reference_age);
    }
    return o;
}

std::vector<CalibrationSample> fig8_samples(const WorldConfig& world_cfg, const DetectionConfig& det, int cells,
                                            double spacing, double t0, double t1) {
    const World world(world_cfg);
    const TileGrid grid = world.grid();
    std::vector<std::vector<CalibrationSample>> per_cell(cells);
    parallel_for(cells, [&](int c) {
        const double offset = spacing * c / cells;
        std::vector<Band> ref;
        double prev = -1;
        for (double t = t0 + offset; t < t1; t += spacing) {
            Capture cap = world.capture(static_cast<std::uint64_t>(c), t);
            if (prev >= 0) {
                std::vector<const Band*> refs;
                for (const Band& b : ref) refs.push_back(&b);
                CloudMask none{TilePlane<bool>::Constant(grid.rows(), grid.cols(), false)};
                const Detection d = detect_changes(cap.image, refs, none, det);
                const auto truth = world.truly_changed(static_cast<std::uint64_t>(c), prev, t);
                for (int b = 0; b < cap.image.band_count(); ++b) {
                    for (int i = 0; i < grid.count(); ++i) {
                        const int r = i / grid.cols(), k = i % grid.cols();
                        per_cell[c].push_back({d.diffs[b](r, k), truth[b](r, k)});
                    }
                }
            }
            ref.clear();
            for (const Band& b : cap.image.bands) ref.push_back(make_reference_raster(b, det));
            prev = t;
        }
    });
    std::vector<CalibrationSample> out;
    for (auto& v : per_cell) out.insert(out.end(), v.begin(), v.end());
    return out;
}

Fig8Outcome run_fig8(std::uint64_t seed) {
    ScenarioConfig base;
    WorldConfig w = base.world;
    w.seed = seed;
    w.clouds = false;
    DetectionConfig det = base.detection;
    det.reference_downsample = 51;
    // spacing that leaves about 40% of tiles truly changed
    const double spacing = -std::log(0.6) / w.change_rate;
    const int cells = 12;
    const auto profile = fig8_samples(w, det, cells, spacing, 0.0, 365.0);
    const auto heldout = fig8_samples(w, det, cells, spacing, 365.0, 730.0);
    Fig8Outcome o;
    // half the 1% false-positive budget on the profiling year leaves room for
    // year-to-year drift on the next one
    o.profile = calibrate_theta(profile, ThetaSweep{}, 0.005);
    o.heldout = evaluate_theta(heldout, o.profile.theta);
    o.profile_samples = static_cast<long>(profile.size());
    o.heldout_samples = static_cast<long>(heldout.size());
    return o;
}

Table experiment_fig4() {
    Table t;
    t.header = {"strategy", "changed_tiles_per_capture", "mean_reference_age_days", "reported_age_days",
                "mean_downloaded_fraction", "reported_downloaded_fraction"};
    for (Strategy s : {Strategy::SatLocal, Strategy::Constellation}) {
        const Fig4Outcome o = run_fig4(s);
        std::string counts;
        for (long n : o.changed_tiles) counts += (counts.empty() ? "" : " ") + std::to_string(n);
        const bool local = s == Strategy::SatLocal;
        t.add({to_string(s), counts, fmt(o.mean_age()), local ? "30" : "10", fmt(o.mean_fraction()),
               local ? "0.55" : "0.15"});
    }
    return t;
}

Table experiment_fig5(std::uint64_t seed) {
    const ScenarioConfig base = staggered_age_config(1, 30.0, true, seed);
    const auto samples = reference_age_experiment(base, {1, 2, 4, 8, 16});
    Table t;
    t.header = {"satellites", "strategy", "samples", "mean_age_days", "p50_age_days", "p90_age_days",
                "analytic_mean_days", "note"};
    const double q = base.world.clear_probability;
    for (const auto& a : samples) {
        std::vector<double> v = a.ages;
        std::sort(v.begin(), v.end());
        auto pct = [&](double p) { return v.empty() ? 0.0 : v[static_cast<std::size_t>(p * (v.size() - 1))]; };
        const double analytic = a.strategy == Strategy::SatLocal ? 30.0 / q : 30.0 / (a.satellites * q);
        t.add({std::to_string(a.satellites), to_string(a.strategy), std::to_string(v.size()), fmt(a.mean()),
               fmt(pct(0.5)), fmt(pct(0.9)), fmt(analytic),
               "reported: 51 days -> 4.2 days on its dataset; not reproducible here"});
    }
    return t;
}

Table experiment_fig8(std::uint64_t seed) {
    const Fig8Outcome o = run_fig8(seed);
    Table t;
    t.header = {"set", "samples", "theta", "false_positive_rate", "miss_rate", "downloaded_fraction", "reported_note"};
    t.add({"profile", std::to_string(o.profile_samples), fmt(o.profile.theta), fmt(o.profile.false_positive_rate),
           fmt(o.profile.miss_rate), fmt(o.profile.changed_fraction),
           "reported: ~40% tiles downloaded, almost no unchanged tile misclassified"});
    t.add({"heldout", std::to_string(o.heldout_samples), fmt(o.heldout.theta), fmt(o.heldout.false_positive_rate),
           fmt(o.heldout.miss_rate), fmt(o.heldout.changed_fraction),
           "reported: 1.7% of changed tiles missed on its dataset"});
    return t;
}

Table experiment_fig9(std::uint64_t seed) {
    ScenarioConfig base = fig9_config();
    base.seed = seed;
    const auto pts = downlink_quality_tradeoff(
        base, {Strategy::Constellation, Strategy::FixedRef, Strategy::NoncloudyAll}, {0.25, 0.5, 1.0, 2.0});
    Table t;
    t.header = {"strategy", "gamma_bpp", "mean_psnr_db", "downlink_bandwidth_bps", "mean_bytes_per_contact",
                "reported_note"};
    for (const auto& p : pts) {
        t.add({to_string(p.strategy), fmt(p.gamma), fmt(p.mean_psnr), fmt(p.bandwidth_bps), fmt(p.mean_downlink_bytes),
               "reported: 1.3-3.3x less bandwidth at equal quality on its dataset"});
    }
    return t;
}

Table experiment_fig12(std::uint64_t seed) {
    std::vector<int> counts(16);
    std::iota(counts.begin(), counts.end(), 1);
    const auto pts = compression_vs_constellation(fig12_config(), counts, {seed, seed + 1});
    Table t;
    t.header = {"satellites", "mean_downloaded_fraction", "compression_ratio", "ratio_vs_n1", "reported_note"};
    for (const auto& p : pts) {
        t.add({std::to_string(p.satellites), fmt(p.mean_changed_fraction), fmt(p.ratio), fmt(p.ratio / pts.front().ratio),
               "reported: 3x at N=1 to 10x at N=16 on its dataset"});
    }
    return t;
}

Table experiment_appendix_a() {
    Table t;
    t.header = {"area_km2", "captured_mb", "reference_mb", "ratio", "stated_reference_mb", "stated_ratio", "note"};
    for (double a : {0.0, 1000.0, 10000.0}) {
        const StorageEstimate s = storage_estimate(a);
        t.add({fmt(a), fmt(s.captured_mb), fmt(s.reference_mb), fmt(s.ratio), fmt(s.stated_reference_mb),
               fmt(s.stated_ratio),
               "formula 0.87*160a/2601 = 0.0535a MB differs from the stated 0.08a MB; the stated 9% also does not follow "
               "from 2*0.87a"});
    }
    return t;
}

const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids{"fig4", "fig5", "fig8", "fig9", "fig12", "appendixA"};
    return ids;
}

Table run_experiment(const std::string& id, std::uint64_t seed) {
    if (id == "fig4") return experiment_fig4();
    if (id == "fig5") return experiment_fig5(seed);
    if (id == "fig8") return experiment_fig8(seed);
    if (id == "fig9") return experiment_fig9(seed);
    if (id == "fig12") return experiment_fig12(seed);
    if (id == "appendixA") return experiment_appendix_a();
    throw Error(ErrorCode::Usage, "unknown experiment '" + id + "' (expected fig4, fig5, fig8, fig9, fig12 or appendixA)");
}

}  // namespace erp
