#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "erp/preprocess.hpp"
#include "erp/raster.hpp"

namespace erp {

/// A change placed by hand: `delta[b]` is added to band b over `rect`
/// (absolute pixels; an empty rect means the whole tile).
struct ScriptedChange {
    std::uint64_t cell_id = 0;
    int tile = 0;
    double time = 0.0;
    std::vector<float> delta;  // one per band, or a single value for all bands
    Rect rect{};
};

struct WorldConfig {
    int height = 512;
    int width = 512;
    int bands = 4;  // the last band is infrared when bands >= 2
    int tile_size = 64;
    std::uint64_t seed = 1;

    // terrain: value noise, coarsest lattice spacing halved per octave
    int terrain_octaves = 3;
    int terrain_spacing = 128;
    float visible_lo = 0.15f, visible_hi = 0.68f;
    float ir_lo = 0.10f, ir_hi = 0.50f;

    // per-tile Poisson change process
    double change_rate = 0.015;  // events per tile per day
    double change_min = 0.05, change_max = 0.25;
    int change_min_extent = 32;
    std::vector<ScriptedChange> scripted;

    bool illumination = true;
    double k_min = 0.7, k_max = 1.3, d_min = -0.1, d_max = 0.1;

    bool clouds = true;
    double clear_probability = 1.0 / 3.0;
    bool thin_clouds = false;

    double horizon_days = 800.0;  // no random events are generated past this

    int ir_band() const { return bands >= 2 ? bands - 1 : -1; }
    void validate() const;
};

struct CaptureTruth {
    TilePlane<bool> cloudy;
    double coverage = 0.0;
    double k = 1.0;
    double d = 0.0;
};

struct Capture {
    Image image;
    CaptureTruth truth;
};

/// Deterministic synthetic earth: every output is a pure function of
/// (config, cell, t). Safe to call from several threads.
class World {
public:
    explicit World(WorldConfig config);
    ~World();
    World(const World&) = delete;
    World& operator=(const World&) = delete;

    const WorldConfig& config() const { return cfg_; }
    TileGrid grid() const { return TileGrid(cfg_.height, cfg_.width, cfg_.tile_size); }

    Capture capture(std::uint64_t cell_id, double t) const;
    CaptureTruth truth(std::uint64_t cell_id, double t) const;

    /// Illumination-free, cloud-free surface at time t.
    std::vector<Band> surface(std::uint64_t cell_id, double t) const;

    /// Per band, tile mean |S(t2) - S(t1)| > 0.01.
    std::vector<TilePlane<bool>> truly_changed(std::uint64_t cell_id, double t1, double t2,
                                               double criterion = 0.01) const;

    /// Change events of one tile with time in (t1, t2].
    int event_count(std::uint64_t cell_id, int tile, double t1, double t2) const;

private:
    struct Event {
        double time;
        Rect rect;
        std::vector<float> delta;
    };
    struct CellState;

    CellState& cell(std::uint64_t cell_id) const;
    void apply(std::vector<Band>& s, const Event& e) const;

    WorldConfig cfg_;
    mutable std::mutex mu_;
    mutable std::map<std::uint64_t, std::unique_ptr<CellState>> cells_;
};

/// Tree trained on generated, labelled captures of a world like `cfg`
/// (different seed stream), used when a scenario supplies none.
CloudDecisionTree default_cloud_tree(const WorldConfig& cfg);

}  // namespace erp
