#include "erp/synth.hpp"

#include <algorithm>
#include <cmath>

#include "erp/rng.hpp"

namespace erp {

namespace {

enum StreamId : std::uint64_t { kTerrain = 1, kEvents, kClouds, kIllumination, kCloudTexture, kTraining };

double smooth(double x) { return x * x * (3.0 - 2.0 * x); }

Band value_noise(const WorldConfig& cfg, std::uint64_t cell_id, int band) {
    Band out = Band::Zero(cfg.height, cfg.width);
    Plane<double> acc = Plane<double>::Zero(cfg.height, cfg.width);
    double amp = 1.0, norm = 0.0;
    int spacing = cfg.terrain_spacing;
    for (int o = 0; o < cfg.terrain_octaves && spacing >= 1; ++o, amp *= 0.5, spacing /= 2) {
        const int ny = cfg.height / spacing + 2, nx = cfg.width / spacing + 2;
        Plane<double> lattice(ny, nx);
        for (int i = 0; i < ny; ++i) {
            for (int j = 0; j < nx; ++j) {
                const std::uint64_t h = hash_key({cfg.seed, cell_id, kTerrain, static_cast<std::uint64_t>(band),
                                                  static_cast<std::uint64_t>(o), static_cast<std::uint64_t>(i),
                                                  static_cast<std::uint64_t>(j)});
                lattice(i, j) = static_cast<double>(h >> 11) * 0x1.0p-53;
            }
        }
        for (int y = 0; y < cfg.height; ++y) {
            const int iy = y / spacing;
            const double fy = smooth((y % spacing + 0.5) / spacing);
            for (int x = 0; x < cfg.width; ++x) {
                const int ix = x / spacing;
                const double fx = smooth((x % spacing + 0.5) / spacing);
                const double top = lattice(iy, ix) + (lattice(iy, ix + 1) - lattice(iy, ix)) * fx;
                const double bot = lattice(iy + 1, ix) + (lattice(iy + 1, ix + 1) - lattice(iy + 1, ix)) * fx;
                acc(y, x) += amp * (top + (bot - top) * fy);
            }
        }
        norm += amp;
    }
    const bool ir = band == cfg.ir_band();
    const double lo = ir ? cfg.ir_lo : cfg.visible_lo, hi = ir ? cfg.ir_hi : cfg.visible_hi;
    // octave sums concentrate around the middle; stretch before mapping
    const Plane<double> v = ((acc / norm - 0.5) * 1.6 + 0.5).max(0.0).min(1.0);
    out = (lo + (hi - lo) * v).cast<float>();
    return out;
}

}  // namespace

void WorldConfig::validate() const {
    if (height < 1 || width < 1 || bands < 1 || tile_size < 1) {
        throw Error(ErrorCode::InvalidArgument, "world dimensions must be positive");
    }
    if (change_rate < 0 || change_min <= 0 || change_max < change_min) {
        throw Error(ErrorCode::InvalidArgument, "invalid change process");
    }
    if (clear_probability < 0 || clear_probability > 1) {
        throw Error(ErrorCode::InvalidArgument, "clear_probability must lie in [0,1]");
    }
    if (k_min > k_max || d_min > d_max) throw Error(ErrorCode::InvalidArgument, "invalid illumination range");
    if (terrain_spacing < 1 || terrain_octaves < 1) throw Error(ErrorCode::InvalidArgument, "invalid terrain");
}

struct World::CellState {
    std::mutex mu;
    std::vector<Band> terrain;
    std::vector<std::vector<Event>> events;  // per tile, time-ordered
    double time = 0.0;
    bool started = false;
    std::vector<Band> surface;
    std::vector<std::size_t> next;  // per tile, first event not yet applied
};

World::World(WorldConfig config) : cfg_(std::move(config)) { cfg_.validate(); }
World::~World() = default;

World::CellState& World::cell(std::uint64_t cell_id) const {
    std::lock_guard lock(mu_);
    auto& slot = cells_[cell_id];
    if (slot) return *slot;
    slot = std::make_unique<CellState>();
    CellState& st = *slot;
    for (int b = 0; b < cfg_.bands; ++b) st.terrain.push_back(value_noise(cfg_, cell_id, b));
    const TileGrid g = grid();
    st.events.resize(g.count());
    for (int t = 0; t < g.count(); ++t) {
        if (cfg_.change_rate <= 0) break;
        const Rect tile = g.tile(t);
        Stream rng(hash_key({cfg_.seed, cell_id, kEvents, static_cast<std::uint64_t>(t)}));
        for (double time = rng.exponential(cfg_.change_rate); time <= cfg_.horizon_days;
             time += rng.exponential(cfg_.change_rate)) {
            Event e;
            e.time = time;
            const int min_h = std::min(cfg_.change_min_extent, tile.h), min_w = std::min(cfg_.change_min_extent, tile.w);
            const int h = min_h + rng.below(tile.h - min_h + 1);
            const int w = min_w + rng.below(tile.w - min_w + 1);
            e.rect = {tile.y + rng.below(tile.h - h + 1), tile.x + rng.below(tile.w - w + 1), h, w};
            for (int b = 0; b < cfg_.bands; ++b) {
                const double mag = rng.uniform(cfg_.change_min, cfg_.change_max);
                e.delta.push_back(static_cast<float>(rng.uniform() < 0.5 ? -mag : mag));
            }
            st.events[t].push_back(std::move(e));
        }
    }
    for (const auto& sc : cfg_.scripted) {
        if (sc.cell_id != cell_id) continue;
        if (sc.tile < 0 || sc.tile >= g.count()) throw Error(ErrorCode::InvalidArgument, "scripted tile out of range");
        Event e;
        e.time = sc.time;
        e.rect = sc.rect.area() > 0 ? sc.rect : g.tile(sc.tile);
        if (sc.delta.size() == 1) {
            e.delta.assign(cfg_.bands, sc.delta[0]);
        } else if (static_cast<int>(sc.delta.size()) == cfg_.bands) {
            e.delta = sc.delta;
        } else {
            throw Error(ErrorCode::InvalidArgument, "scripted change needs one delta or one per band");
        }
        st.events[sc.tile].push_back(std::move(e));
    }
    for (auto& ev : st.events) {
        std::stable_sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
    }
    st.next.assign(g.count(), 0);
    return st;
}

void World::apply(std::vector<Band>& s, const Event& e) const {
    for (int b = 0; b < cfg_.bands; ++b) {
        const bool ir = b == cfg_.ir_band();
        const float lo = ir ? cfg_.ir_lo : cfg_.visible_lo, hi = ir ? cfg_.ir_hi : cfg_.visible_hi;
        auto blk = s[b].block(e.rect.y, e.rect.x, e.rect.h, e.rect.w);
        blk = (blk + e.delta[b]).max(lo).min(hi);
    }
}

std::vector<Band> World::surface(std::uint64_t cell_id, double t) const {
    CellState& st = cell(cell_id);
    std::lock_guard lock(st.mu);
    if (!st.started || t < st.time) {
        st.surface = st.terrain;
        st.next.assign(st.events.size(), 0);
        st.started = true;
    }
    for (std::size_t tile = 0; tile < st.events.size(); ++tile) {
        const auto& ev = st.events[tile];
        auto& i = st.next[tile];
        for (; i < ev.size() && ev[i].time <= t; ++i) apply(st.surface, ev[i]);
    }
    st.time = t;
    return st.surface;
}

std::vector<TilePlane<bool>> World::truly_changed(std::uint64_t cell_id, double t1, double t2,
                                                  double criterion) const {
    if (t2 < t1) std::swap(t1, t2);
    CellState& st = cell(cell_id);
    const TileGrid g = grid();
    std::vector<TilePlane<bool>> out(cfg_.bands, TilePlane<bool>::Constant(g.rows(), g.cols(), false));
    for (int t = 0; t < g.count(); ++t) {
        const auto& ev = st.events[t];
        const bool any = std::any_of(ev.begin(), ev.end(), [&](const Event& e) { return e.time > t1 && e.time <= t2; });
        if (!any) continue;
        const Rect r = g.tile(t);
        // replaying only this tile's events reproduces its pixels exactly
        std::vector<Band> a(cfg_.bands);
        for (int b = 0; b < cfg_.bands; ++b) a[b] = st.terrain[b];
        std::size_t i = 0;
        for (; i < ev.size() && ev[i].time <= t1; ++i) apply(a, ev[i]);
        std::vector<Band> bsurf = a;
        for (; i < ev.size() && ev[i].time <= t2; ++i) apply(bsurf, ev[i]);
        for (int b = 0; b < cfg_.bands; ++b) {
            const double m = (bsurf[b].block(r.y, r.x, r.h, r.w).cast<double>() -
                              a[b].block(r.y, r.x, r.h, r.w).cast<double>())
                                 .abs()
                                 .mean();
            out[b](t / g.cols(), t % g.cols()) = m > criterion;
        }
    }
    return out;
}

int World::event_count(std::uint64_t cell_id, int tile, double t1, double t2) const {
    const auto& ev = cell(cell_id).events.at(tile);
    return static_cast<int>(std::count_if(ev.begin(), ev.end(), [&](const Event& e) { return e.time > t1 && e.time <= t2; }));
}

CaptureTruth World::truth(std::uint64_t cell_id, double t) const {
    const TileGrid g = grid();
    CaptureTruth tr;
    tr.cloudy = TilePlane<bool>::Constant(g.rows(), g.cols(), false);
    if (cfg_.illumination) {
        Stream rng(hash_key({cfg_.seed, cell_id, kIllumination, time_bits(t)}));
        tr.k = rng.uniform(cfg_.k_min, cfg_.k_max);
        tr.d = rng.uniform(cfg_.d_min, cfg_.d_max);
    }
    if (cfg_.clouds) {
        Stream rng(hash_key({cfg_.seed, cell_id, kClouds, time_bits(t)}));
        if (rng.uniform() >= cfg_.clear_probability) {
            const int m = 1 + rng.below(g.count());
            std::vector<int> frontier{rng.below(g.count())};
            int placed = 0;
            while (placed < m && !frontier.empty()) {
                const int pick = rng.below(static_cast<int>(frontier.size()));
                const int idx = frontier[pick];
                frontier[pick] = frontier.back();
                frontier.pop_back();
                const int r = idx / g.cols(), c = idx % g.cols();
                if (tr.cloudy(r, c)) continue;
                tr.cloudy(r, c) = true;
                ++placed;
                const int nr[4] = {r - 1, r + 1, r, r}, nc[4] = {c, c, c - 1, c + 1};
                for (int k = 0; k < 4; ++k) {
                    if (nr[k] >= 0 && nr[k] < g.rows() && nc[k] >= 0 && nc[k] < g.cols() && !tr.cloudy(nr[k], nc[k])) {
                        frontier.push_back(nr[k] * g.cols() + nc[k]);
                    }
                }
            }
        }
    }
    tr.coverage = g.count() ? static_cast<double>(tr.cloudy.count()) / g.count() : 0.0;
    return tr;
}

Capture World::capture(std::uint64_t cell_id, double t) const {
    if (t < 0) throw Error(ErrorCode::InvalidArgument, "capture time must be >= 0");
    Capture cap;
    cap.truth = truth(cell_id, t);
    cap.image.cell_id = cell_id;
    cap.image.captured_at = t;
    cap.image.bands = surface(cell_id, t);
    const float k = static_cast<float>(cap.truth.k), d = static_cast<float>(cap.truth.d);
    for (auto& band : cap.image.bands) band = (band * k + d).max(0.0f).min(1.0f);

    if (cap.truth.coverage > 0) {
        const TileGrid g = grid();
        const std::uint64_t key = hash_key({cfg_.seed, cell_id, kCloudTexture, time_bits(t)});
        const int ir = cfg_.ir_band();
        const float ir_base = cfg_.thin_clouds ? 0.55f : 0.85f, ir_span = cfg_.thin_clouds ? 0.30f : 0.15f;
        std::vector<float> u;
        for (int tile = 0; tile < g.count(); ++tile) {
            if (!cap.truth.cloudy(tile / g.cols(), tile % g.cols())) continue;
            const Rect r = g.tile(tile);
            u.resize(static_cast<std::size_t>(r.area()));
            for (int y = 0; y < r.h; ++y) {
                for (int x = 0; x < r.w; ++x) {
                    const std::uint64_t pos = static_cast<std::uint64_t>(r.y + y) << 32 | static_cast<std::uint64_t>(r.x + x);
                    const std::uint64_t h = splitmix64(key ^ pos);
                    u[static_cast<std::size_t>(y) * r.w + x] = static_cast<float>(static_cast<double>(h >> 11) * 0x1.0p-53);
                }
            }
            const Eigen::Map<const Band> tex(u.data(), r.h, r.w);
            for (int b = 0; b < cfg_.bands; ++b) {
                const float base = b == ir ? ir_base : 0.8f, span = b == ir ? ir_span : 0.2f;
                cap.image.bands[b].block(r.y, r.x, r.h, r.w) = base + span * tex;
            }
        }
    }
    return cap;
}

CloudDecisionTree default_cloud_tree(const WorldConfig& cfg) {
    WorldConfig train = cfg;
    train.seed = hash_key({cfg.seed, kTraining});
    train.clouds = true;
    train.clear_probability = 0.2;
    train.change_rate = 0.0;
    train.scripted.clear();
    if (train.ir_band() < 0) return CloudDecisionTree::single_threshold(0, 2.0f);
    World world(train);
    const int tiles = world.grid().count();
    std::vector<LabeledImage> set;
    long labelled = 0;
    for (int i = 0; i < 200 && labelled < 4000; ++i) {
        Capture c = world.capture(static_cast<std::uint64_t>(i % 4), 1.0 + i);
        set.push_back({std::move(c.image), std::move(c.truth.cloudy)});
        labelled += tiles;
    }
    return train_cloud_tree(set, {CloudDecisionTree::kMaxDepth, 0.99, cfg.tile_size});
}

}  // namespace erp
