#include "erp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "erp/parallel.hpp"
#include "erp/rng.hpp"

namespace erp {

EventQueue::EventQueue(std::vector<Event> events) : events_(std::move(events)) {
    std::sort(events_.begin(), events_.end());
}

std::vector<SatelliteSchedule> make_schedule(const ScenarioConfig& cfg) {
    std::vector<SatelliteSchedule> out(cfg.satellites);
    for (int s = 0; s < cfg.satellites; ++s) {
        Stream rng(hash_key({cfg.seed, 0x5c4ed, static_cast<std::uint64_t>(s)}));
        auto& sch = out[s];
        sch.period = cfg.periods.empty() ? rng.uniform(cfg.revisit_min_days, cfg.revisit_max_days) : cfg.periods[s];
        sch.phase = cfg.phases.empty() ? rng.uniform(0.0, sch.period) : cfg.phases[s];
        const double golden = s * 0.618;
        sch.contact_phase = (golden - std::floor(golden)) / cfg.contacts_per_day;
    }
    return out;
}

EventQueue build_events(const ScenarioConfig& cfg, const std::vector<SatelliteSchedule>& schedule) {
    std::vector<Event> ev;
    for (int s = 0; s < cfg.satellites; ++s) {
        const auto& sch = schedule[s];
        for (int c = 0; c < cfg.cells; ++c) {
            const double offset = sch.phase + static_cast<double>(c) / cfg.cells * sch.period;
            for (long k = 0;; ++k) {
                const double t = offset + k * sch.period;
                if (t >= cfg.duration_days) break;
                ev.push_back({t, EventKind::Capture, s, static_cast<std::uint64_t>(c), 0});
            }
        }
        for (int k = 0;; ++k) {
            const double t = sch.contact_phase + static_cast<double>(k) / cfg.contacts_per_day;
            if (t >= cfg.duration_days) break;
            ev.push_back({t, EventKind::Contact, s, 0, k});
        }
    }
    return EventQueue(std::move(ev));
}

namespace {

constexpr double kNoTime = std::numeric_limits<double>::quiet_NaN();

struct Pending {
    EncodedPayload payload;
    std::size_t bytes = 0;
    Image original;
    CaptureTruth truth;
    std::size_t record = 0;
};

struct Satellite {
    ReferenceStore cache;
    std::deque<Pending> pending;
    std::uint64_t pending_bytes = 0;
    StorageLedger storage;
    std::map<std::uint64_t, double> last_full;
    std::vector<std::pair<double, std::uint64_t>> captures;  // (time, cell), time-ordered

    double known_last_full(std::uint64_t cell) const {
        const auto it = last_full.find(cell);
        return it == last_full.end() ? kNoTime : it->second;
    }
};

class Simulation {
public:
    explicit Simulation(const ScenarioConfig& cfg)
        : cfg_(cfg), world_(world_config(cfg)), grid_(world_.grid()),
          index_(reference_grid(cfg.world.height, cfg.world.width, cfg.detection)),
          tree_(cfg.cloud_tree ? *cfg.cloud_tree : default_cloud_tree(world_.config())),
          schedule_(make_schedule(cfg)) {
        cfg_.validate();
        policy_.max_cloud = cfg.reference_max_cloud;
        policy_.reconstructed_eligible = cfg.reconstructed_reference_eligible;
        policy_.earliest = cfg.strategy == Strategy::FixedRef;
        sats_.resize(cfg.satellites);
        shadows_.assign(cfg.satellites, ReferenceStore(index_));
        for (auto& s : sats_) {
            s.cache = ReferenceStore(index_);
            s.storage.budget = cfg.storage_budget_bytes;
        }
    }

    RunResult run() {
        EventQueue q = build_events(cfg_, schedule_);
        for (const Event& e : q.events()) {
            if (e.kind == EventKind::Capture) sats_[e.satellite].captures.emplace_back(e.time, e.cell_id);
        }
        try {
            while (!q.empty()) {
                const Event& e = q.pop();
                if (e.kind == EventKind::Capture) {
                    capture(e.satellite, e.cell_id, e.time);
                } else {
                    contact(e.satellite, e.index, e.time);
                }
            }
        } catch (const Error& err) {
            if (err.code() != ErrorCode::BudgetViolation) throw;
            std::ostringstream dump;
            write_metrics_csv(dump, finish());
            std::string what = err.what();
            what.erase(0, what.find(": ") + 2);  // the rethrow adds the code prefix back
            throw Error(ErrorCode::BudgetViolation, what + "\nledger at failure:\n" + dump.str());
        }
        return finish();
    }

private:
    static WorldConfig world_config(const ScenarioConfig& cfg) {
        WorldConfig w = cfg.world;
        w.seed = cfg.seed;
        w.horizon_days = std::max(w.horizon_days, cfg.duration_days + 1.0);
        return w;
    }

    bool uses_uplink() const {
        return cfg_.strategy == Strategy::Constellation || cfg_.strategy == Strategy::FixedRef;
    }

    void update_storage(Satellite& s) { s.storage.update(s.pending_bytes, s.cache.bytes()); }

    void capture(int sat_id, std::uint64_t cell, double t) {
        Satellite& sat = sats_[sat_id];
        Capture cap = world_.capture(cell, t);
        const CloudMask cloud = detect_clouds_onboard(cap.image, tree_, cfg_.detection.tile_size);
        const int bands = cap.image.band_count();

        ImageRecord rec;
        rec.satellite = sat_id;
        rec.cell_id = cell;
        rec.captured_at = t;
        rec.measured = t >= cfg_.warmup_days;
        rec.onboard_cloud = cloud.coverage();
        rec.true_cloud = cap.truth.coverage;
        rec.tiles = static_cast<long>(grid_.count()) * bands;

        std::vector<const Band*> refs(bands, nullptr);
        std::vector<double> ref_times(bands, -1.0);
        if (cfg_.strategy != Strategy::NoncloudyAll) {
            for (int b = 0; b < bands; ++b) {
                if (const ReferenceEntry* e = sat.cache.find(cell, b)) {
                    refs[b] = &e->raster;
                    ref_times[b] = e->source_captured_at;
                }
            }
            if (refs[0]) {
                rec.has_reference = true;
                rec.reference_age = t - ref_times[0];
            }
        }

        if (should_drop(cloud)) {
            rec.dropped = true;
            images_.push_back(rec);
            return;
        }

        bool full = cfg_.strategy != Strategy::NoncloudyAll &&
                    schedule_guaranteed_download(sat.known_last_full(cell), t, cloud.coverage(),
                                                 cfg_.guaranteed_period_days, cfg_.reference_max_cloud);
        ChangeMap map(grid_, bands, TileState::Changed);
        std::vector<IlluminationFit> fits(bands, IlluminationFit::identity());
        if (cfg_.strategy == Strategy::NoncloudyAll) {
            for (int b = 0; b < bands; ++b) {
                for (int i = 0; i < grid_.count(); ++i) {
                    if (cloud.cloudy(i / grid_.cols(), i % grid_.cols())) map.at(b, i) = TileState::NotObservable;
                }
            }
        } else {
            Detection det = detect_changes(cap.image, refs, cloud, cfg_.detection);
            map = std::move(det.map);
            fits = std::move(det.fits);
            if (det.any_degenerate()) full = true;
        }

        std::vector<bool> sel(map.states.size());
        for (int b = 0; b < bands; ++b) {
            for (int i = 0; i < grid_.count(); ++i) {
                const std::size_t k = static_cast<std::size_t>(b) * grid_.count() + i;
                const bool cloudy = cloud.cloudy(i / grid_.cols(), i % grid_.cols());
                sel[k] = full || map.states[k] == TileState::Changed ||
                         (map.states[k] == TileState::NotObservable && !cloudy);
            }
        }
        rec.full_download = full;
        rec.changed = map.count(TileState::Changed);
        rec.coded = static_cast<long>(std::count(sel.begin(), sel.end(), true));

        Pending p;
        p.payload = encode(cap.image, map, fits, cfg_.rate, sel, ref_times, full ? EncodedPayload::kFullDownload : 0);
        p.bytes = p.payload.total_bytes();
        rec.payload_bytes = p.bytes;
        p.original = std::move(cap.image);
        p.truth = std::move(cap.truth);
        p.record = images_.size();
        images_.push_back(rec);

        if (full) sat.last_full[cell] = t;
        if (cfg_.strategy == Strategy::SatLocal && cloud.flagged() == 0) {
            for (int b = 0; b < bands; ++b) {
                sat.cache.put({cell, b, make_reference_raster(p.original.bands[b], cfg_.detection), t, t});
            }
        }
        sat.pending_bytes += p.bytes;
        sat.pending.push_back(std::move(p));
        update_storage(sat);
    }

    void deliver(Pending& p, int layers, double now) {
        const EncodedPayload& pl = p.payload;
        ImageRecord& rec = images_[p.record];
        std::vector<const Band*> refs(pl.bands.size(), nullptr);
        for (std::size_t b = 0; b < pl.bands.size(); ++b) {
            if (pl.bands[b].reference_time < 0) continue;
            const ArchiveRecord* r = archive_.find(pl.cell_id, pl.bands[b].reference_time);
            if (r && r->image) refs[b] = &r->image->bands[b];
        }
        rec.delivered = true;
        rec.delivered_at = now;
        rec.layers_delivered = layers;

        ArchiveRecord ar;
        ar.cell_id = pl.cell_id;
        ar.captured_at = pl.captured_at;
        ar.satellite = rec.satellite;
        ar.cloudy = redetect_clouds_ground(p.truth.cloudy);
        ar.cloud_coverage = p.truth.coverage;
        ar.full_download = pl.full_download();
        try {
            Reconstruction recon = reconstruct(pl, refs);
            ar.complete = recon.valid.all();
            if (recon.valid.any()) {
                rec.psnr = psnr(p.original, recon.image, recon.valid).aggregate;
                rec.psnr_valid = true;
            }
            ar.image = std::make_shared<const Image>(std::move(recon.image));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ReconstructionImpossible) throw;
            ++lost_;
        }
        if (ar.full_download) {
            auto& lf = ground_last_full_[pl.cell_id];
            lf = std::max(lf, pl.captured_at);
        }
        archive_.add(std::move(ar));
    }

    const std::vector<Band>& reference_rasters(const ArchiveRecord& r) {
        auto& slot = ref_rasters_[{r.cell_id, r.captured_at}];
        if (slot.empty()) {
            for (const Band& b : r.image->bands) slot.push_back(make_reference_raster(b, cfg_.detection));
        }
        return slot;
    }

    void contact(int sat_id, int index, double t) {
        Satellite& sat = sats_[sat_id];
        ContactRecord cr;
        cr.satellite = sat_id;
        cr.index = index;
        cr.time = t;

        const std::uint64_t cap = cfg_.downlink_budget_bytes();
        bool delivered_any = false;
        while (!sat.pending.empty()) {
            Pending& p = sat.pending.front();
            int layers = p.payload.kept_layers;
            std::size_t bytes = p.bytes;
            if (cr.downlink_bytes + bytes > cap) {
                bool fits = false;
                for (int keep = layers - 1; keep >= 1 && !fits; --keep) {
                    EncodedPayload tr = truncate_layers(p.payload, keep);
                    if (cr.downlink_bytes + tr.total_bytes() <= cap) {
                        p.payload = std::move(tr);
                        layers = keep;
                        bytes = p.payload.total_bytes();
                        fits = true;
                        ++cr.payloads_truncated;
                    }
                }
                if (!fits) break;
            }
            cr.downlink_bytes += bytes;
            ++cr.payloads_sent;
            images_[p.record].delivered_bytes = bytes;
            sat.pending_bytes -= p.bytes;
            deliver(p, layers, t);
            sat.pending.pop_front();
            delivered_any = true;
        }
        cr.payloads_deferred = static_cast<int>(sat.pending.size());
        if (cr.downlink_bytes > cap) {
            throw Error(ErrorCode::BudgetViolation, "downlink " + std::to_string(cr.downlink_bytes) + " bytes exceeds " +
                                                        std::to_string(cap));
        }

        if (uses_uplink()) uplink(sat_id, index, t, cr);
        if (delivered_any || uses_uplink()) release();

        update_storage(sat);
        cr.storage_bytes = sat.storage.total();
        cr.reference_bytes = sat.storage.reference;
        contacts_.push_back(cr);
    }

    void uplink(int sat_id, int index, double t, ContactRecord& cr) {
        Satellite& sat = sats_[sat_id];
        const double next = schedule_[sat_id].contact_phase + static_cast<double>(index + 1) / cfg_.contacts_per_day;
        std::vector<std::uint64_t> upcoming;
        auto it = std::upper_bound(sat.captures.begin(), sat.captures.end(), std::make_pair(t, ~std::uint64_t{0}));
        for (; it != sat.captures.end() && it->first <= next; ++it) {
            if (std::find(upcoming.begin(), upcoming.end(), it->second) == upcoming.end()) upcoming.push_back(it->second);
        }
        if (upcoming.empty()) return;

        std::vector<UplinkTarget> targets;
        for (std::uint64_t cell : upcoming) {
            const ArchiveRecord* r = select_reference(archive_, cell, t, policy_);
            if (!r) continue;
            UplinkTarget tg;
            tg.cell_id = cell;
            tg.source_captured_at = r->captured_at;
            for (const Band& b : reference_rasters(*r)) tg.rasters.push_back(&b);
            targets.push_back(std::move(tg));
        }
        const std::uint64_t budget = cfg_.uplink_budget_bytes();
        const UplinkPlan plan =
            plan_uplink(static_cast<int>(contacts_.size()), targets, shadows_[sat_id], budget, cfg_.uplink_policy,
                        cfg_.seed, static_cast<std::size_t>(cfg_.control_bytes_per_cell), upcoming.size());
        if (plan.total_bytes > budget) {
            throw Error(ErrorCode::BudgetViolation,
                        "uplink plan " + std::to_string(plan.total_bytes) + " bytes exceeds " + std::to_string(budget));
        }
        for (const ReferenceDiff& d : plan.diffs) {
            sat.cache.apply_diff(ReferenceDiff::parse(d.serialize()), t);
            shadows_[sat_id].apply_diff(d, t);
            uplinks_.push_back({sat_id, t, d.cell_id, d.band_id, d.wire_bytes(), d.tiles.size(), true});
        }
        for (std::uint64_t c : plan.skipped) uplinks_.push_back({sat_id, t, c, -1, 0, 0, false});
        if (plan.control_bytes > 0 || cfg_.control_bytes_per_cell == 0) {
            for (std::uint64_t c : upcoming) {
                const auto g = ground_last_full_.find(c);
                if (g == ground_last_full_.end()) continue;
                const double known = sat.known_last_full(c);
                if (std::isnan(known) || known < g->second) sat.last_full[c] = g->second;
            }
        }
        if (!(sat.cache == shadows_[sat_id])) {
            throw Error(ErrorCode::InvalidReference, "onboard cache diverged from the ground shadow");
        }
        cr.uplink_bytes = plan.total_bytes;
    }

    void release() {
        std::set<std::pair<std::uint64_t, double>> keep;
        for (const auto& s : sats_) {
            for (std::uint64_t c = 0; c < static_cast<std::uint64_t>(cfg_.cells); ++c) {
                for (int b = 0; b < cfg_.world.bands; ++b) {
                    if (const ReferenceEntry* e = s.cache.find(c, b)) keep.insert({c, e->source_captured_at});
                }
            }
            for (const auto& p : s.pending) {
                for (const auto& bh : p.payload.bands) {
                    if (bh.reference_time >= 0) keep.insert({p.payload.cell_id, bh.reference_time});
                }
            }
        }
        for (std::uint64_t c = 0; c < static_cast<std::uint64_t>(cfg_.cells); ++c) {
            if (const ArchiveRecord* r = select_reference(archive_, c, INFINITY, policy_)) keep.insert({c, r->captured_at});
        }
        archive_.release_except(keep);
        for (auto it = ref_rasters_.begin(); it != ref_rasters_.end();) {
            it = keep.count(it->first) ? std::next(it) : ref_rasters_.erase(it);
        }
    }

    RunResult finish() {
        RunResult r;
        r.config = cfg_;
        r.images = images_;
        r.contacts = contacts_;
        r.uplinks = uplinks_;
        r.ledger = summarize(cfg_, images_, contacts_);
        for (const auto& s : sats_) {
            r.ledger.storage_high_water = std::max(r.ledger.storage_high_water, s.storage.high_water);
        }
        for (const auto& c : contacts_) r.ledger.reference_high_water = std::max(r.ledger.reference_high_water, c.reference_bytes);
        return r;
    }

    ScenarioConfig cfg_;
    World world_;
    TileGrid grid_;
    BlockIndex index_;
    CloudDecisionTree tree_;
    std::vector<SatelliteSchedule> schedule_;
    ReferencePolicy policy_;
    std::vector<Satellite> sats_;
    std::vector<ReferenceStore> shadows_;
    GroundArchive archive_;
    std::map<std::uint64_t, double> ground_last_full_;
    std::map<std::pair<std::uint64_t, double>, std::vector<Band>> ref_rasters_;
    std::vector<ImageRecord> images_;
    std::vector<ContactRecord> contacts_;
    std::vector<UplinkRecord> uplinks_;
    long lost_ = 0;
};

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

RunResult run(const ScenarioConfig& cfg) {
    cfg.validate();
    Simulation sim(cfg);
    return sim.run();
}

MetricsLedger summarize(const ScenarioConfig& cfg, const std::vector<ImageRecord>& images,
                        const std::vector<ContactRecord>& contacts) {
    MetricsLedger m;
    m.strategy = cfg.strategy;
    std::vector<double> psnr, coded, changed, age;
    m.min_psnr = kPsnrCapDb;
    for (const auto& r : images) {
        if (!r.measured) continue;
        ++m.captures;
        if (r.has_reference) age.push_back(r.reference_age);
        if (r.dropped) {
            ++m.dropped;
            continue;
        }
        coded.push_back(r.coded_fraction());
        changed.push_back(r.tiles ? static_cast<double>(r.changed) / r.tiles : 0.0);
        m.full_downloads += r.full_download;
        if (r.delivered) ++m.delivered;
        if (r.psnr_valid) {
            psnr.push_back(cap_db(r.psnr));
            m.min_psnr = std::min(m.min_psnr, cap_db(r.psnr));
        }
    }
    m.mean_psnr = mean_of(psnr);
    if (psnr.empty()) m.min_psnr = 0.0;
    m.mean_coded_fraction = mean_of(coded);
    m.mean_changed_fraction = mean_of(changed);
    m.mean_reference_age = mean_of(age);
    m.reference_age_samples = static_cast<long>(age.size());

    std::vector<double> down, up;
    for (const auto& c : contacts) {
        if (c.time < cfg.warmup_days) continue;
        down.push_back(static_cast<double>(c.downlink_bytes));
        up.push_back(static_cast<double>(c.uplink_bytes));
        m.max_downlink_bytes = std::max(m.max_downlink_bytes, c.downlink_bytes);
        m.max_uplink_bytes = std::max(m.max_uplink_bytes, c.uplink_bytes);
        m.storage_high_water = std::max(m.storage_high_water, c.storage_bytes);
    }
    m.mean_downlink_bytes = mean_of(down);
    m.mean_uplink_bytes = mean_of(up);
    m.downlink_bandwidth_bps = m.mean_downlink_bytes * 8.0 / cfg.contact_seconds;
    return m;
}

void write_metrics_csv(std::ostream& out, const RunResult& r) {
    const MetricsLedger& m = r.ledger;
    out << "strategy,seed,captures,dropped,delivered,full_downloads,mean_downlink_bytes,downlink_bandwidth_bps,"
           "max_downlink_bytes,mean_uplink_bytes,max_uplink_bytes,mean_psnr_db,min_psnr_db,mean_downloaded_fraction,"
           "mean_changed_fraction,mean_reference_age_days,reference_age_samples,storage_high_water_bytes,"
           "reference_high_water_bytes,budget_violations\n";
    out << to_string(m.strategy) << ',' << r.config.seed << ',' << m.captures << ',' << m.dropped << ',' << m.delivered
        << ',' << m.full_downloads << ',' << m.mean_downlink_bytes << ',' << m.downlink_bandwidth_bps << ','
        << m.max_downlink_bytes << ',' << m.mean_uplink_bytes << ',' << m.max_uplink_bytes << ',' << m.mean_psnr << ','
        << m.min_psnr << ',' << m.mean_coded_fraction << ',' << m.mean_changed_fraction << ','
        << m.mean_reference_age << ',' << m.reference_age_samples << ',' << m.storage_high_water << ','
        << m.reference_high_water << ',' << m.budget_violations << '\n';
}

void write_images_csv(std::ostream& out, const RunResult& r) {
    out << "satellite,cell,captured_at,measured,dropped,onboard_cloud,true_cloud,full_download,has_reference,"
           "reference_age_days,band_tiles,changed,coded,payload_bytes,delivered,delivered_at,layers,delivered_bytes,"
           "psnr_db\n";
    for (const auto& i : r.images) {
        out << i.satellite << ',' << i.cell_id << ',' << i.captured_at << ',' << i.measured << ',' << i.dropped << ','
            << i.onboard_cloud << ',' << i.true_cloud << ',' << i.full_download << ',' << i.has_reference << ',';
        if (i.has_reference) out << i.reference_age;
        out << ',' << i.tiles << ',' << i.changed << ',' << i.coded << ',' << i.payload_bytes << ',' << i.delivered
            << ',';
        if (i.delivered) out << i.delivered_at;
        out << ',' << i.layers_delivered << ',' << i.delivered_bytes << ',';
        if (i.psnr_valid) out << cap_db(i.psnr);
        out << '\n';
    }
}

void write_contacts_csv(std::ostream& out, const RunResult& r) {
    out << "satellite,index,time,downlink_bytes,downlink_bps,uplink_bytes,payloads_sent,payloads_truncated,"
           "payloads_deferred,storage_bytes,reference_bytes\n";
    for (const auto& c : r.contacts) {
        out << c.satellite << ',' << c.index << ',' << c.time << ',' << c.downlink_bytes << ','
            << c.downlink_bytes * 8.0 / r.config.contact_seconds << ',' << c.uplink_bytes << ',' << c.payloads_sent
            << ',' << c.payloads_truncated << ',' << c.payloads_deferred << ',' << c.storage_bytes << ','
            << c.reference_bytes << '\n';
    }
}

void write_uplink_csv(std::ostream& out, const RunResult& r) {
    out << "satellite,time,cell,band,tiles,bytes,status\n";
    for (const auto& u : r.uplinks) {
        out << u.satellite << ',' << u.time << ',' << u.cell_id << ',';
        if (u.band >= 0) out << u.band;
        out << ',' << u.tiles << ',' << u.bytes << ',' << (u.admitted ? "admitted" : "skipped") << '\n';
    }
}

void write_outputs(const RunResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto emit = [&](const char* name, void (*fn)(std::ostream&, const RunResult&)) {
        std::ofstream f(dir / name, std::ios::binary);
        f.precision(10);
        fn(f, r);
        if (!f) throw Error(ErrorCode::Usage, std::string("cannot write ") + (dir / name).string());
    };
    emit("metrics.csv", write_metrics_csv);
    emit("images.csv", write_images_csv);
    emit("contacts.csv", write_contacts_csv);
    emit("uplink.csv", write_uplink_csv);
}

std::vector<RunResult> run_many(const std::vector<ScenarioConfig>& configs) {
    std::vector<RunResult> out(configs.size());
    parallel_for(static_cast<int>(configs.size()), [&](int i) { out[i] = run(configs[i]); });
    return out;
}

double AgeSamples::mean() const { return mean_of(ages); }

std::vector<AgeSamples> reference_age_experiment(const ScenarioConfig& base, const std::vector<int>& counts) {
    std::vector<ScenarioConfig> cfgs;
    for (int n : counts) {
        for (Strategy s : {Strategy::SatLocal, Strategy::Constellation}) {
            ScenarioConfig c = base;
            c.satellites = n;
            c.strategy = s;
            if (!base.periods.empty()) c.periods.assign(n, base.periods.front());
            if (!base.phases.empty()) {
                c.phases.resize(n);
                for (int i = 0; i < n; ++i) c.phases[i] = base.phases.front() + c.periods[i] * i / n;
            }
            cfgs.push_back(c);
        }
    }
    const auto runs = run_many(cfgs);
    std::vector<AgeSamples> out;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        AgeSamples a;
        a.satellites = cfgs[i].satellites;
        a.strategy = cfgs[i].strategy;
        for (const auto& r : runs[i].images) {
            if (r.measured && r.has_reference) a.ages.push_back(r.reference_age);
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<CompressionPoint> compression_vs_constellation(const ScenarioConfig& base, const std::vector<int>& counts,
                                                           const std::vector<std::uint64_t>& seeds) {
    std::vector<ScenarioConfig> cfgs;
    for (int n : counts) {
        for (std::uint64_t seed : seeds) {
            ScenarioConfig c = base;
            c.satellites = n;
            c.seed = seed;
            c.strategy = Strategy::Constellation;
            c.periods.clear();
            c.phases.clear();
            cfgs.push_back(c);
        }
    }
    const auto runs = run_many(cfgs);
    std::vector<CompressionPoint> out;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        CompressionPoint p;
        p.satellites = counts[i];
        for (std::size_t k = 0; k < seeds.size(); ++k) p.mean_changed_fraction += runs[i * seeds.size() + k].ledger.mean_coded_fraction;
        p.mean_changed_fraction /= static_cast<double>(seeds.size());
        p.ratio = p.mean_changed_fraction > 0 ? 1.0 / p.mean_changed_fraction : INFINITY;
        out.push_back(p);
    }
    return out;
}

std::vector<TradeoffPoint> downlink_quality_tradeoff(const ScenarioConfig& base, const std::vector<Strategy>& strategies,
                                                     const std::vector<double>& gammas) {
    std::vector<ScenarioConfig> cfgs;
    for (Strategy s : strategies) {
        for (double g : gammas) {
            ScenarioConfig c = base;
            c.strategy = s;
            c.rate.gamma = g;
            cfgs.push_back(c);
        }
    }
    const auto runs = run_many(cfgs);
    std::vector<TradeoffPoint> out;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& m = runs[i].ledger;
        out.push_back({cfgs[i].strategy, cfgs[i].rate.gamma, m.mean_psnr, m.downlink_bandwidth_bps, m.mean_downlink_bytes});
    }
    return out;
}

}  // namespace erp
