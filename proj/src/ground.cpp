#include "erp/ground.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "erp/rng.hpp"

namespace erp {

ArchiveRecord& GroundArchive::add(ArchiveRecord record) {
    auto& v = cells_[record.cell_id];
    const auto pos = std::upper_bound(v.begin(), v.end(), record.captured_at,
                                      [](double t, const ArchiveRecord& r) { return t < r.captured_at; });
    return *v.insert(pos, std::move(record));
}

const ArchiveRecord* GroundArchive::find(std::uint64_t cell_id, double captured_at) const {
    const auto it = cells_.find(cell_id);
    if (it == cells_.end()) return nullptr;
    for (const auto& r : it->second) {
        if (r.captured_at == captured_at) return &r;
    }
    return nullptr;
}

const std::vector<ArchiveRecord>& GroundArchive::records(std::uint64_t cell_id) const {
    static const std::vector<ArchiveRecord> empty;
    const auto it = cells_.find(cell_id);
    return it == cells_.end() ? empty : it->second;
}

std::vector<std::uint64_t> GroundArchive::cells() const {
    std::vector<std::uint64_t> out;
    for (const auto& [c, v] : cells_) out.push_back(c);
    return out;
}

void GroundArchive::release_except(const std::set<std::pair<std::uint64_t, double>>& keep) {
    for (auto& [c, v] : cells_) {
        for (auto& r : v) {
            if (r.image && !keep.count({c, r.captured_at})) r.image.reset();
        }
    }
}

std::size_t GroundArchive::retained_images() const {
    std::size_t n = 0;
    for (const auto& [c, v] : cells_) {
        for (const auto& r : v) n += r.image != nullptr;
    }
    return n;
}

void GroundArchive::write_csv(std::ostream& out) const {
    out << "cell,captured_at,satellite,cloud_coverage,full_download,complete,retained\n";
    for (const auto& [c, v] : cells_) {
        for (const auto& r : v) {
            out << c << ',' << r.captured_at << ',' << r.satellite << ',' << r.cloud_coverage << ','
                << r.full_download << ',' << r.complete << ',' << (r.image != nullptr) << '\n';
        }
    }
}

bool reference_eligible(const ArchiveRecord& r, const ReferencePolicy& policy) {
    return r.image && r.complete && r.cloud_coverage < policy.max_cloud &&
           (r.full_download || policy.reconstructed_eligible);
}

const ArchiveRecord* select_reference(const GroundArchive& archive, std::uint64_t cell_id, double now,
                                      const ReferencePolicy& policy) {
    const auto& v = archive.records(cell_id);
    if (policy.earliest) {
        for (const auto& r : v) {
            if (r.captured_at <= now && reference_eligible(r, policy)) return &r;
        }
        return nullptr;
    }
    for (auto it = v.rbegin(); it != v.rend(); ++it) {
        if (it->captured_at <= now && reference_eligible(*it, policy)) return &*it;
    }
    return nullptr;
}

UplinkPlan plan_uplink(int contact_id, const std::vector<UplinkTarget>& targets, const ReferenceStore& shadow,
                       std::size_t budget_bytes, UplinkPolicy policy, std::uint64_t seed,
                       std::size_t control_bytes_per_cell, std::size_t upcoming_cells) {
    UplinkPlan plan;
    plan.contact_id = contact_id;
    const std::size_t control = control_bytes_per_cell * upcoming_cells;
    const bool control_fits = control <= budget_bytes;
    if (control_fits) plan.control_bytes = control;
    std::size_t left = control_fits ? budget_bytes - control : 0;

    struct Candidate {
        std::size_t target;
        double cached_source;  // -inf when nothing cached
        std::vector<ReferenceDiff> diffs;
        std::size_t bytes;
    };
    std::vector<Candidate> cand;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const UplinkTarget& t = targets[i];
        Candidate c{i, -INFINITY, {}, 0};
        bool needed = false;
        for (std::size_t b = 0; b < t.rasters.size(); ++b) {
            const ReferenceEntry* e = shadow.find(t.cell_id, static_cast<int>(b));
            if (e) c.cached_source = b == 0 ? e->source_captured_at : std::min(c.cached_source, e->source_captured_at);
            ReferenceDiff d = make_diff(t.cell_id, static_cast<int>(b), t.source_captured_at, *t.rasters[b],
                                        e ? &e->raster : nullptr, shadow.index());
            if (!e || e->source_captured_at != t.source_captured_at || !d.tiles.empty()) needed = true;
            c.bytes += d.wire_bytes();
            c.diffs.push_back(std::move(d));
        }
        if (needed) cand.push_back(std::move(c));
    }

    std::vector<std::size_t> order(cand.size());
    std::iota(order.begin(), order.end(), 0);
    if (policy == UplinkPolicy::OldestFirst) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (cand[a].cached_source != cand[b].cached_source) return cand[a].cached_source < cand[b].cached_source;
            return targets[cand[a].target].cell_id < targets[cand[b].target].cell_id;
        });
    } else {
        Stream rng(hash_key({seed, static_cast<std::uint64_t>(contact_id)}));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(static_cast<int>(i))]);
    }

    for (std::size_t i : order) {
        Candidate& c = cand[i];
        const std::uint64_t cell = targets[c.target].cell_id;
        if (control_fits && c.bytes <= left) {
            left -= c.bytes;
            plan.total_bytes += c.bytes;
            plan.admitted.push_back(cell);
            for (auto& d : c.diffs) plan.diffs.push_back(std::move(d));
        } else {
            plan.skipped.push_back(cell);
        }
    }
    plan.total_bytes += plan.control_bytes;
    return plan;
}

bool schedule_guaranteed_download(double last_full, double now, double coverage, double period_days,
                                  double max_cloud) {
    if (period_days <= 0) return false;
    if (!(coverage < max_cloud)) return false;
    return std::isnan(last_full) || now - last_full >= period_days;
}

void write_plan_csv(std::ostream& out, const UplinkPlan& plan, int satellite, double now, bool header) {
    if (header) out << "contact,satellite,time,cell,band,tiles,bytes,status\n";
    for (const auto& d : plan.diffs) {
        out << plan.contact_id << ',' << satellite << ',' << now << ',' << d.cell_id << ',' << d.band_id << ','
            << d.tiles.size() << ',' << d.wire_bytes() << ",admitted\n";
    }
    for (std::uint64_t c : plan.skipped) {
        out << plan.contact_id << ',' << satellite << ',' << now << ',' << c << ",,,0,skipped\n";
    }
}

}  // namespace erp
