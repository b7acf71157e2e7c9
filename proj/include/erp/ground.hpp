#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <vector>

#include "erp/raster.hpp"
#include "erp/refstore.hpp"

namespace erp {

struct ArchiveRecord {
    std::uint64_t cell_id = 0;
    double captured_at = 0.0;
    int satellite = -1;
    TilePlane<bool> cloudy;      // ground re-detection
    double cloud_coverage = 0.0;
    bool full_download = false;
    bool complete = false;       // every pixel reconstructed
    std::shared_ptr<const Image> image;  // released once nothing can reference it
};

/// Everything the ground has received, per cell in capture-time order.
class GroundArchive {
public:
    ArchiveRecord& add(ArchiveRecord record);

    const ArchiveRecord* find(std::uint64_t cell_id, double captured_at) const;
    const std::vector<ArchiveRecord>& records(std::uint64_t cell_id) const;
    std::vector<std::uint64_t> cells() const;

    /// Drops full rasters of records not in `keep` (cell, captured_at).
    void release_except(const std::set<std::pair<std::uint64_t, double>>& keep);
    std::size_t retained_images() const;

    void write_csv(std::ostream& out) const;

private:
    std::map<std::uint64_t, std::vector<ArchiveRecord>> cells_;
};

/// Stand-in for the accurate ground detector: the generator's labels.
inline TilePlane<bool> redetect_clouds_ground(const TilePlane<bool>& generator_truth) { return generator_truth; }

struct ReferencePolicy {
    double max_cloud = 0.01;            // whole-image coverage must stay below
    bool reconstructed_eligible = true; // otherwise only full downloads qualify
    bool earliest = false;              // fixed-reference baseline
};

bool reference_eligible(const ArchiveRecord& r, const ReferencePolicy& policy);

/// Newest eligible record captured at or before `now` (earliest under
/// `policy.earliest`), or null.
const ArchiveRecord* select_reference(const GroundArchive& archive, std::uint64_t cell_id, double now,
                                      const ReferencePolicy& policy = {});

/// Reference wanted onboard for one cell: downsampled rasters per band.
struct UplinkTarget {
    std::uint64_t cell_id = 0;
    double source_captured_at = 0.0;
    std::vector<const Band*> rasters;
};

enum class UplinkPolicy { OldestFirst, Random };

struct UplinkPlan {
    int contact_id = 0;
    std::vector<ReferenceDiff> diffs;
    std::vector<std::uint64_t> admitted;
    std::vector<std::uint64_t> skipped;
    std::size_t control_bytes = 0;
    std::size_t total_bytes = 0;
};

/// Admits whole-cell updates first-fit, cells with the oldest cached
/// reference first (ties by cell id), or in seeded random order. Up-to-date
/// cells cost nothing. `control_bytes_per_cell` are reserved per upcoming cell
/// before any diff; with too little budget for them everything is skipped.
UplinkPlan plan_uplink(int contact_id, const std::vector<UplinkTarget>& targets, const ReferenceStore& shadow,
                       std::size_t budget_bytes, UplinkPolicy policy = UplinkPolicy::OldestFirst,
                       std::uint64_t seed = 0, std::size_t control_bytes_per_cell = 0,
                       std::size_t upcoming_cells = 0);

/// Monthly full download rule; a non-positive period disables it. A cell
/// never fully downloaded is due at its first clear capture.
bool schedule_guaranteed_download(double last_full, double now, double coverage, double period_days = 30.0,
                                  double max_cloud = 0.01);

void write_plan_csv(std::ostream& out, const UplinkPlan& plan, int satellite, double now, bool header);

}  // namespace erp
