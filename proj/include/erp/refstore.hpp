#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "erp/raster.hpp"

namespace erp {

struct ReferenceEntry {
    std::uint64_t cell_id = 0;
    int band_id = 0;
    Band raster;  // tile-nested block means
    double source_captured_at = 0.0;
    double uploaded_at = 0.0;

    bool operator==(const ReferenceEntry& o) const {
        return cell_id == o.cell_id && band_id == o.band_id && source_captured_at == o.source_captured_at &&
               uploaded_at == o.uploaded_at && raster.rows() == o.raster.rows() && raster.cols() == o.raster.cols() &&
               (raster == o.raster).all();
    }
};

/// Replacement samples for the blocks of one 64-px tile, row-major over the
/// tile's blocks.
struct DiffTile {
    std::uint32_t tile = 0;
    std::vector<float> samples;

    bool operator==(const DiffTile&) const = default;
};

/// Wire layout, little-endian:
///   u64 cell_id | u8 band_id | f64 source_captured_at | u32 count |
///   count x (u32 tile, u16 n, n x f32)
struct ReferenceDiff {
    std::uint64_t cell_id = 0;
    int band_id = 0;
    double source_captured_at = 0.0;
    std::vector<DiffTile> tiles;

    std::size_t wire_bytes() const;
    std::vector<std::uint8_t> serialize() const;
    static ReferenceDiff parse(std::span<const std::uint8_t> bytes);

    bool operator==(const ReferenceDiff&) const = default;
};

/// Tiles of `grid` in row-major tile order, each listing its block cells.
class BlockIndex {
public:
    BlockIndex() = default;
    explicit BlockIndex(const BlockGrid& grid);

    int tile_count() const { return static_cast<int>(blocks_.size()); }
    const std::vector<std::pair<int, int>>& blocks(int tile) const { return blocks_[tile]; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }

private:
    std::vector<std::vector<std::pair<int, int>>> blocks_;
    int rows_ = 0, cols_ = 0;
};

/// Tiles whose blocks differ bitwise between `ground_new` and `cached`; every
/// tile when `cached` is null.
ReferenceDiff make_diff(std::uint64_t cell_id, int band_id, double source_captured_at, const Band& ground_new,
                        const Band* cached, const BlockIndex& index);

/// Size of a diff that replaces every tile.
std::size_t full_diff_bytes(const BlockIndex& index);

/// One satellite's reference cache.
class ReferenceStore {
public:
    ReferenceStore() = default;
    explicit ReferenceStore(const BlockIndex& index) : index_(index) {}

    const ReferenceEntry* find(std::uint64_t cell_id, int band_id) const;
    bool contains(std::uint64_t cell_id, int band_id) const { return find(cell_id, band_id) != nullptr; }

    /// Throws BootstrapRequired for a partial diff without a cached entry.
    void apply_diff(const ReferenceDiff& diff, double now);

    /// Installs a raster produced onboard (satellite-local updates).
    void put(ReferenceEntry entry);

    std::size_t bytes() const;
    std::size_t size() const { return entries_.size(); }
    const BlockIndex& index() const { return index_; }

    bool operator==(const ReferenceStore& o) const { return entries_ == o.entries_; }

private:
    BlockIndex index_;
    std::map<std::pair<std::uint64_t, int>, ReferenceEntry> entries_;
};

/// Bytes one cached entry occupies.
std::size_t entry_bytes(const ReferenceEntry& entry);

/// Onboard storage accounting; exceeding the budget is a BudgetViolation.
struct StorageLedger {
    std::uint64_t budget = 360ull * 1000 * 1000 * 1000;
    std::uint64_t captured = 0;
    std::uint64_t reference = 0;
    std::uint64_t high_water = 0;

    std::uint64_t total() const { return captured + reference; }
    void update(std::uint64_t captured_bytes, std::uint64_t reference_bytes);
};

struct StorageEstimate {
    double captured_mb = 0.0;
    double reference_mb = 0.0;
    double ratio = 0.0;
    // constants as printed in the source analysis, for side-by-side reporting
    double stated_reference_mb = 0.0;
    double stated_ratio = 0.09;
};

StorageEstimate storage_estimate(double area_per_contact_km2, double coefficient_mb_per_km2 = 0.87,
                                 double revisit_coverage_multiple = 160.0, double downsample_area_factor = 2601.0);

}  // namespace erp
