#include "erp/refstore.hpp"

#include <bit>

#include "erp/bytes.hpp"

namespace erp {

BlockIndex::BlockIndex(const BlockGrid& grid) : rows_(grid.rows()), cols_(grid.cols()) {
    if (rows_ <= 0 || cols_ <= 0) return;
    const int tile_rows = grid.row_tile.back() + 1;
    const int tile_cols = grid.col_tile.back() + 1;
    blocks_.resize(static_cast<std::size_t>(tile_rows) * tile_cols);
    for (int r = 0; r < rows_; ++r) {
        for (int c = 0; c < cols_; ++c) {
            blocks_[static_cast<std::size_t>(grid.row_tile[r]) * tile_cols + grid.col_tile[c]].emplace_back(r, c);
        }
    }
}

std::size_t ReferenceDiff::wire_bytes() const {
    std::size_t n = 8 + 1 + 8 + 4;
    for (const auto& t : tiles) n += 4 + 2 + 4 * t.samples.size();
    return n;
}

std::vector<std::uint8_t> ReferenceDiff::serialize() const {
    ByteWriter w;
    w.u64(cell_id);
    w.u8(static_cast<std::uint8_t>(band_id));
    w.f64(source_captured_at);
    w.u32(static_cast<std::uint32_t>(tiles.size()));
    for (const auto& t : tiles) {
        w.u32(t.tile);
        w.u16(static_cast<std::uint16_t>(t.samples.size()));
        for (float v : t.samples) w.f32(v);
    }
    return w.take();
}

ReferenceDiff ReferenceDiff::parse(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    ReferenceDiff d;
    d.cell_id = r.u64();
    d.band_id = r.u8();
    d.source_captured_at = r.f64();
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        DiffTile t;
        t.tile = r.u32();
        const std::uint16_t n = r.u16();
        if (!d.tiles.empty() && t.tile <= d.tiles.back().tile) {
            throw Error(ErrorCode::FormatError, "diff tile indices must be strictly increasing");
        }
        t.samples.resize(n);
        for (auto& v : t.samples) v = r.f32();
        d.tiles.push_back(std::move(t));
    }
    if (r.remaining() != 0) throw Error(ErrorCode::FormatError, "trailing bytes after reference diff");
    return d;
}

ReferenceDiff make_diff(std::uint64_t cell_id, int band_id, double source_captured_at, const Band& ground_new,
                        const Band* cached, const BlockIndex& index) {
    if (ground_new.rows() != index.rows() || ground_new.cols() != index.cols()) {
        throw Error(ErrorCode::InvalidArgument, "ground raster does not match the reference grid");
    }
    if (cached && (cached->rows() != index.rows() || cached->cols() != index.cols())) {
        throw Error(ErrorCode::InvalidArgument, "cached raster does not match the reference grid");
    }
    ReferenceDiff d;
    d.cell_id = cell_id;
    d.band_id = band_id;
    d.source_captured_at = source_captured_at;
    for (int t = 0; t < index.tile_count(); ++t) {
        const auto& blocks = index.blocks(t);
        bool differs = cached == nullptr;
        for (std::size_t i = 0; i < blocks.size() && !differs; ++i) {
            const auto [r, c] = blocks[i];
            differs = std::bit_cast<std::uint32_t>(ground_new(r, c)) != std::bit_cast<std::uint32_t>((*cached)(r, c));
        }
        if (!differs) continue;
        DiffTile dt;
        dt.tile = static_cast<std::uint32_t>(t);
        for (const auto& [r, c] : blocks) dt.samples.push_back(ground_new(r, c));
        d.tiles.push_back(std::move(dt));
    }
    return d;
}

std::size_t full_diff_bytes(const BlockIndex& index) {
    std::size_t n = 8 + 1 + 8 + 4;
    for (int t = 0; t < index.tile_count(); ++t) n += 4 + 2 + 4 * index.blocks(t).size();
    return n;
}

const ReferenceEntry* ReferenceStore::find(std::uint64_t cell_id, int band_id) const {
    const auto it = entries_.find({cell_id, band_id});
    return it == entries_.end() ? nullptr : &it->second;
}

void ReferenceStore::apply_diff(const ReferenceDiff& diff, double now) {
    const auto key = std::make_pair(diff.cell_id, diff.band_id);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        if (static_cast<int>(diff.tiles.size()) != index_.tile_count()) {
            throw Error(ErrorCode::BootstrapRequired, "partial diff for uncached cell " + std::to_string(diff.cell_id) +
                                                          " band " + std::to_string(diff.band_id));
        }
        ReferenceEntry e;
        e.cell_id = diff.cell_id;
        e.band_id = diff.band_id;
        e.raster = Band::Zero(index_.rows(), index_.cols());
        it = entries_.emplace(key, std::move(e)).first;
    }
    ReferenceEntry& e = it->second;
    for (const auto& t : diff.tiles) {
        if (t.tile >= static_cast<std::uint32_t>(index_.tile_count())) {
            throw Error(ErrorCode::InvalidArgument, "diff tile index out of range");
        }
        const auto& blocks = index_.blocks(static_cast<int>(t.tile));
        if (blocks.size() != t.samples.size()) throw Error(ErrorCode::InvalidArgument, "diff tile sample count mismatch");
        for (std::size_t i = 0; i < blocks.size(); ++i) e.raster(blocks[i].first, blocks[i].second) = t.samples[i];
    }
    e.source_captured_at = diff.source_captured_at;
    e.uploaded_at = now;
}

void ReferenceStore::put(ReferenceEntry entry) {
    if (entry.raster.rows() != index_.rows() || entry.raster.cols() != index_.cols()) {
        throw Error(ErrorCode::InvalidArgument, "reference raster does not match the reference grid");
    }
    const auto key = std::make_pair(entry.cell_id, entry.band_id);
    entries_.insert_or_assign(key, std::move(entry));
}

std::size_t entry_bytes(const ReferenceEntry& entry) {
    return 8 + 1 + 8 + 8 + 4 * static_cast<std::size_t>(entry.raster.size());
}

std::size_t ReferenceStore::bytes() const {
    std::size_t n = 0;
    for (const auto& [k, e] : entries_) n += entry_bytes(e);
    return n;
}

void StorageLedger::update(std::uint64_t captured_bytes, std::uint64_t reference_bytes) {
    captured = captured_bytes;
    reference = reference_bytes;
    high_water = std::max(high_water, total());
    if (total() > budget) {
        throw Error(ErrorCode::BudgetViolation, "onboard storage " + std::to_string(total()) + " bytes (captured " +
                                                    std::to_string(captured) + ", reference " +
                                                    std::to_string(reference) + ") exceeds budget " +
                                                    std::to_string(budget));
    }
}

StorageEstimate storage_estimate(double a, double coefficient, double multiple, double factor) {
    if (a < 0 || coefficient <= 0 || multiple <= 0 || factor <= 0) {
        throw Error(ErrorCode::InvalidArgument, "storage_estimate inputs must be positive");
    }
    StorageEstimate s;
    s.captured_mb = 2.0 * coefficient * a;
    s.reference_mb = coefficient * multiple * a / factor;
    s.ratio = s.captured_mb > 0 ? s.reference_mb / s.captured_mb : 0.0;
    s.stated_reference_mb = 0.08 * a;
    return s;
}

}  // namespace erp
