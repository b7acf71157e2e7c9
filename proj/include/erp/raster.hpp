#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "erp/error.hpp"

namespace erp {

template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One spectral band: unit-interval samples, row-major.
using Band = Plane<float>;
using PixelMask = Plane<bool>;

/// Per-tile value grid (rows x cols of the TileGrid).
template <typename T>
using TilePlane = Plane<T>;

/// Tiles with no valid pixel report this instead of a difference.
inline constexpr double kNotObservable = -1.0;
inline constexpr double kInfDb = std::numeric_limits<double>::infinity();
inline constexpr double kPsnrCapDb = 99.0;

struct Image {
    std::uint64_t cell_id = 0;
    double captured_at = 0.0;  // days
    std::vector<Band> bands;

    int height() const { return bands.empty() ? 0 : static_cast<int>(bands.front().rows()); }
    int width() const { return bands.empty() ? 0 : static_cast<int>(bands.front().cols()); }
    int band_count() const { return static_cast<int>(bands.size()); }
};

/// Throws InvalidArgument unless all bands agree in size, samples lie in
/// [0,1] and captured_at >= 0.
void validate(const Image& image);

struct Rect {
    int y = 0, x = 0, h = 0, w = 0;
    long area() const { return static_cast<long>(h) * w; }
};

/// Square tiling of an H x W raster; right/bottom tiles may be partial.
class TileGrid {
public:
    TileGrid() = default;
    TileGrid(int height, int width, int tile_size = 64);

    int height() const { return height_; }
    int width() const { return width_; }
    int tile_size() const { return tile_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int count() const { return rows_ * cols_; }

    Rect tile(int row, int col) const;
    Rect tile(int index) const { return tile(index / cols_, index % cols_); }

    bool operator==(const TileGrid&) const = default;

private:
    int height_ = 0, width_ = 0, tile_ = 64, rows_ = 0, cols_ = 0;
};

/// Partition of a raster into rectangular averaging blocks. `uniform` is the
/// plain factor-f grid anchored at the origin; `nested` restarts the grid at
/// every tile border so no block straddles two tiles.
struct BlockGrid {
    std::vector<int> row_edges;  // rows()+1 pixel boundaries
    std::vector<int> col_edges;
    std::vector<int> row_tile;   // tile row of each block row
    std::vector<int> col_tile;

    int rows() const { return static_cast<int>(row_edges.size()) - 1; }
    int cols() const { return static_cast<int>(col_edges.size()) - 1; }
    Rect block(int r, int c) const {
        return {row_edges[r], col_edges[c], row_edges[r + 1] - row_edges[r],
                col_edges[c + 1] - col_edges[c]};
    }

    static BlockGrid uniform(int height, int width, int factor, int tile_size = 64);
    static BlockGrid nested(const TileGrid& tiles, int factor);

    bool operator==(const BlockGrid&) const = default;
};

/// Area-mean of each block, accumulated in double.
Band block_mean(const Band& band, const BlockGrid& grid);

/// Block-mean downsampling on the uniform grid: ceil(H/f) x ceil(W/f).
Band downsample(const Band& band, int factor);

/// Block-mean downsampling on the tile-nested grid (reference rasters).
Band downsample_tiled(const Band& band, const TileGrid& tiles, int factor);

/// Mean |a-b| over the valid pixels of each tile; kNotObservable when a tile
/// has no valid pixel.
TilePlane<double> tile_mean_abs_diff(const Band& a, const Band& b, const TileGrid& grid,
                                     const PixelMask& valid);

PixelMask full_mask(int height, int width, bool value = true);

template <typename DerivedA, typename DerivedB, typename DerivedM>
double masked_squared_error(const Eigen::ArrayBase<DerivedA>& a, const Eigen::ArrayBase<DerivedB>& b,
                            const Eigen::ArrayBase<DerivedM>& valid, long& count) {
    const auto n = static_cast<long>(valid.count());
    count += n;
    if (n == valid.size()) return (a.template cast<double>() - b.template cast<double>()).square().sum();
    return valid.select((a.template cast<double>() - b.template cast<double>()).square(), 0.0).sum();
}

/// 10 log10(1/MSE) for unit-peak samples; kInfDb when MSE is zero.
inline double psnr_from_mse(double mse) {
    return mse <= 0.0 ? kInfDb : 10.0 * std::log10(1.0 / mse);
}

inline double cap_db(double db, double cap = kPsnrCapDb) { return db > cap ? cap : db; }

struct PsnrReport {
    std::vector<double> per_band;
    double aggregate = 0.0;
};

PsnrReport psnr(const Image& original, const Image& reconstructed, const PixelMask& valid);

}  // namespace erp
